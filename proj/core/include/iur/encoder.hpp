#pragma once

#include <utility>
#include <vector>

#include "iur/corpus.hpp"
#include "iur/model.hpp"
#include "iur/tensor.hpp"

namespace iur::encoder {

struct EncoderOutput {
  nn::TensorPtr hidden;                // token states, [L, d_model]
  std::vector<nn::TensorPtr> context;  // pooled context-utterance vectors c_i
  nn::TensorPtr incomplete;            // pooled incomplete-utterance vector u
};

// Per-layer, per-head attention probabilities captured for diagnostics.
struct EncoderTrace {
  int seq_len = 0;
  std::vector<std::vector<double>> attention;  // [n_layers*n_heads] x [L*L]
};

// Token states for an id sequence. Throws when ids exceed max_len.
nn::TensorPtr encode_ids(const Model& m, const std::vector<int>& ids, bool train = false,
                         Rng* dropout_rng = nullptr, EncoderTrace* trace = nullptr);

// Mean of the hidden rows in each span; the last span is the incomplete
// utterance. Empty spans are an error.
std::pair<std::vector<nn::TensorPtr>, nn::TensorPtr> pool_utterances(
    const nn::TensorPtr& hidden, const std::vector<std::pair<int, int>>& spans);

EncoderOutput encode(const Model& m, const corpus::EncodedExample& ex, bool train = false,
                     Rng* dropout_rng = nullptr, EncoderTrace* trace = nullptr);

// Mean-pooled standalone encoding of a gold rewrite with the same parameters.
nn::TensorPtr encode_rewrite(const Model& m, const corpus::TokenList& rewrite, bool train = false,
                             Rng* dropout_rng = nullptr);

}  // namespace iur::encoder
