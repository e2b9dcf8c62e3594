#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "iur/config.hpp"
#include "iur/corpus.hpp"
#include "iur/heads.hpp"
#include "iur/model.hpp"
#include "iur/supervision.hpp"
#include "iur/tensor.hpp"

namespace iur::objective {

// Per-batch loss values with the counts that contributed to each component.
// final_loss = edit + alpha_sel*sel + alpha_mat*mat + alpha_int*intention by
// construction; skipped components are recorded as 0 with count 0.
struct LossBreakdown {
  double edit = 0.0;
  double sel = 0.0;
  double mat = 0.0;
  double intention = 0.0;
  double final_loss = 0.0;
  std::int64_t edit_cells = 0;
  std::int64_t sel_utterances = 0;
  std::int64_t mat_pairs = 0;
  std::int64_t int_examples = 0;
  std::int64_t edit_examples = 0;
};

// Weight-normalized cell cross-entropy against the gold grid; probabilities
// are floored at 1e-8. Uniform predictions give ln 3 for any grid size and
// any weights.
nn::TensorPtr loss_edit(const nn::TensorPtr& probs, const supervision::GoldEditGrid& gold,
                        const std::array<double, 3>& class_weights);

// Mean binary cross-entropy of relevance probabilities against 0/1 labels.
nn::TensorPtr loss_sel(const nn::TensorPtr& relevance, const std::vector<int>& labels);

// Mean binary cross-entropy of matching scores against 0/1 labels.
nn::TensorPtr loss_mat(const nn::TensorPtr& scores, const std::vector<int>& labels);

// KL(p_ctx || p_rw); both inputs are floored strictly positive distributions.
nn::TensorPtr loss_int(const nn::TensorPtr& p_ctx, const nn::TensorPtr& p_rw);

// edit + a1*sel + a2*mat + a3*intention. Negative weights are an error.
nn::TensorPtr combine(const nn::TensorPtr& edit, const nn::TensorPtr& sel,
                      const nn::TensorPtr& mat, const nn::TensorPtr& intention, double a1,
                      double a2, double a3);

// Plain-value conveniences over the tensor implementations.
double loss_edit_value(const heads::PredictedEditGrid& grid, const supervision::GoldEditGrid& gold,
                       const std::array<double, 3>& class_weights);
double loss_sel_value(const std::vector<double>& relevance, const std::vector<int>& labels);
double loss_mat_value(const std::vector<double>& scores, const std::vector<int>& labels);
double loss_int_value(const std::vector<double>& p_ctx, const std::vector<double>& p_rw);

// Everything derivable from a dialogue before training starts.
struct PreparedExample {
  corpus::Dialogue dialogue;
  corpus::EncodedExample encoded;
  supervision::RelevanceLabels labels;
  supervision::GoldEditGrid gold;
  bool aligned = false;
};

PreparedExample prepare_example(const corpus::Dialogue& d, const corpus::Vocab& vocab);
std::vector<PreparedExample> prepare_corpus(const std::vector<corpus::Dialogue>& data,
                                            const corpus::Vocab& vocab);

// Negative utterances for the matching loss: k utterances drawn without
// replacement from other examples' contexts. Deterministic per (seed,
// dialogue id) and invariant to batch order. Returns (batch index,
// utterance index) pairs.
std::vector<std::pair<int, int>> sample_negatives(
    const std::vector<const PreparedExample*>& batch, std::size_t example_index, int k,
    std::uint64_t seed);

struct BatchResult {
  nn::TensorPtr final_loss;
  nn::TensorPtr edit;       // batch means; zero-valued constants when skipped
  nn::TensorPtr sel;
  nn::TensorPtr mat;
  nn::TensorPtr intention;
  LossBreakdown numbers;
};

// Forward pass and loss assembly for one batch. UNALIGNABLE examples
// contribute to the selection loss only; the matching loss needs a batch of
// at least two examples; intention terms are skipped when the positive set is
// empty.
BatchResult batch_losses(const Model& m, const std::vector<const PreparedExample*>& batch,
                         bool train = false, Rng* dropout_rng = nullptr);

}  // namespace iur::objective
