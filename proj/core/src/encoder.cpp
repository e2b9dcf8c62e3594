#include "iur/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace iur::encoder {

using nn::TensorPtr;

namespace {

TensorPtr linear(const Model& m, const std::string& w, const std::string& b, const TensorPtr& x) {
  return nn::add_rowvec(nn::matmul(x, m.params.get(w)), m.params.get(b));
}

TensorPtr attention_block(const Model& m, int layer, const TensorPtr& x, EncoderTrace* trace) {
  const auto& cfg = m.cfg.encoder;
  const int d = cfg.d_model;
  const int dh = d / cfg.n_heads;
  const std::string base = "enc.l" + std::to_string(layer) + ".attn.";
  const TensorPtr q = linear(m, base + "wq", base + "bq", x);
  const TensorPtr k = linear(m, base + "wk", base + "bk", x);
  const TensorPtr v = linear(m, base + "wv", base + "bv", x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<TensorPtr> head_outputs;
  head_outputs.reserve(static_cast<std::size_t>(cfg.n_heads));
  for (int h = 0; h < cfg.n_heads; ++h) {
    const int c0 = h * dh, c1 = (h + 1) * dh;
    const TensorPtr qh = nn::slice_cols(q, c0, c1);
    const TensorPtr kh = nn::slice_cols(k, c0, c1);
    const TensorPtr vh = nn::slice_cols(v, c0, c1);
    const TensorPtr scores = nn::mul_scalar(nn::matmul(qh, nn::transpose(kh)), scale);
    const TensorPtr probs = nn::softmax_rows(scores);
    if (trace) trace->attention.push_back(probs->value);
    head_outputs.push_back(nn::matmul(probs, vh));
  }
  const TensorPtr merged = nn::concat_cols(head_outputs);
  return linear(m, base + "wo", base + "bo", merged);
}

TensorPtr ffn_block(const Model& m, int layer, const TensorPtr& x) {
  const std::string base = "enc.l" + std::to_string(layer) + ".ffn.";
  return linear(m, base + "w2", base + "b2", nn::gelu(linear(m, base + "w1", base + "b1", x)));
}

}  // namespace

TensorPtr encode_ids(const Model& m, const std::vector<int>& ids, bool train, Rng* dropout_rng,
                     EncoderTrace* trace) {
  const auto& cfg = m.cfg.encoder;
  const int len = static_cast<int>(ids.size());
  if (len == 0) throw std::invalid_argument("encode_ids: empty input");
  if (len > cfg.max_len)
    throw std::invalid_argument("encode_ids: input length " + std::to_string(len) +
                                " exceeds max_len " + std::to_string(cfg.max_len));
  if (trace) {
    trace->seq_len = len;
    trace->attention.clear();
  }

  std::vector<int> positions(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;
  TensorPtr x = nn::add(nn::embedding(m.params.get("embed.tok"), ids),
                        nn::embedding(m.params.get("embed.pos"), positions));

  const bool use_dropout = train && cfg.dropout > 0.0 && dropout_rng != nullptr;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string base = "enc.l" + std::to_string(l) + ".";
    TensorPtr attn = attention_block(m, l, x, trace);
    if (use_dropout) attn = nn::dropout(attn, cfg.dropout, *dropout_rng);
    x = nn::layer_norm(nn::add(x, attn), m.params.get(base + "ln1.gamma"),
                       m.params.get(base + "ln1.beta"));
    TensorPtr ff = ffn_block(m, l, x);
    if (use_dropout) ff = nn::dropout(ff, cfg.dropout, *dropout_rng);
    x = nn::layer_norm(nn::add(x, ff), m.params.get(base + "ln2.gamma"),
                       m.params.get(base + "ln2.beta"));
  }
  return x;
}

std::pair<std::vector<TensorPtr>, TensorPtr> pool_utterances(
    const TensorPtr& hidden, const std::vector<std::pair<int, int>>& spans) {
  if (spans.empty()) throw std::invalid_argument("pool_utterances: no spans");
  std::vector<TensorPtr> pooled;
  pooled.reserve(spans.size());
  for (const auto& [start, end] : spans) {
    if (start >= end) throw std::invalid_argument("pool_utterances: empty span");
    pooled.push_back(nn::mean_rows(hidden, start, end));
  }
  TensorPtr incomplete = pooled.back();
  pooled.pop_back();
  return {std::move(pooled), std::move(incomplete)};
}

EncoderOutput encode(const Model& m, const corpus::EncodedExample& ex, bool train,
                     Rng* dropout_rng, EncoderTrace* trace) {
  EncoderOutput out;
  out.hidden = encode_ids(m, ex.token_ids, train, dropout_rng, trace);
  auto [context, incomplete] = pool_utterances(out.hidden, ex.segment_spans);
  out.context = std::move(context);
  out.incomplete = std::move(incomplete);
  return out;
}

TensorPtr encode_rewrite(const Model& m, const corpus::TokenList& rewrite, bool train,
                         Rng* dropout_rng) {
  if (rewrite.empty()) throw std::invalid_argument("encode_rewrite: rewrite is absent or empty");
  const TensorPtr hidden = encode_ids(m, m.vocab.ids(rewrite), train, dropout_rng);
  return nn::mean_rows(hidden, 0, hidden->dim(0));
}

}  // namespace iur::encoder
