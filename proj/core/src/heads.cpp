#include "iur/heads.hpp"

#include <cmath>
#include <stdexcept>

namespace iur::heads {

using nn::TensorPtr;

namespace {

TensorPtr mlp2(const Model& m, const std::string& prefix, const TensorPtr& rows) {
  const TensorPtr h = nn::gelu(nn::add_rowvec(nn::matmul(rows, m.params.get(prefix + ".w1")),
                                              m.params.get(prefix + ".b1")));
  return nn::add_rowvec(nn::matmul(h, m.params.get(prefix + ".w2")),
                        m.params.get(prefix + ".b2"));
}

int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

// 1 inside the valid region, 0 in the padding.
std::vector<double> valid_mask(int valid_h, int valid_w, int h, int w) {
  std::vector<double> mask(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0.0);
  for (int i = 0; i < valid_h; ++i)
    for (int j = 0; j < valid_w; ++j)
      mask[static_cast<std::size_t>(i) * static_cast<std::size_t>(w) +
           static_cast<std::size_t>(j)] = 1.0;
  return mask;
}

TensorPtr conv_stage(const Model& m, const std::string& name, const TensorPtr& x, int pad,
                     const std::vector<double>& mask) {
  const TensorPtr y =
      nn::gelu(nn::conv2d(x, m.params.get(name + ".w"), m.params.get(name + ".b"), pad));
  return nn::mask_hw(y, mask);
}

}  // namespace

TensorPtr select_contexts(const Model& m, const std::vector<TensorPtr>& context,
                          const TensorPtr& incomplete) {
  if (context.empty()) throw std::invalid_argument("select_contexts: no context vectors");
  std::vector<TensorPtr> rows;
  rows.reserve(context.size());
  for (const auto& c : context) rows.push_back(nn::concat_cols({c, incomplete}));
  const TensorPtr logits = mlp2(m, "select", nn::stack_rows(rows));
  const TensorPtr probs = nn::softmax_rows(logits);
  return nn::reshape(nn::slice_cols(probs, 1, 2), {static_cast<int>(context.size())});
}

TensorPtr match_head(const Model& m, const TensorPtr& rows) {
  const int expected = 2 * m.cfg.encoder.d_model;
  if (rows->rank() != 2 || rows->dim(1) != expected)
    throw std::invalid_argument("match_head: rows must be [n, 2*d_model]");
  const TensorPtr logits = mlp2(m, "match", rows);
  return nn::reshape(nn::sigmoid(logits), {rows->dim(0)});
}

TensorPtr match_score(const Model& m, const TensorPtr& c, const TensorPtr& u, const TensorPtr& r) {
  if (c->shape != u->shape || c->shape != r->shape)
    throw std::invalid_argument("match_score: c, u and r must share the encoder width");
  const TensorPtr row = nn::concat_cols({nn::add(c, u), r});
  return match_head(m, nn::stack_rows({row}));
}

EditGridResult edit_grid(const Model& m, const TensorPtr& hidden,
                         const corpus::EncodedExample& ex) {
  return edit_grid(m, hidden, ex, round_up(std::max(ex.n_context_tokens, 4), 4),
                   round_up(std::max(ex.n_incomplete_tokens, 4), 4));
}

EditGridResult edit_grid(const Model& m, const TensorPtr& hidden,
                         const corpus::EncodedExample& ex, int pad_rows, int pad_cols) {
  const int n_ctx = ex.n_context_tokens;
  const int n_utt = ex.n_incomplete_tokens;
  if (n_ctx < 1 || n_utt < 1) throw std::invalid_argument("edit_grid: empty grid");
  if (pad_rows < n_ctx || pad_cols < n_utt || pad_rows % 4 != 0 || pad_cols % 4 != 0)
    throw std::invalid_argument("edit_grid: padded size must be a multiple of 4 covering the grid");

  const TensorPtr ctx_states = nn::gather_rows(hidden, ex.context_positions());
  const TensorPtr utt_states = nn::gather_rows(hidden, ex.incomplete_positions());
  const TensorPtr features = nn::pairwise_features(ctx_states, utt_states);

  const int ph = pad_rows;
  const int pw = pad_cols;
  const auto mask0 = valid_mask(n_ctx, n_utt, ph, pw);
  const auto mask1 = valid_mask((n_ctx + 1) / 2, (n_utt + 1) / 2, ph / 2, pw / 2);
  const auto mask2 = valid_mask((n_ctx + 3) / 4, (n_utt + 3) / 4, ph / 4, pw / 4);

  TensorPtr x = nn::pad_hw(features, ph, pw);
  x = conv_stage(m, "unet.proj", x, 0, mask0);
  const TensorPtr e0 = conv_stage(m, "unet.enc0", x, 1, mask0);
  const TensorPtr e1 = conv_stage(m, "unet.enc1", nn::avg_pool2(e0), 1, mask1);
  const TensorPtr bottleneck = conv_stage(m, "unet.bott", nn::avg_pool2(e1), 1, mask2);
  const TensorPtr d1 =
      conv_stage(m, "unet.dec1", nn::concat_channels(nn::upsample2(bottleneck), e1), 1, mask1);
  const TensorPtr d0 =
      conv_stage(m, "unet.dec0", nn::concat_channels(nn::upsample2(d1), e0), 1, mask0);
  const TensorPtr logits =
      nn::conv2d(d0, m.params.get("unet.head.w"), m.params.get("unet.head.b"), 0);

  const TensorPtr rows = nn::chw_to_rows(nn::crop_hw(logits, n_ctx, n_utt));
  return EditGridResult{nn::softmax_rows(rows), n_ctx, n_utt};
}

TensorPtr merge_relevance(const EditGridResult& grid, const TensorPtr& relevance,
                          const std::vector<int>& owner, double alpha, MergeMode mode,
                          double tau) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("merge_relevance: alpha must be in [0,1]");
  if (static_cast<int>(owner.size()) != grid.n_ctx)
    throw std::invalid_argument("merge_relevance: owner size does not match grid rows");
  if (mode == MergeMode::kOff) return grid.probs;

  const int cells = grid.n_ctx * grid.n_utt;
  std::vector<int> owner_per_cell(static_cast<std::size_t>(cells));
  for (int i = 0; i < grid.n_ctx; ++i)
    for (int j = 0; j < grid.n_utt; ++j)
      owner_per_cell[static_cast<std::size_t>(i) * grid.n_utt + j] =
          owner[static_cast<std::size_t>(i)];

  TensorPtr adjusted;
  if (mode == MergeMode::kSoft) {
    const TensorPtr r_cell =
        nn::reshape(nn::gather_elems(relevance, owner_per_cell), {cells, 1});
    const TensorPtr split = nn::make_tensor({1, 3}, std::vector<double>{0.0, alpha, 1.0 - alpha});
    adjusted = nn::add(grid.probs, nn::matmul(r_cell, split));
  } else {
    std::vector<double> mask(static_cast<std::size_t>(cells) * 3, 1.0);
    for (int c = 0; c < cells; ++c)
      if (relevance->value[static_cast<std::size_t>(owner_per_cell[static_cast<std::size_t>(c)])] <
          tau) {
        mask[static_cast<std::size_t>(c) * 3 + 1] = 0.0;
        mask[static_cast<std::size_t>(c) * 3 + 2] = 0.0;
      }
    adjusted = nn::mul_constvec(grid.probs, std::move(mask));
  }
  const TensorPtr ones = nn::make_tensor({3, 1}, std::vector<double>(3, 1.0));
  const TensorPtr row_sums =
      nn::clamp_min(nn::reshape(nn::matmul(adjusted, ones), {cells}), 1e-12);
  return nn::mul_colvec(adjusted, nn::rcp(row_sums));
}

PredictedEditGrid merge_relevance(const PredictedEditGrid& grid, const std::vector<double>& r,
                                  const std::vector<int>& owner, double alpha, MergeMode mode,
                                  double tau) {
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("merge_relevance: alpha must be in [0,1]");
  if (static_cast<int>(owner.size()) != grid.n_ctx)
    throw std::invalid_argument("merge_relevance: owner size does not match grid rows");
  PredictedEditGrid out = grid;
  if (mode == MergeMode::kOff) return out;
  out.merged = true;
  for (int i = 0; i < grid.n_ctx; ++i) {
    const double ri = r[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])];
    for (int j = 0; j < grid.n_utt; ++j) {
      double* cell = out.cell(i, j);
      if (mode == MergeMode::kSoft) {
        cell[1] += alpha * ri;
        cell[2] += (1.0 - alpha) * ri;
      } else if (ri < tau) {
        cell[1] = 0.0;
        cell[2] = 0.0;
      }
      const double sum = std::max(cell[0] + cell[1] + cell[2], 1e-12);
      cell[0] /= sum;
      cell[1] /= sum;
      cell[2] /= sum;
    }
  }
  return out;
}

PredictedEditGrid to_plain_grid(const EditGridResult& grid, bool merged_flag,
                                const TensorPtr& probs) {
  PredictedEditGrid out(grid.n_ctx, grid.n_utt);
  out.merged = merged_flag;
  out.p = probs->value;
  return out;
}

IntentionPair intention_distributions(const Model& m, const std::vector<TensorPtr>& context,
                                      const TensorPtr& incomplete, const TensorPtr& rewrite,
                                      const std::vector<int>& positive_set) {
  if (positive_set.empty())
    throw std::invalid_argument("intention_distributions: empty positive set");
  std::vector<TensorPtr> positives;
  positives.reserve(positive_set.size());
  for (int idx : positive_set) {
    if (idx < 0 || idx >= static_cast<int>(context.size()))
      throw std::invalid_argument("intention_distributions: positive index out of range");
    positives.push_back(context[static_cast<std::size_t>(idx)]);
  }
  const TensorPtr stacked = nn::stack_rows(positives);
  const TensorPtr pooled = nn::mean_rows(stacked, 0, static_cast<int>(positives.size()));

  auto floored_softmax = [](const TensorPtr& logits) {
    const TensorPtr p = nn::clamp_min(nn::softmax_rows(logits), 1e-8);
    return nn::scale_by(p, nn::rcp(nn::sum_all(p)));
  };

  IntentionPair pair;
  const TensorPtr ctx_row = nn::stack_rows({nn::concat_cols({pooled, incomplete})});
  pair.p_ctx = floored_softmax(nn::reshape(mlp2(m, "intent.ctx", ctx_row), {m.cfg.d_int}));
  const TensorPtr rw_row = nn::stack_rows({rewrite});
  pair.p_rw = floored_softmax(nn::reshape(mlp2(m, "intent.rw", rw_row), {m.cfg.d_int}));
  return pair;
}

}  // namespace iur::heads
