#include "iur/rewriter.hpp"

#include <algorithm>
#include <stdexcept>

#include "iur/config.hpp"
#include "iur/encoder.hpp"
#include "iur/heads.hpp"
#include "iur/model.hpp"

namespace iur::rewriter {

using supervision::EditType;
using supervision::GoldEditGrid;

namespace {

// Shared run-grouping over any cell-type accessor.
template <typename TypeAt>
std::vector<EditSpan> decode_cells(int n_ctx, int n_utt, const std::vector<int>& ctx_owner,
                                   TypeAt type_at) {
  if (static_cast<int>(ctx_owner.size()) != n_ctx)
    throw std::invalid_argument("decode_grid: ctx_owner size does not match grid rows");
  std::vector<EditSpan> spans;
  for (int j = 0; j < n_utt; ++j) {
    int i = 0;
    while (i < n_ctx) {
      const EditType t = type_at(i, j);
      if (t == EditType::kNone) {
        ++i;
        continue;
      }
      int end = i + 1;
      while (end < n_ctx && type_at(end, j) == t && ctx_owner[end] == ctx_owner[i]) ++end;
      spans.push_back(EditSpan{t, i, end, j});
      i = end;
    }
  }
  return spans;
}

}  // namespace

std::vector<EditSpan> decode_grid(const GoldEditGrid& grid, const std::vector<int>& ctx_owner) {
  return decode_cells(grid.n_ctx, grid.n_utt, ctx_owner,
                      [&](int i, int j) { return grid.at(i, j); });
}

std::vector<EditSpan> decode_grid(const heads::PredictedEditGrid& grid,
                                  const std::vector<int>& ctx_owner) {
  return decode_cells(grid.n_ctx, grid.n_utt, ctx_owner, [&](int i, int j) {
    const double* cell = grid.cell(i, j);
    int best = 0;
    for (int t = 1; t < 3; ++t)
      if (cell[t] > cell[best]) best = t;
    return static_cast<EditType>(best);
  });
}

GoldEditGrid spans_to_grid(const std::vector<EditSpan>& spans, int n_ctx, int n_utt) {
  GoldEditGrid grid(n_ctx, n_utt);
  for (const auto& s : spans) {
    if (s.column < 0 || s.column >= n_utt)
      throw std::invalid_argument("spans_to_grid: column out of grid range");
    if (s.ctx_begin < 0 || s.ctx_end > n_ctx || s.ctx_begin >= s.ctx_end)
      throw std::invalid_argument("spans_to_grid: bad context range");
    for (int i = s.ctx_begin; i < s.ctx_end; ++i) grid.set(i, s.column, s.type);
  }
  return grid;
}

ApplyResult apply_edits(const corpus::TokenList& incomplete, const std::vector<EditSpan>& spans,
                        const corpus::TokenList& context_tokens,
                        const std::vector<int>& ctx_owner) {
  const int n_utt = static_cast<int>(incomplete.size());
  const int n_ctx = static_cast<int>(context_tokens.size());
  if (static_cast<int>(ctx_owner.size()) != n_ctx)
    throw std::invalid_argument("apply_edits: ctx_owner size mismatch");

  std::vector<std::vector<const EditSpan*>> inserts(static_cast<std::size_t>(n_utt) + 1);
  std::vector<std::vector<const EditSpan*>> replaces(static_cast<std::size_t>(n_utt));
  for (const auto& s : spans) {
    if (s.ctx_begin < 0 || s.ctx_end > n_ctx || s.ctx_begin >= s.ctx_end)
      throw std::invalid_argument("apply_edits: context range out of bounds");
    if (s.type == EditType::kInsert) {
      if (s.column < 0 || s.column > n_utt)
        throw std::invalid_argument("apply_edits: INSERT column out of range");
      inserts[static_cast<std::size_t>(s.column)].push_back(&s);
    } else if (s.type == EditType::kReplace) {
      if (s.column < 0 || s.column >= n_utt)
        throw std::invalid_argument("apply_edits: REPLACE column out of range");
      replaces[static_cast<std::size_t>(s.column)].push_back(&s);
    } else {
      throw std::invalid_argument("apply_edits: NONE span");
    }
  }

  ApplyResult res;
  for (int j = 0; j <= n_utt; ++j) {
    auto& ins = inserts[static_cast<std::size_t>(j)];
    std::sort(ins.begin(), ins.end(),
              [](const EditSpan* a, const EditSpan* b) { return a->ctx_begin < b->ctx_begin; });
    for (const EditSpan* s : ins)
      for (int i = s->ctx_begin; i < s->ctx_end; ++i)
        res.tokens.push_back(context_tokens[static_cast<std::size_t>(i)]);
    if (j == n_utt) break;

    auto& rep = replaces[static_cast<std::size_t>(j)];
    if (rep.empty()) {
      res.tokens.push_back(incomplete[static_cast<std::size_t>(j)]);
      continue;
    }
    // Winner: earliest-starting span of the most recent utterance.
    const EditSpan* winner = rep.front();
    for (const EditSpan* s : rep) {
      const int s_utt = ctx_owner[static_cast<std::size_t>(s->ctx_begin)];
      const int w_utt = ctx_owner[static_cast<std::size_t>(winner->ctx_begin)];
      if (s_utt > w_utt || (s_utt == w_utt && s->ctx_begin < winner->ctx_begin)) winner = s;
    }
    res.conflicts += static_cast<int>(rep.size()) - 1;
    for (int i = winner->ctx_begin; i < winner->ctx_end; ++i)
      res.tokens.push_back(context_tokens[static_cast<std::size_t>(i)]);
  }
  return res;
}

RewriteResult rewrite(const Model& model, const config::RunConfig& cfg,
                      const corpus::Dialogue& d) {
  const corpus::EncodedExample ex = corpus::encode_example(d, model.vocab);
  const auto enc = encoder::encode(model, ex);
  const std::vector<int> owner = ex.context_owner();

  RewriteResult out;
  heads::EditGridResult grid = heads::edit_grid(model, enc.hidden, ex);
  nn::TensorPtr merged = grid.probs;
  if (cfg.cs) {
    const nn::TensorPtr relevance = heads::select_contexts(model, enc.context, enc.incomplete);
    out.relevance = relevance->value;
    if (cfg.effective_merge() != config::MergeMode::kOff)
      merged = heads::merge_relevance(grid, relevance, owner, cfg.merge_alpha,
                                      cfg.effective_merge(), cfg.tau);
  }
  const heads::PredictedEditGrid plain = heads::to_plain_grid(
      grid, cfg.cs && cfg.effective_merge() != config::MergeMode::kOff, merged);

  out.spans = decode_grid(plain, owner);
  const auto applied = apply_edits(d.incomplete.tokens, out.spans, d.context_tokens(), owner);
  out.tokens = applied.tokens;
  out.conflicts = applied.conflicts;
  return out;
}

}  // namespace iur::rewriter
