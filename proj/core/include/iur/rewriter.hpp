#pragma once

#include <vector>

#include "iur/corpus.hpp"
#include "iur/supervision.hpp"

namespace iur {
struct Model;
}
namespace iur::config {
struct RunConfig;
}
namespace iur::heads {
struct PredictedEditGrid;
}

namespace iur::rewriter {

// A contiguous run of context tokens applied at one column of the incomplete
// utterance. INSERT places the tokens before `column`; REPLACE substitutes
// them for the token at `column`. For INSERT, column == n_utt is the sentinel
// "append after the last token" (expressible for direct span application
// only, never by a grid).
struct EditSpan {
  supervision::EditType type = supervision::EditType::kInsert;
  int ctx_begin = 0;  // global context-token index, inclusive
  int ctx_end = 0;    // exclusive; spans never cross utterance boundaries
  int column = 0;

  friend bool operator==(const EditSpan&, const EditSpan&) = default;
};

// Argmax-decodes a grid into spans: maximal runs of consecutive context
// indices within one utterance sharing the same non-NONE type and column,
// ordered by (column, ctx_begin). `ctx_owner` maps each global context token
// index to its utterance.
std::vector<EditSpan> decode_grid(const supervision::GoldEditGrid& grid,
                                  const std::vector<int>& ctx_owner);
std::vector<EditSpan> decode_grid(const heads::PredictedEditGrid& grid,
                                  const std::vector<int>& ctx_owner);

// Inverse of decode_grid for span lists whose columns are < n_utt and whose
// runs are non-adjacent; used by label derivation and tests.
supervision::GoldEditGrid spans_to_grid(const std::vector<EditSpan>& spans, int n_ctx, int n_utt);

struct ApplyResult {
  corpus::TokenList tokens;
  int conflicts = 0;
};

// Applies spans column by column, left to right: at column j all INSERT spans
// are emitted in ctx_begin order, then the REPLACE span for j (if several
// target j, the earliest-starting span of the most recent utterance wins and
// the rest are counted as conflicts), else the original token.
ApplyResult apply_edits(const corpus::TokenList& incomplete, const std::vector<EditSpan>& spans,
                        const corpus::TokenList& context_tokens,
                        const std::vector<int>& ctx_owner);

struct RewriteResult {
  corpus::TokenList tokens;
  std::vector<double> relevance;  // r_i per context utterance (empty if selection is off)
  std::vector<EditSpan> spans;
  int conflicts = 0;
};

// Full pipeline: encode, predict the edit grid, merge relevance, decode and
// apply. Deterministic given (model, config, input).
RewriteResult rewrite(const Model& model, const config::RunConfig& cfg,
                      const corpus::Dialogue& d);

}  // namespace iur::rewriter
