#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iur/corpus.hpp"

namespace iur::supervision {

enum class EditType : std::uint8_t { kNone = 0, kInsert = 1, kReplace = 2 };

const char* to_string(EditType t);

// N_C x N_U assignment of gold edit types, row-major over (context token,
// incomplete-utterance token) pairs.
struct GoldEditGrid {
  int n_ctx = 0;
  int n_utt = 0;
  std::vector<EditType> entries;

  GoldEditGrid() = default;
  GoldEditGrid(int rows, int cols)
      : n_ctx(rows), n_utt(cols),
        entries(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), EditType::kNone) {}

  EditType at(int i, int j) const {
    return entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_utt) +
                   static_cast<std::size_t>(j)];
  }
  void set(int i, int j, EditType t) {
    entries[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_utt) +
            static_cast<std::size_t>(j)] = t;
  }
  bool all_none() const;
};

enum class AlignStatus { kAligned, kUnalignable };

// Reference to a negative utterance drawn from another dialogue at batch time.
struct NegativeRef {
  std::string dialogue_id;
  int utterance_index = 0;
};

struct RelevanceLabels {
  std::vector<int> relevant;            // R_i in {0,1} per context utterance
  std::vector<int> positive_set;        // C_P: indices with R_i = 1
  std::vector<NegativeRef> negatives;   // C_N: filled during batch assembly
};

// Multiset difference tokens(rewrite) - tokens(incomplete), case-folded,
// returned sorted for a canonical representation.
std::vector<std::string> restored_words(const corpus::TokenList& incomplete,
                                        const corpus::TokenList& rewrite);

// Shipped list of English function words plus punctuation, used only by
// relevance_labels.
const std::set<std::string>& stopwords();

// R_i = 1 iff context utterance i contains at least one restored content word
// (restored_words minus stopwords). Requires d.rewrite.
RelevanceLabels relevance_labels(const corpus::Dialogue& d,
                                 const std::set<std::string>& stop = stopwords());

// Derives the gold edit grid from (context, incomplete, rewrite).
//
// Restored spans are found as the gaps of an LCS alignment between the
// incomplete utterance and the rewrite. Each span is matched against the
// contexts by greedy longest contiguous match (latest utterance first, then
// leftmost). A span that consumed incomplete-utterance tokens becomes a
// REPLACE on the first consumed token; a span that consumed none becomes an
// INSERT before its anchor column. The resulting grid is accepted only if
// applying it reproduces the rewrite exactly; otherwise the example is
// UNALIGNABLE and the grid is all NONE.
std::pair<GoldEditGrid, AlignStatus> build_gold_edit_grid(const corpus::Dialogue& d);

}  // namespace iur::supervision
