#include "iur/supervision.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "iur/rewriter.hpp"

namespace iur::supervision {

using corpus::Dialogue;
using corpus::TokenList;

const char* to_string(EditType t) {
  switch (t) {
    case EditType::kNone:
      return "NONE";
    case EditType::kInsert:
      return "INSERT";
    case EditType::kReplace:
      return "REPLACE";
  }
  return "NONE";
}

bool GoldEditGrid::all_none() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](EditType t) { return t == EditType::kNone; });
}

namespace {

std::string fold(std::string s) {
  for (auto& c : s)
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(c));
  return s;
}

TokenList fold_all(const TokenList& tokens) {
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(fold(t));
  return out;
}

}  // namespace

std::vector<std::string> restored_words(const TokenList& incomplete, const TokenList& rewrite) {
  std::multiset<std::string> have;
  for (const auto& t : incomplete) have.insert(fold(t));
  std::vector<std::string> out;
  for (const auto& t : rewrite) {
    std::string f = fold(t);
    auto it = have.find(f);
    if (it != have.end())
      have.erase(it);
    else
      out.push_back(std::move(f));
  }
  std::sort(out.begin(), out.end());
  return out;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kStopwords = {
      // function words
      "a", "an", "the", "is", "are", "was", "were", "be", "been", "being", "am", "do", "does",
      "did", "have", "has", "had", "i", "you", "he", "she", "it", "we", "they", "me", "him",
      "her", "us", "them", "my", "your", "his", "its", "our", "their", "this", "that", "these",
      "those", "there", "here", "what", "which", "who", "whom", "when", "where", "why", "how",
      "not", "no", "and", "or", "but", "if", "then", "else", "of", "in", "on", "at", "by",
      "for", "with", "to", "from", "as", "than", "so", "too", "will", "would", "can", "could",
      "should", "about", "any", "some", "one", "other",
      // punctuation
      ".", ",", "?", "!", ";", ":", "'", "\"", "-", "(", ")"};
  return kStopwords;
}

RelevanceLabels relevance_labels(const Dialogue& d, const std::set<std::string>& stop) {
  if (!d.rewrite)
    throw std::invalid_argument("relevance_labels: dialogue '" + d.id + "' has no rewrite");
  const auto restored = restored_words(d.incomplete.tokens, d.rewrite->tokens);
  std::set<std::string> content;
  for (const auto& w : restored)
    if (!stop.count(w)) content.insert(w);

  RelevanceLabels out;
  out.relevant.reserve(d.context.size());
  for (std::size_t i = 0; i < d.context.size(); ++i) {
    int r = 0;
    for (const auto& tok : d.context[i].tokens)
      if (content.count(fold(tok))) {
        r = 1;
        break;
      }
    out.relevant.push_back(r);
    if (r) out.positive_set.push_back(static_cast<int>(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gold edit grid construction
// ---------------------------------------------------------------------------

namespace {

// LCS match pairs (index in a, index in b), in order. When several traces
// exist the walk prefers matching, then consuming a.
std::vector<std::pair<int, int>> lcs_pairs(const TokenList& a, const TokenList& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  std::vector<std::vector<int>> dp(static_cast<std::size_t>(m) + 1,
                                   std::vector<int>(static_cast<std::size_t>(n) + 1, 0));
  for (int i = m - 1; i >= 0; --i)
    for (int j = n - 1; j >= 0; --j) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      dp[si][sj] = a[si] == b[sj] ? dp[si + 1][sj + 1] + 1
                                  : std::max(dp[si + 1][sj], dp[si][sj + 1]);
    }
  std::vector<std::pair<int, int>> out;
  int i = 0, j = 0;
  while (i < m && j < n) {
    const auto si = static_cast<std::size_t>(i);
    const auto sj = static_cast<std::size_t>(j);
    if (a[si] == b[sj]) {
      out.emplace_back(i, j);
      ++i;
      ++j;
    } else if (dp[si + 1][sj] >= dp[si][sj + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

struct Gap {
  int u_begin, u_end;  // consumed incomplete-utterance range
  int r_begin, r_end;  // restored rewrite range
};

std::vector<Gap> alignment_gaps(const std::vector<std::pair<int, int>>& pairs, int m, int n) {
  std::vector<Gap> gaps;
  int prev_i = 0, prev_j = 0;
  for (std::size_t k = 0; k <= pairs.size(); ++k) {
    const int next_i = k < pairs.size() ? pairs[k].first : m;
    const int next_j = k < pairs.size() ? pairs[k].second : n;
    if (next_i > prev_i || next_j > prev_j) gaps.push_back({prev_i, next_i, prev_j, next_j});
    prev_i = next_i + 1;
    prev_j = next_j + 1;
  }
  return gaps;
}

struct Piece {
  int utterance;
  int start;  // token offset within the utterance
  int length;
};

// Longest prefix of span[pos:] that matches contiguously inside a single
// context utterance; ties broken by latest utterance then leftmost start.
std::optional<Piece> longest_prefix_match(const TokenList& span, std::size_t pos,
                                          const std::vector<TokenList>& contexts) {
  const int remaining = static_cast<int>(span.size() - pos);
  for (int len = remaining; len >= 1; --len) {
    for (int k = static_cast<int>(contexts.size()) - 1; k >= 0; --k) {
      const auto& ctx = contexts[static_cast<std::size_t>(k)];
      const int limit = static_cast<int>(ctx.size()) - len;
      for (int start = 0; start <= limit; ++start) {
        bool match = true;
        for (int t = 0; t < len; ++t)
          if (ctx[static_cast<std::size_t>(start + t)] != span[pos + static_cast<std::size_t>(t)]) {
            match = false;
            break;
          }
        if (match) return Piece{k, start, len};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::pair<GoldEditGrid, AlignStatus> build_gold_edit_grid(const Dialogue& d) {
  if (!d.rewrite)
    throw std::invalid_argument("build_gold_edit_grid: dialogue '" + d.id + "' has no rewrite");

  const TokenList u = fold_all(d.incomplete.tokens);
  const TokenList rw = fold_all(d.rewrite->tokens);
  std::vector<TokenList> contexts;
  contexts.reserve(d.context.size());
  std::vector<int> utterance_offset;  // global index of each utterance's first token
  int n_ctx = 0;
  for (const auto& utt : d.context) {
    utterance_offset.push_back(n_ctx);
    contexts.push_back(fold_all(utt.tokens));
    n_ctx += static_cast<int>(utt.tokens.size());
  }
  const int n_utt = static_cast<int>(u.size());

  GoldEditGrid grid(n_ctx, n_utt);
  const GoldEditGrid empty_grid(n_ctx, n_utt);

  const auto pairs = lcs_pairs(u, rw);
  bool feasible = true;
  for (const Gap& gap : alignment_gaps(pairs, n_utt, static_cast<int>(rw.size()))) {
    if (gap.r_begin == gap.r_end) {
      // Tokens of u dropped with nothing restored; the grid cannot delete.
      feasible = false;
      break;
    }
    const bool is_replace = gap.u_end > gap.u_begin;
    const int column = is_replace ? gap.u_begin : gap.u_end;
    if (!is_replace && column >= n_utt) {
      // Append past the final token: not expressible as a grid cell.
      feasible = false;
      break;
    }

    TokenList span(rw.begin() + gap.r_begin, rw.begin() + gap.r_end);
    std::vector<Piece> pieces;
    std::size_t pos = 0;
    while (pos < span.size()) {
      auto piece = longest_prefix_match(span, pos, contexts);
      if (!piece) {
        feasible = false;
        break;
      }
      pieces.push_back(*piece);
      pos += static_cast<std::size_t>(piece->length);
    }
    if (!feasible) break;

    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const bool last = p + 1 == pieces.size();
      const EditType type = is_replace && last ? EditType::kReplace : EditType::kInsert;
      const int global = utterance_offset[static_cast<std::size_t>(pieces[p].utterance)] +
                         pieces[p].start;
      for (int t = 0; t < pieces[p].length; ++t) grid.set(global + t, column, type);
    }
  }

  if (!feasible) return {empty_grid, AlignStatus::kUnalignable};

  // Accept only grids that reproduce the rewrite exactly.
  TokenList ctx_tokens;
  std::vector<int> owner;
  for (std::size_t k = 0; k < contexts.size(); ++k)
    for (const auto& tok : contexts[k]) {
      ctx_tokens.push_back(tok);
      owner.push_back(static_cast<int>(k));
    }
  const auto spans = rewriter::decode_grid(grid, owner);
  const auto applied = rewriter::apply_edits(u, spans, ctx_tokens, owner);
  if (applied.tokens != rw || applied.conflicts != 0)
    return {empty_grid, AlignStatus::kUnalignable};
  return {grid, AlignStatus::kAligned};
}

}  // namespace iur::supervision
