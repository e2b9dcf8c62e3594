#include <doctest.h>

#include <stdexcept>

#include <algorithm>

#include "iur/rewriter.hpp"
#include "iur/rng.hpp"
#include "iur/supervision.hpp"

using namespace iur;
using corpus::TokenList;
using rewriter::EditSpan;
using supervision::EditType;
using supervision::GoldEditGrid;

TEST_CASE("decode_grid of an all-NONE grid is empty") {
  GoldEditGrid grid(6, 3);
  CHECK(rewriter::decode_grid(grid, std::vector<int>(6, 0)).empty());
}

TEST_CASE("decode_grid groups adjacent same-type cells of one utterance") {
  GoldEditGrid grid(8, 4);
  grid.set(4, 2, EditType::kInsert);
  grid.set(5, 2, EditType::kInsert);
  const std::vector<int> owner = {0, 0, 0, 0, 1, 1, 1, 1};
  const auto spans = rewriter::decode_grid(grid, owner);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == EditSpan{EditType::kInsert, 4, 6, 2});
}

TEST_CASE("decode_grid splits runs at gaps and utterance boundaries") {
  GoldEditGrid grid(8, 4);
  grid.set(4, 2, EditType::kInsert);
  grid.set(6, 2, EditType::kInsert);
  const std::vector<int> owner = {0, 0, 0, 0, 1, 1, 1, 1};
  auto spans = rewriter::decode_grid(grid, owner);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == EditSpan{EditType::kInsert, 4, 5, 2});
  CHECK(spans[1] == EditSpan{EditType::kInsert, 6, 7, 2});

  // adjacent cells in different utterances never merge
  GoldEditGrid grid2(4, 2);
  grid2.set(1, 0, EditType::kInsert);
  grid2.set(2, 0, EditType::kInsert);
  const std::vector<int> owner2 = {0, 0, 1, 1};
  spans = rewriter::decode_grid(grid2, owner2);
  REQUIRE(spans.size() == 2);
}

TEST_CASE("apply_edits with no spans is the identity") {
  const TokenList incomplete = {"why", "?"};
  const auto res = rewriter::apply_edits(incomplete, {}, {"a", "b"}, {0, 0});
  CHECK(res.tokens == incomplete);
  CHECK(res.conflicts == 0);
}

TEST_CASE("apply_edits inserts before the column") {
  const TokenList incomplete = {"why", "?"};
  const TokenList ctx = {"i", "like", "jazz"};
  const std::vector<EditSpan> spans = {{EditType::kInsert, 2, 3, 1}};
  CHECK(rewriter::apply_edits(incomplete, spans, ctx, {0, 0, 0}).tokens ==
        TokenList{"why", "jazz", "?"});
}

TEST_CASE("apply_edits replaces the column token") {
  const TokenList incomplete = {"he", "left"};
  const TokenList ctx = {"tom", "is", "here"};
  const std::vector<EditSpan> spans = {{EditType::kReplace, 0, 1, 0}};
  CHECK(rewriter::apply_edits(incomplete, spans, ctx, {0, 0, 0}).tokens ==
        TokenList{"tom", "left"});
}

TEST_CASE("apply_edits emits inserts before a replace at the same column") {
  const TokenList incomplete = {"when", "will", "he", "?"};
  const TokenList ctx = {"tom", "will", "play", "chess", "."};
  const std::vector<EditSpan> spans = {
      {EditType::kInsert, 0, 1, 2},   // "tom"
      {EditType::kReplace, 2, 4, 2},  // "play chess" in place of "he"
  };
  CHECK(rewriter::apply_edits(incomplete, spans, ctx, {0, 0, 0, 0, 0}).tokens ==
        TokenList{"when", "will", "tom", "play", "chess", "?"});
}

TEST_CASE("apply_edits sentinel column appends after the last token") {
  const TokenList incomplete = {"why", "?"};
  const TokenList ctx = {"later", "maybe"};
  const std::vector<EditSpan> spans = {{EditType::kInsert, 0, 2, 2}};
  CHECK(rewriter::apply_edits(incomplete, spans, ctx, {0, 0}).tokens ==
        TokenList{"why", "?", "later", "maybe"});
}

TEST_CASE("replace conflicts keep the earliest span of the most recent utterance") {
  const TokenList incomplete = {"it", "works"};
  const TokenList ctx = {"old", "plan", "new", "plan"};
  const std::vector<int> owner = {0, 0, 1, 1};
  const std::vector<EditSpan> spans = {
      {EditType::kReplace, 0, 2, 0},  // from utterance 0
      {EditType::kReplace, 2, 4, 0},  // from utterance 1, wins
  };
  const auto res = rewriter::apply_edits(incomplete, spans, ctx, owner);
  CHECK(res.tokens == TokenList{"new", "plan", "works"});
  CHECK(res.conflicts == 1);
}

TEST_CASE("apply_edits validates span bounds") {
  CHECK_THROWS_AS(
      rewriter::apply_edits({"a"}, {{EditType::kInsert, 0, 1, 3}}, {"x"}, {0}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      rewriter::apply_edits({"a"}, {{EditType::kReplace, 0, 1, 1}}, {"x"}, {0}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      rewriter::apply_edits({"a"}, {{EditType::kNone, 0, 1, 0}}, {"x"}, {0}),
      std::invalid_argument);
}

namespace {

// Random well-formed span lists: non-overlapping cells, runs separated by at
// least one row within each (column, type) bucket, columns inside the grid.
std::vector<EditSpan> random_span_list(Rng& rng, const std::vector<int>& owner, int n_utt) {
  const int n_ctx = static_cast<int>(owner.size());
  std::vector<EditSpan> spans;
  const int attempts = static_cast<int>(rng.next_below(5));
  std::vector<std::vector<bool>> taken(static_cast<std::size_t>(n_ctx),
                                       std::vector<bool>(static_cast<std::size_t>(n_utt), false));
  std::vector<bool> has_replace(static_cast<std::size_t>(n_utt), false);
  for (int a = 0; a < attempts; ++a) {
    const int col = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_utt)));
    const int begin = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_ctx)));
    int end = begin + 1 + static_cast<int>(rng.next_below(2));
    end = std::min(end, n_ctx);
    while (end > begin + 1 && owner[static_cast<std::size_t>(end - 1)] !=
                                  owner[static_cast<std::size_t>(begin)])
      --end;
    bool clear = true;
    // require a free border row around the run so decode cannot merge spans
    for (int i = std::max(0, begin - 1); i < std::min(n_ctx, end + 1); ++i)
      if (taken[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)]) clear = false;
    if (!clear) continue;
    for (int i = begin; i < end; ++i)
      taken[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] = true;
    // at most one REPLACE per column keeps the list conflict-free
    EditType type = rng.next_below(2) ? EditType::kInsert : EditType::kReplace;
    if (type == EditType::kReplace && has_replace[static_cast<std::size_t>(col)])
      type = EditType::kInsert;
    if (type == EditType::kReplace) has_replace[static_cast<std::size_t>(col)] = true;
    spans.push_back(EditSpan{type, begin, end, col});
  }
  std::sort(spans.begin(), spans.end(), [](const EditSpan& a, const EditSpan& b) {
    return a.column != b.column ? a.column < b.column : a.ctx_begin < b.ctx_begin;
  });
  return spans;
}

}  // namespace

TEST_CASE("decode_grid inverts spans_to_grid on well-formed span lists") {
  Rng rng(23);
  const std::vector<int> owner = {0, 0, 0, 1, 1, 1, 2, 2};
  const int n_utt = 5;
  for (int trial = 0; trial < 200; ++trial) {
    const auto spans = random_span_list(rng, owner, n_utt);
    const auto grid = rewriter::spans_to_grid(spans, static_cast<int>(owner.size()), n_utt);
    const auto decoded = rewriter::decode_grid(grid, owner);
    CHECK(decoded == spans);
  }
}

TEST_CASE("apply_edits output length follows the span sizes") {
  Rng rng(29);
  const std::vector<int> owner = {0, 0, 0, 1, 1, 1, 2, 2};
  const TokenList ctx = {"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7"};
  const TokenList incomplete = {"u0", "u1", "u2", "u3", "u4"};
  for (int trial = 0; trial < 200; ++trial) {
    auto spans = random_span_list(rng, owner, static_cast<int>(incomplete.size()));
    // the generator already prevents same-column replace conflicts
    const auto res = rewriter::apply_edits(incomplete, spans, ctx, owner);
    std::size_t expected = incomplete.size();
    std::vector<bool> replaced(incomplete.size(), false);
    for (const auto& s : spans) {
      if (s.type == EditType::kInsert) {
        expected += static_cast<std::size_t>(s.ctx_end - s.ctx_begin);
      } else if (!replaced[static_cast<std::size_t>(s.column)]) {
        expected += static_cast<std::size_t>(s.ctx_end - s.ctx_begin) - 1;
        replaced[static_cast<std::size_t>(s.column)] = true;
      }
    }
    CHECK(res.tokens.size() == expected);
    CHECK(res.conflicts == 0);
  }
}
