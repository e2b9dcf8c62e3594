#include <doctest.h>

#include <stdexcept>

#include <set>

#include "iur/corpus.hpp"
#include "iur/rewriter.hpp"
#include "iur/supervision.hpp"

using namespace iur;
using corpus::Dialogue;
using corpus::TokenList;
using supervision::AlignStatus;
using supervision::EditType;
using supervision::GoldEditGrid;

namespace {

Dialogue make_dialogue(const std::vector<std::string>& context, const std::string& incomplete,
                       const std::string& rewrite) {
  Dialogue d;
  d.id = "t";
  for (const auto& c : context) d.context.push_back(corpus::make_utterance(c));
  d.incomplete = corpus::make_utterance(incomplete);
  d.rewrite = corpus::make_utterance(rewrite);
  return d;
}

Dialogue canard_example() {
  return make_dialogue(
      {
          "Parsons studied biology at Amherst college.",
          "Who is one of his professors at Amherst?",
          "Parsons ' biology professors at Amherst were Glaser and Henry.",
          "What are his interest?",
          "Parsons showed from early on, a great interest in the topic of philosophy,",
      },
      "Anything else he was interested to?",
      "Other than philosophy, is there anything else parsons was interested in?");
}

std::vector<int> owner_of(const Dialogue& d) {
  std::vector<int> owner;
  for (std::size_t k = 0; k < d.context.size(); ++k)
    for (std::size_t t = 0; t < d.context[k].tokens.size(); ++t)
      owner.push_back(static_cast<int>(k));
  return owner;
}

TokenList apply_grid(const Dialogue& d, const GoldEditGrid& grid) {
  const auto owner = owner_of(d);
  const auto spans = rewriter::decode_grid(grid, owner);
  return rewriter::apply_edits(d.incomplete.tokens, spans, d.context_tokens(), owner).tokens;
}

// Exhaustive search over all single-cell edit grids for those whose
// application reproduces the rewrite. Independent oracle for the single-edit
// examples.
std::vector<GoldEditGrid> single_edit_solutions(const Dialogue& d) {
  const int n_ctx = static_cast<int>(d.context_tokens().size());
  const int n_utt = static_cast<int>(d.incomplete.tokens.size());
  std::vector<GoldEditGrid> found;
  for (int i = 0; i < n_ctx; ++i)
    for (int j = 0; j < n_utt; ++j)
      for (EditType t : {EditType::kInsert, EditType::kReplace}) {
        GoldEditGrid grid(n_ctx, n_utt);
        grid.set(i, j, t);
        if (apply_grid(d, grid) == d.rewrite->tokens) found.push_back(grid);
      }
  return found;
}

}  // namespace

TEST_CASE("restored_words is the case-folded multiset difference") {
  CHECK(supervision::restored_words({"a", "b"}, {"a", "b"}).empty());
  CHECK(supervision::restored_words({"a", "a", "b"}, {"a", "b", "c"}) ==
        std::vector<std::string>{"c"});
  // duplicate handling: one extra 'a' restored
  CHECK(supervision::restored_words({"a"}, {"a", "a"}) == std::vector<std::string>{"a"});
}

TEST_CASE("restored_words on the five-turn dialogue") {
  const Dialogue d = canard_example();
  const auto restored = supervision::restored_words(d.incomplete.tokens, d.rewrite->tokens);
  // Hand multiset difference under the tokenize rule; the detached comma of
  // "philosophy," is restored alongside the seven word tokens.
  CHECK(restored == std::vector<std::string>{",", "in", "is", "other", "parsons", "philosophy",
                                             "than", "there"});
}

TEST_CASE("shipped stopword list covers the function words the labels depend on") {
  const auto& stop = supervision::stopwords();
  for (const char* w : {"is", "in", "than", "other", "there", ",", "."})
    CHECK(stop.count(w) == 1);
  CHECK(stop.count("philosophy") == 0);
  CHECK(stop.count("parsons") == 0);
}

TEST_CASE("relevance labels on the five-turn dialogue") {
  const Dialogue d = canard_example();
  const auto labels = supervision::relevance_labels(d);
  // content words {philosophy, parsons}: turns 1, 3 and 5 mention them
  CHECK(labels.relevant == std::vector<int>{1, 0, 1, 0, 1});
  CHECK(labels.positive_set == std::vector<int>{0, 2, 4});
}

TEST_CASE("relevance labels edge cases") {
  const Dialogue none = make_dialogue({"tom likes jazz ."}, "thanks .", "thanks .");
  const auto l0 = supervision::relevance_labels(none);
  CHECK(l0.relevant == std::vector<int>{0});
  CHECK(l0.positive_set.empty());

  const Dialogue single = make_dialogue({"i like jazz"}, "why ?", "why jazz ?");
  CHECK(supervision::relevance_labels(single).relevant == std::vector<int>{1});

  Dialogue no_rewrite = single;
  no_rewrite.rewrite.reset();
  CHECK_THROWS_AS(supervision::relevance_labels(no_rewrite), std::invalid_argument);
}

TEST_CASE("gold grid for an unchanged rewrite is all NONE and aligned") {
  const Dialogue d = make_dialogue({"tom likes jazz ."}, "thanks .", "thanks .");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  CHECK(status == AlignStatus::kAligned);
  CHECK(grid.all_none());
  CHECK(apply_grid(d, grid) == d.rewrite->tokens);
}

TEST_CASE("gold grid single insert matches the exhaustive single-edit oracle") {
  const Dialogue d = make_dialogue({"i like jazz"}, "why ?", "why jazz ?");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  CHECK(status == AlignStatus::kAligned);
  CHECK(grid.at(2, 1) == EditType::kInsert);  // "jazz" inserted before "?"
  int non_none = 0;
  for (auto e : grid.entries)
    if (e != EditType::kNone) ++non_none;
  CHECK(non_none == 1);

  const auto solutions = single_edit_solutions(d);
  REQUIRE(solutions.size() == 1);
  CHECK(solutions[0].entries == grid.entries);
}

TEST_CASE("gold grid single replace matches the exhaustive single-edit oracle") {
  const Dialogue d = make_dialogue({"tom is here"}, "he left", "tom left");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  CHECK(status == AlignStatus::kAligned);
  CHECK(grid.at(0, 0) == EditType::kReplace);  // "tom" replaces "he"
  const auto solutions = single_edit_solutions(d);
  REQUIRE(solutions.size() == 1);
  CHECK(solutions[0].entries == grid.entries);
}

TEST_CASE("gold grid handles combined replace and insert") {
  const Dialogue d =
      make_dialogue({"tom will play chess ."}, "when will he ?", "when will tom play chess ?");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  REQUIRE(status == AlignStatus::kAligned);
  CHECK(apply_grid(d, grid) == d.rewrite->tokens);
}

TEST_CASE("span matching prefers the most recent utterance") {
  const Dialogue d =
      make_dialogue({"jazz sounds fun .", "anna plays jazz ."}, "why ?", "why jazz ?");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  REQUIRE(status == AlignStatus::kAligned);
  // "jazz" occurs at global index 0 (turn 0) and 6 (turn 1); recency wins.
  CHECK(grid.at(6, 1) == EditType::kInsert);
  CHECK(grid.at(0, 1) == EditType::kNone);
}

TEST_CASE("rewrites that permute context words are unalignable") {
  const Dialogue d = make_dialogue({"sam brews green tea daily ."}, "why ?", "why tea green ?");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  CHECK(status == AlignStatus::kUnalignable);
  CHECK(grid.all_none());
}

TEST_CASE("rewrites needing words absent from context are unalignable") {
  const Dialogue d = make_dialogue({"tom likes jazz ."}, "why ?", "why music ?");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  CHECK(status == AlignStatus::kUnalignable);
}

TEST_CASE("pure deletions are unalignable") {
  const Dialogue d = make_dialogue({"tom likes jazz ."}, "why not now ?", "why now ?");
  const auto [grid, status] = supervision::build_gold_edit_grid(d);
  CHECK(status == AlignStatus::kUnalignable);
}

TEST_CASE("synthetic corpus alignment properties") {
  const auto dialogues = corpus::make_synthetic_corpus(17, 1000);
  std::size_t aligned = 0;
  for (const auto& d : dialogues) {
    const auto [grid, status] = supervision::build_gold_edit_grid(d);
    const auto labels = supervision::relevance_labels(d);
    if (status != AlignStatus::kAligned) continue;
    ++aligned;
    // round-trip
    CHECK(apply_grid(d, grid) == d.rewrite->tokens);
    // soundness: every edited context token is a restored word
    const auto restored = supervision::restored_words(d.incomplete.tokens, d.rewrite->tokens);
    const std::multiset<std::string> restored_set(restored.begin(), restored.end());
    const auto ctx_tokens = d.context_tokens();
    const auto owner = owner_of(d);
    for (int i = 0; i < grid.n_ctx; ++i)
      for (int j = 0; j < grid.n_utt; ++j)
        if (grid.at(i, j) != EditType::kNone) {
          CHECK(restored_set.count(ctx_tokens[static_cast<std::size_t>(i)]) > 0);
          // relevance/edit consistency
          CHECK(labels.relevant[static_cast<std::size_t>(
                    owner[static_cast<std::size_t>(i)])] == 1);
        }
  }
  CHECK(aligned >= 950);
}
