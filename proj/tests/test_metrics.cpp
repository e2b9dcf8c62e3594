#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "iur/metrics.hpp"
#include "iur/rng.hpp"
#include "metrics_oracle.hpp"

using namespace iur;
using corpus::TokenList;

TEST_CASE("bleu on identical sequences is 1") {
  CHECK(metrics::bleu_n({"a", "b", "c"}, {"a", "b", "c"}, 1) == doctest::Approx(1.0));
  CHECK(metrics::bleu_n({"a", "b", "c"}, {"a", "b", "c"}, 2) == doctest::Approx(1.0));
}

TEST_CASE("bleu-1 counts clipped unigram matches") {
  // three of four unigrams match and lengths are equal, so no brevity penalty
  CHECK(metrics::bleu_n({"a", "b", "c", "d"}, {"a", "b", "e", "d"}, 1) ==
        doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("bleu on disjoint token sets is 0 before smoothing") {
  CHECK(metrics::bleu_n({"a", "b"}, {"c", "d"}, 1) == doctest::Approx(0.0));
  bool smoothed = false;
  const double s = metrics::corpus_bleu({{"a", "b"}}, {{"c", "d"}}, 1, true, &smoothed);
  CHECK(smoothed);
  CHECK(s > 0.0);
}

TEST_CASE("bleu errors on an empty reference set") {
  CHECK_THROWS_AS(metrics::corpus_bleu({}, {}, 1), std::invalid_argument);
}

TEST_CASE("rouge variants are 1 on identical sequences") {
  const TokenList x = {"p", "q", "r"};
  CHECK(metrics::rouge_n(x, x, 1) == doctest::Approx(1.0));
  CHECK(metrics::rouge_n(x, x, 2) == doctest::Approx(1.0));
  CHECK(metrics::rouge_l(x, x) == doctest::Approx(1.0));
}

TEST_CASE("rouge-l from the LCS length") {
  // LCS = 2, P = 1, R = 2/3, F1 = 0.8
  CHECK(metrics::rouge_l({"a", "c"}, {"a", "b", "c"}) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("rouge of an empty prediction is 0") {
  CHECK(metrics::rouge_n({}, {"a"}, 1) == doctest::Approx(0.0));
  CHECK(metrics::rouge_l({}, {"a"}) == doctest::Approx(0.0));
}

TEST_CASE("removing a matched token never increases rouge-1") {
  // "matched" means the token contributes to the clipped intersection, i.e.
  // its count in pred does not exceed its count in ref. (Removing an
  // over-counted duplicate raises precision instead.)
  Rng rng(41);
  auto count = [](const TokenList& t, const std::string& w) {
    return std::count(t.begin(), t.end(), w);
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto ref = oracle::random_tokens(rng, 1, 8);
    auto pred = oracle::random_tokens(rng, 1, 8);
    const double before = metrics::rouge_n(pred, ref, 1);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (count(pred, pred[i]) <= count(ref, pred[i]) && count(ref, pred[i]) > 0) {
        pred.erase(pred.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    CHECK(metrics::rouge_n(pred, ref, 1) <= before + 1e-12);
  }
}

TEST_CASE("restoration f-score worked examples") {
  const TokenList incomplete = {"why", "?"};
  const TokenList ref = {"why", "jazz", "?"};
  // perfect restoration
  auto f1 = metrics::restoration_fscore(ref, incomplete, ref, 1);
  auto f2 = metrics::restoration_fscore(ref, incomplete, ref, 2);
  REQUIRE(f1.has_value());
  REQUIRE(f2.has_value());
  CHECK(*f1 == doctest::Approx(1.0));
  CHECK(*f2 == doctest::Approx(1.0));  // bigrams (why,jazz) and (jazz,?)

  // prediction restores nothing
  auto none = metrics::restoration_fscore(incomplete, incomplete, ref, 1);
  REQUIRE(none.has_value());
  CHECK(*none == doctest::Approx(0.0));

  // reference restores nothing: excluded
  CHECK_FALSE(metrics::restoration_fscore(ref, ref, ref, 1).has_value());
}

TEST_CASE("metrics match the brute-force oracle on random pairs") {
  Rng rng(97);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pred = oracle::random_tokens(rng, 1, 10);
    const auto ref = oracle::random_tokens(rng, 1, 10);
    const auto incomplete = oracle::random_tokens(rng, 1, 6);
    for (int n : {1, 2})
      CHECK(metrics::bleu_n(pred, ref, n) ==
            doctest::Approx(oracle::bleu_pair(pred, ref, n)).epsilon(1e-9));
    for (int n : {1, 2})
      CHECK(metrics::rouge_n(pred, ref, n) ==
            doctest::Approx(oracle::rouge_n(pred, ref, n)).epsilon(1e-9));
    CHECK(metrics::rouge_l(pred, ref) ==
          doctest::Approx(oracle::rouge_l(pred, ref)).epsilon(1e-9));
    for (int n : {1, 2, 3}) {
      const auto mine = metrics::restoration_fscore(pred, incomplete, ref, n);
      const auto ref_val = oracle::restoration_f(pred, incomplete, ref, n);
      CHECK(mine.has_value() == ref_val.has_value());
      if (mine && ref_val) CHECK(*mine == doctest::Approx(*ref_val).epsilon(1e-9));
    }
  }
}

TEST_CASE("corpus bleu matches the oracle over whole prediction sets") {
  Rng rng(101);
  std::vector<TokenList> preds, refs;
  for (int i = 0; i < 40; ++i) {
    preds.push_back(oracle::random_tokens(rng, 1, 10));
    refs.push_back(oracle::random_tokens(rng, 1, 10));
  }
  for (int n : {1, 2}) {
    CHECK(metrics::corpus_bleu(preds, refs, n, false) ==
          doctest::Approx(oracle::corpus_bleu(preds, refs, n, false)).epsilon(1e-9));
    CHECK(metrics::corpus_bleu(preds, refs, n, true) ==
          doctest::Approx(oracle::corpus_bleu(preds, refs, n, true)).epsilon(1e-9));
  }
}

TEST_CASE("evaluate aggregates a full report") {
  const std::vector<TokenList> refs = {{"why", "jazz", "?"}, {"tom", "left"}};
  const std::vector<TokenList> incompletes = {{"why", "?"}, {"he", "left"}};
  auto report = metrics::evaluate(refs, refs, incompletes);
  CHECK(report.n_examples == 2);
  CHECK(report.bleu1 == doctest::Approx(1.0));
  CHECK(report.rouge1 == doctest::Approx(1.0));
  CHECK(report.rougeL == doctest::Approx(1.0));
  CHECK(report.f1 == doctest::Approx(1.0));
  CHECK(report.exact_match == doctest::Approx(1.0));

  const std::vector<TokenList> bad = {{"no"}, {"match"}};
  report = metrics::evaluate(bad, refs, incompletes);
  CHECK(report.exact_match == doctest::Approx(0.0));
  for (double v : {report.bleu1, report.bleu2, report.rouge1, report.rouge2, report.rougeL,
                   report.f1, report.f2, report.f3}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(metrics::evaluate({}, {}, {}), std::invalid_argument);
}
