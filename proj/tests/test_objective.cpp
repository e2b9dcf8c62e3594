#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <set>

#include "iur/objective.hpp"
#include "test_util.hpp"

using namespace iur;
using heads::PredictedEditGrid;
using supervision::EditType;
using supervision::GoldEditGrid;

namespace {

PredictedEditGrid constant_grid(int rows, int cols, double none, double ins, double rep) {
  PredictedEditGrid g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      double* cell = g.cell(i, j);
      cell[0] = none;
      cell[1] = ins;
      cell[2] = rep;
    }
  return g;
}

}  // namespace

TEST_CASE("loss_edit is zero for one-hot predictions on gold") {
  GoldEditGrid gold(2, 2);
  gold.set(0, 1, EditType::kInsert);
  PredictedEditGrid pred(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      pred.cell(i, j)[static_cast<int>(gold.at(i, j))] = 1.0;
  CHECK(objective::loss_edit_value(pred, gold, {1, 5, 5}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("loss_edit of uniform predictions is ln 3 for any size and weights") {
  for (auto [rows, cols] : {std::pair{1, 1}, std::pair{3, 4}, std::pair{7, 2}}) {
    GoldEditGrid gold(rows, cols);
    gold.set(0, 0, EditType::kReplace);
    const auto grid = constant_grid(rows, cols, 1.0 / 3, 1.0 / 3, 1.0 / 3);
    CHECK(objective::loss_edit_value(grid, gold, {1, 1, 1}) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(objective::loss_edit_value(grid, gold, {1, 5, 5}) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
}

TEST_CASE("loss_edit hand-worked 2x1 grid") {
  GoldEditGrid gold(2, 1);
  gold.set(1, 0, EditType::kInsert);
  PredictedEditGrid pred(2, 1);
  pred.cell(0, 0)[0] = 0.5;   // gold NONE with probability 0.5
  pred.cell(0, 0)[1] = 0.3;
  pred.cell(0, 0)[2] = 0.2;
  pred.cell(1, 0)[0] = 0.5;
  pred.cell(1, 0)[1] = 0.25;  // gold INSERT with probability 0.25
  pred.cell(1, 0)[2] = 0.25;
  const double expected = (-std::log(0.5) - std::log(0.25)) / 2.0;
  CHECK(objective::loss_edit_value(pred, gold, {1, 1, 1}) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.0397207).epsilon(1e-6));
}

TEST_CASE("loss_edit rejects dimension mismatches") {
  GoldEditGrid gold(2, 2);
  PredictedEditGrid pred(2, 3);
  CHECK_THROWS_AS(objective::loss_edit_value(pred, gold, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("loss_sel closed forms") {
  CHECK(objective::loss_sel_value({1.0, 0.0}, {1, 0}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(objective::loss_sel_value({0.5, 0.5, 0.5}, {1, 0, 1}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(objective::loss_sel_value({0.9, 0.2}, {1, 0}) ==
        doctest::Approx((-std::log(0.9) - std::log(0.8)) / 2.0).epsilon(1e-12));
  CHECK(objective::loss_sel_value({0.9, 0.2}, {1, 0}) == doctest::Approx(0.1642520).epsilon(1e-6));
  CHECK_THROWS_AS(objective::loss_sel_value({0.5}, {1, 0}), std::invalid_argument);
}

TEST_CASE("loss_mat closed forms") {
  CHECK(objective::loss_mat_value({1.0, 0.0, 1.0}, {1, 0, 1}) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(objective::loss_mat_value({0.5, 0.5}, {1, 0}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("loss_int worked values and non-negativity") {
  const int d = 4;
  std::vector<double> p(d, 1.0 / d);
  CHECK(objective::loss_int_value(p, p) == doctest::Approx(0.0).epsilon(1e-12));

  const double eps = 1e-8;
  CHECK(objective::loss_int_value({1.0 - eps, eps}, {0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));

  Rng rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(d), b(d);
    double sa = 0, sb = 0;
    for (int k = 0; k < d; ++k) {
      a[static_cast<std::size_t>(k)] = rng.next_real() + 1e-8;
      b[static_cast<std::size_t>(k)] = rng.next_real() + 1e-8;
      sa += a[static_cast<std::size_t>(k)];
      sb += b[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < d; ++k) {
      a[static_cast<std::size_t>(k)] /= sa;
      b[static_cast<std::size_t>(k)] /= sb;
    }
    CHECK(objective::loss_int_value(a, b) >= -1e-12);
  }
}

TEST_CASE("combine is the exact weighted sum") {
  auto s = [](double v) { return nn::make_scalar(v); };
  CHECK(objective::combine(s(1.0), s(0.5), s(0.2), s(0.1), 1, 1, 1)->scalar() ==
        doctest::Approx(1.8).epsilon(1e-12));
  CHECK(objective::combine(s(0.7), s(9.0), s(9.0), s(9.0), 0, 0, 0)->scalar() ==
        doctest::Approx(0.7).epsilon(1e-12));
  CHECK(objective::combine(s(0.0), s(0.0), s(0.0), s(0.0), 1, 1, 1)->scalar() ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(objective::combine(s(1), s(1), s(1), s(1), -0.1, 0, 0),
                  std::invalid_argument);
}

TEST_CASE("negative sampling is deterministic, order-invariant and never self-referencing") {
  const auto data = corpus::make_synthetic_corpus(77, 6);
  const Model model = testutil::tiny_model(data, 77);
  auto prepared = objective::prepare_corpus(data, model.vocab);
  std::vector<const objective::PreparedExample*> batch;
  for (const auto& p : prepared) batch.push_back(&p);

  auto as_ids = [&](const std::vector<std::pair<int, int>>& picks,
                    const std::vector<const objective::PreparedExample*>& b) {
    std::set<std::pair<std::string, int>> out;
    for (const auto& [bi, utt] : picks)
      out.insert({b[static_cast<std::size_t>(bi)]->dialogue.id, utt});
    return out;
  };

  for (std::size_t e = 0; e < batch.size(); ++e) {
    const auto first = objective::sample_negatives(batch, e, 3, 123);
    const auto second = objective::sample_negatives(batch, e, 3, 123);
    CHECK(first == second);
    CHECK(first.size() == 3);
    for (const auto& [bi, utt] : first) CHECK(bi != static_cast<int>(e));

    // different seed, different draw (almost surely for this pool size)
    const auto other = objective::sample_negatives(batch, e, 3, 124);
    CHECK(as_ids(first, batch) != as_ids(other, batch));
  }

  // permuting the batch preserves the sampled (id, utterance) sets
  std::vector<const objective::PreparedExample*> reversed(batch.rbegin(), batch.rend());
  const auto before = as_ids(objective::sample_negatives(batch, 0, 3, 9), batch);
  const std::size_t moved = batch.size() - 1;  // same dialogue, new position
  const auto after = as_ids(objective::sample_negatives(reversed, moved, 3, 9), reversed);
  CHECK(before == after);
}

TEST_CASE("batch losses compose exactly and honor the switches") {
  const auto data = corpus::make_synthetic_corpus(91, 6);
  Model model = testutil::tiny_model(data, 91);
  auto prepared = objective::prepare_corpus(data, model.vocab);
  std::vector<const objective::PreparedExample*> batch;
  for (const auto& p : prepared) batch.push_back(&p);

  SUBCASE("full model identity") {
    const auto result = objective::batch_losses(model, batch);
    const auto& n = result.numbers;
    CHECK(n.final_loss ==
          doctest::Approx(n.edit + 0.5 * n.sel + 0.5 * n.mat + 0.5 * n.intention)
              .epsilon(1e-12));
    CHECK(n.edit_cells > 0);
    CHECK(n.sel_utterances > 0);
    CHECK(n.mat_pairs > 0);
  }

  SUBCASE("edit-only configuration") {
    model.cfg.cs = model.cfg.cm = model.cfg.sm = model.cfg.hm = model.cfg.ic = false;
    model.cfg.derive_merge_mode();
    const auto result = objective::batch_losses(model, batch);
    const auto& n = result.numbers;
    CHECK(n.final_loss == doctest::Approx(n.edit).epsilon(1e-12));
    CHECK(n.sel == 0.0);
    CHECK(n.mat == 0.0);
    CHECK(n.intention == 0.0);
    CHECK(n.sel_utterances == 0);
    CHECK(n.mat_pairs == 0);
    CHECK(n.int_examples == 0);
  }

  SUBCASE("a batch of one skips the matching loss") {
    std::vector<const objective::PreparedExample*> single = {batch[0]};
    const auto result = objective::batch_losses(model, single);
    CHECK(result.numbers.mat == 0.0);
    CHECK(result.numbers.mat_pairs == 0);
  }
}

TEST_CASE("analytic batch gradients match finite differences on a tiny model") {
  const auto data = corpus::make_synthetic_corpus(13, 4);
  Model model = testutil::tiny_model(data, 13);
  auto prepared = objective::prepare_corpus(data, model.vocab);
  std::vector<const objective::PreparedExample*> batch;
  for (const auto& p : prepared) batch.push_back(&p);

  // spot-check one representative tensor from each component
  for (const char* name : {"enc.l0.ffn.w1", "select.w2", "match.w1", "intent.rw.w2",
                           "unet.dec0.w", "unet.head.b"}) {
    auto param = model.params.get(name);
    testutil::check_gradients(
        {param}, [&] { return objective::batch_losses(model, batch).final_loss; }, 1e-5, 1e-4);
  }
}
