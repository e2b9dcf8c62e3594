#include <doctest.h>

#include <stdexcept>

#include "iur/ablation.hpp"
#include "iur/config.hpp"

using namespace iur;
using config::MergeMode;
using config::RunConfig;

TEST_CASE("defaults validate and use the soft merge") {
  RunConfig cfg;
  cfg.validate();
  CHECK(cfg.merge_mode == MergeMode::kSoft);
  CHECK(cfg.use_sel_loss());
  CHECK(cfg.use_mat_loss());
  CHECK(cfg.use_int_loss());
}

TEST_CASE("config text round-trips") {
  RunConfig cfg;
  cfg.encoder.d_model = 32;
  cfg.encoder.n_heads = 4;
  cfg.merge_alpha = 0.25;
  cfg.seed = 42;
  cfg.cm = false;
  cfg.train_data = "data/train.jsonl";
  const RunConfig back = RunConfig::from_text(cfg.to_text());
  CHECK(back.encoder.d_model == 32);
  CHECK(back.merge_alpha == doctest::Approx(0.25));
  CHECK(back.seed == 42);
  CHECK_FALSE(back.cm);
  CHECK(back.train_data == "data/train.jsonl");
  CHECK(back.to_text() == cfg.to_text());
}

TEST_CASE("unknown keys are rejected with a location") {
  CHECK_THROWS_WITH_AS(RunConfig::from_text("bogus_key: 1\n", "test.cfg"),
                       doctest::Contains("unknown config key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::from_text("d_model 64\n", "test.cfg"),
                       doctest::Contains("test.cfg:1"), std::invalid_argument);
}

TEST_CASE("switch combinations are validated before any compute") {
  CHECK_THROWS_AS(RunConfig::from_text("sm: true\nhm: true\n"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_text("cs: false\ncm: true\nsm: false\nic: false\nhm: false\n"),
                  std::invalid_argument);
  // merge_mode contradicting the switches
  CHECK_THROWS_AS(RunConfig::from_text("merge_mode: hard\n"), std::invalid_argument);
  // cs off with everything else off is the backbone and passes
  const RunConfig backbone =
      RunConfig::from_text("cs: false\ncm: false\nsm: false\nhm: false\nic: false\n");
  CHECK(backbone.effective_merge() == MergeMode::kOff);
  CHECK_FALSE(backbone.use_sel_loss());
}

TEST_CASE("derive_merge_mode follows the sm/hm switches") {
  const RunConfig hard =
      RunConfig::from_text("cs: true\ncm: false\nsm: false\nhm: true\nic: false\n");
  CHECK(hard.merge_mode == MergeMode::kHard);
  const RunConfig off =
      RunConfig::from_text("cs: true\ncm: false\nsm: false\nhm: false\nic: false\n");
  CHECK(off.merge_mode == MergeMode::kOff);
}

TEST_CASE("range checks") {
  CHECK_THROWS_AS(RunConfig::from_text("merge_alpha: 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_text("d_model: 30\nn_heads: 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_text("lr: 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_text("alpha_sel: -1\n"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_text("dropout: 1.0\n"), std::invalid_argument);
}

TEST_CASE("ablation rows cover the six configurations") {
  const auto names = ablation::row_names();
  CHECK(names == std::vector<std::string>{"backbone", "+cs", "+cs/hm", "+cs/sm", "+cs/sm/ic",
                                          "+cs/sm/ic/cm"});
  const RunConfig base;
  const auto backbone = ablation::row_config(base, "backbone");
  CHECK_FALSE(backbone.cs);
  CHECK(backbone.effective_merge() == MergeMode::kOff);

  const auto hm = ablation::row_config(base, "+cs/hm");
  CHECK(hm.cs);
  CHECK(hm.merge_mode == MergeMode::kHard);
  CHECK_FALSE(hm.cm);

  const auto full = ablation::row_config(base, "+cs/sm/ic/cm");
  CHECK(full.cs);
  CHECK(full.cm);
  CHECK(full.ic);
  CHECK(full.merge_mode == MergeMode::kSoft);
  CHECK_THROWS_AS(ablation::row_config(base, "+nope"), std::invalid_argument);
}
