#include <doctest.h>

#include <stdexcept>

#include <cstdio>

#include "iur/checkpoint.hpp"
#include "iur/encoder.hpp"
#include "test_util.hpp"

using namespace iur;

namespace {

struct TempPath {
  std::string path;
  explicit TempPath(const char* name) : path(std::string("iur_test_") + name + ".ckpt") {}
  ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("checkpoint round-trip reproduces forward outputs bitwise") {
  const auto data = corpus::make_synthetic_corpus(3, 6);
  Model model = testutil::tiny_model(data, 3);
  const auto ex = corpus::encode_example(data[0], model.vocab);
  const auto before = encoder::encode(model, ex);

  TempPath tmp("roundtrip");
  checkpoint::save(tmp.path, model, 123, "rngstate");
  const auto loaded = checkpoint::load(tmp.path);
  CHECK(loaded.step == 123);
  CHECK(loaded.rng_state == "rngstate");
  CHECK(loaded.model.vocab.size() == model.vocab.size());
  CHECK(loaded.model.cfg.to_text() == model.cfg.to_text());

  for (std::size_t i = 0; i < model.params.items().size(); ++i) {
    CHECK(loaded.model.params.items()[i].first == model.params.items()[i].first);
    CHECK(loaded.model.params.items()[i].second->value == model.params.items()[i].second->value);
  }

  const auto after = encoder::encode(loaded.model, ex);
  CHECK(after.hidden->value == before.hidden->value);  // bitwise
}

TEST_CASE("checkpoint rejects corrupt files") {
  TempPath tmp("corrupt");
  {
    std::FILE* f = std::fopen(tmp.path.c_str(), "wb");
    std::fputs("not a checkpoint", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(checkpoint::load(tmp.path), std::runtime_error);
  CHECK_THROWS_AS(checkpoint::load("does_not_exist.ckpt"), std::runtime_error);
}

TEST_CASE("rng state survives save and load") {
  Rng rng(99);
  (void)rng.next_u64();
  const std::string state = rng.save_state();
  const double expected = rng.next_real();
  Rng restored(1);
  restored.load_state(state);
  CHECK(restored.next_real() == expected);
  CHECK_THROWS_AS(restored.load_state("garbage state ???"), std::runtime_error);
}
