#pragma once

#include <cstdint>
#include <string>

#include "iur/model.hpp"

namespace iur::checkpoint {

// Binary checkpoint: format version, config echo, vocabulary, named parameter
// tensors (raw little-endian doubles), training step and RNG state. Loading a
// saved model reproduces forward outputs bitwise.
void save(const std::string& path, const Model& model, std::int64_t step,
          const std::string& rng_state);

struct Loaded {
  Model model;
  std::int64_t step = 0;
  std::string rng_state;
};

Loaded load(const std::string& path);

}  // namespace iur::checkpoint
