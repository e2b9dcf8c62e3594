#pragma once

#include "iur/config.hpp"
#include "iur/corpus.hpp"
#include "iur/tensor.hpp"

namespace iur {

// Trainable parameters plus the vocabulary and configuration they were built
// for. Construction is deterministic under cfg.seed.
struct Model {
  config::RunConfig cfg;
  corpus::Vocab vocab;
  nn::ParamStore params;

  static Model create(const config::RunConfig& cfg, corpus::Vocab vocab);

  int unet_c0() const { return cfg.unet_base_channels; }
  int unet_c1() const { return 2 * cfg.unet_base_channels; }
  int unet_c2() const { return 4 * cfg.unet_base_channels; }

  // Deep copy / restore of parameter values (optimizer state excluded).
  std::vector<std::vector<double>> snapshot_values() const;
  void restore_values(const std::vector<std::vector<double>>& snapshot);
};

}  // namespace iur
