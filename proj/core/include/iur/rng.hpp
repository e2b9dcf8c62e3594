#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace iur {

// Deterministic random source. The mt19937_64 engine is bit-exact across
// standard libraries; all draws are derived from raw engine output here so
// that results never depend on the platform's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  // Uniform double in [0, 1) with 53 bits of precision.
  double next_real();

  // Uniform double in [lo, hi).
  double next_real(double lo, double hi);

  // Standard normal via Box-Muller.
  double next_normal();
  double next_normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // First k elements of a shuffled copy of [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  // Engine state as text; the Box-Muller cache is dropped on save.
  std::string save_state() const;
  void load_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Stable 64-bit hash for strings (FNV-1a), used to derive per-id sub-seeds.
std::uint64_t stable_hash(const std::string& s);

// Mixes a base seed with a salt into a fresh seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace iur
