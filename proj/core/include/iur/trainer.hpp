#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "iur/corpus.hpp"
#include "iur/metrics.hpp"
#include "iur/model.hpp"
#include "iur/objective.hpp"

namespace iur::trainer {

// Adam with constant learning rate and linear warmup.
class Adam {
 public:
  Adam(double lr, int warmup_steps);
  void step(nn::ParamStore& params);
  std::int64_t steps_taken() const { return t_; }
  double current_lr() const;

 private:
  double lr_;
  int warmup_;
  std::int64_t t_ = 0;
  std::unordered_map<std::string, std::vector<double>> m_, v_;
};

struct TrainOutcome {
  int steps_run = 0;
  double final_loss = 0.0;
  double best_exact_match = 0.0;
  int best_step = 0;
  std::string rng_state;  // trainer RNG after the last step
};

// Seeded, reproducible training loop with periodic dev evaluation; the
// best-dev parameter values are restored into the model on return. One JSON
// object per step is written to `log` when provided.
TrainOutcome train(Model& model, const std::vector<corpus::Dialogue>& train_data,
                   const std::vector<corpus::Dialogue>& dev_data, std::ostream* log);

// Greedy rewrites for a whole dataset; order-stable across thread counts.
std::vector<corpus::TokenList> rewrite_all(const Model& model,
                                           const std::vector<corpus::Dialogue>& data,
                                           int threads = 1);

// Fraction of examples whose model rewrite equals the gold rewrite exactly.
double exact_match(const Model& model, const std::vector<corpus::Dialogue>& data,
                   int threads = 1);

// Rewrites every example and scores the full report. Dialogues must carry
// gold rewrites; offenders are listed in the error.
metrics::MetricsReport evaluate_model(const Model& model,
                                      const std::vector<corpus::Dialogue>& data, int threads = 1);

// Oracle evaluation: applies the gold edit grid instead of model predictions.
metrics::MetricsReport evaluate_oracle(const std::vector<corpus::Dialogue>& data);

}  // namespace iur::trainer
