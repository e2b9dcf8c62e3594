#include "iur/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "iur/parallel.hpp"
#include "iur/rewriter.hpp"
#include "iur/rng.hpp"

namespace iur::trainer {

Adam::Adam(double lr, int warmup_steps) : lr_(lr), warmup_(warmup_steps) {}

double Adam::current_lr() const {
  if (warmup_ <= 0) return lr_;
  const double t = static_cast<double>(t_);
  return lr_ * std::min(1.0, t / static_cast<double>(warmup_));
}

void Adam::step(nn::ParamStore& params) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  ++t_;
  const double lr = current_lr();
  const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (const auto& [name, tensor] : params.items()) {
    if (tensor->grad.size() != tensor->value.size()) continue;  // no gradient this step
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() != tensor->value.size()) m.assign(tensor->value.size(), 0.0);
    if (v.size() != tensor->value.size()) v.assign(tensor->value.size(), 0.0);
    for (std::size_t i = 0; i < tensor->value.size(); ++i) {
      const double g = tensor->grad[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      const double mhat = m[i] / bias1;
      const double vhat = v[i] / bias2;
      tensor->value[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

TrainOutcome train(Model& model, const std::vector<corpus::Dialogue>& train_data,
                   const std::vector<corpus::Dialogue>& dev_data, std::ostream* log) {
  const auto& cfg = model.cfg;
  if (train_data.empty()) throw std::invalid_argument("train: empty training data");
  for (const auto& d : train_data)
    if (!d.rewrite) throw std::invalid_argument("train: dialogue '" + d.id + "' has no rewrite");

  const auto prepared = objective::prepare_corpus(train_data, model.vocab);
  const std::vector<corpus::Dialogue>& dev = dev_data.empty() ? train_data : dev_data;

  Adam optimizer(cfg.lr, cfg.warmup_steps);
  Rng shuffle_rng(mix_seed(cfg.seed, 0xba7c4));
  Rng dropout_rng(mix_seed(cfg.seed, 0xd407));

  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // forces a shuffle on first use

  TrainOutcome outcome;
  auto best_values = model.snapshot_values();
  outcome.best_exact_match = -1.0;

  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<const objective::PreparedExample*> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        shuffle_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&prepared[order[cursor++]]);
    }

    model.params.zero_grads();
    nn::Graph graph;
    objective::LossBreakdown numbers;
    {
      nn::GraphScope scope(graph);
      auto result = objective::batch_losses(model, batch, /*train=*/true, &dropout_rng);
      graph.backward(result.final_loss);
      numbers = result.numbers;
    }
    optimizer.step(model.params);
    outcome.final_loss = numbers.final_loss;
    outcome.steps_run = step;

    if (log) {
      nlohmann::json line;
      line["step"] = step;
      line["L_edit"] = numbers.edit;
      line["L_sel"] = numbers.sel;
      line["L_mat"] = numbers.mat;
      line["L_int"] = numbers.intention;
      line["L_final"] = numbers.final_loss;
      line["lr"] = optimizer.current_lr();
      (*log) << line.dump() << "\n";
    }

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      const double em = exact_match(model, dev);
      if (em > outcome.best_exact_match) {
        outcome.best_exact_match = em;
        outcome.best_step = step;
        best_values = model.snapshot_values();
      }
      if (em >= cfg.early_stop_em) break;
    }
  }

  if (cfg.steps == 0) {
    outcome.best_exact_match = exact_match(model, dev);
    outcome.best_step = 0;
    best_values = model.snapshot_values();
  }

  model.restore_values(best_values);
  outcome.rng_state = shuffle_rng.save_state();
  return outcome;
}

std::vector<corpus::TokenList> rewrite_all(const Model& model,
                                           const std::vector<corpus::Dialogue>& data,
                                           int threads) {
  return ordered_parallel_map<corpus::TokenList>(data.size(), threads, [&](std::size_t i) {
    return rewriter::rewrite(model, model.cfg, data[i]).tokens;
  });
}

double exact_match(const Model& model, const std::vector<corpus::Dialogue>& data, int threads) {
  if (data.empty()) return 0.0;
  const auto rewrites = rewrite_all(model, data, threads);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].rewrite)
      throw std::invalid_argument("exact_match: dialogue '" + data[i].id + "' has no rewrite");
    if (rewrites[i] == data[i].rewrite->tokens) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

void require_rewrites(const std::vector<corpus::Dialogue>& data, const char* who) {
  std::string missing;
  for (const auto& d : data)
    if (!d.rewrite) missing += missing.empty() ? d.id : ", " + d.id;
  if (!missing.empty())
    throw std::invalid_argument(std::string(who) + ": missing gold rewrites for: " + missing);
}

}  // namespace

metrics::MetricsReport evaluate_model(const Model& model,
                                      const std::vector<corpus::Dialogue>& data, int threads) {
  if (data.empty()) throw std::invalid_argument("evaluate_model: empty dataset");
  require_rewrites(data, "evaluate_model");
  const auto preds = rewrite_all(model, data, threads);
  std::vector<corpus::TokenList> refs, incompletes;
  refs.reserve(data.size());
  incompletes.reserve(data.size());
  for (const auto& d : data) {
    refs.push_back(d.rewrite->tokens);
    incompletes.push_back(d.incomplete.tokens);
  }
  return metrics::evaluate(preds, refs, incompletes);
}

metrics::MetricsReport evaluate_oracle(const std::vector<corpus::Dialogue>& data) {
  if (data.empty()) throw std::invalid_argument("evaluate_oracle: empty dataset");
  require_rewrites(data, "evaluate_oracle");
  std::vector<corpus::TokenList> preds, refs, incompletes;
  preds.reserve(data.size());
  for (const auto& d : data) {
    auto [grid, status] = supervision::build_gold_edit_grid(d);
    corpus::TokenList ctx_tokens;
    std::vector<int> owner;
    for (std::size_t k = 0; k < d.context.size(); ++k)
      for (const auto& tok : d.context[k].tokens) {
        ctx_tokens.push_back(tok);
        owner.push_back(static_cast<int>(k));
      }
    const auto spans = rewriter::decode_grid(grid, owner);
    preds.push_back(rewriter::apply_edits(d.incomplete.tokens, spans, ctx_tokens, owner).tokens);
    refs.push_back(d.rewrite->tokens);
    incompletes.push_back(d.incomplete.tokens);
  }
  return metrics::evaluate(preds, refs, incompletes);
}

}  // namespace iur::trainer
