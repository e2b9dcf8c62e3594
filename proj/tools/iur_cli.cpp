// Command-line interface: train, eval, rewrite, labels, ablate, synth.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "iur/ablation.hpp"
#include "iur/checkpoint.hpp"
#include "iur/config.hpp"
#include "iur/corpus.hpp"
#include "iur/heads.hpp"
#include "iur/encoder.hpp"
#include "iur/parallel.hpp"
#include "iur/rewriter.hpp"
#include "iur/rng.hpp"
#include "iur/supervision.hpp"
#include "iur/trainer.hpp"

namespace {

using namespace iur;
using nlohmann::json;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string data_path;
  std::string checkpoint_path;
  std::string out_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run configuration file (key: value lines)");
  cmd->add_option("--seed", opts.seed, "override the configured seed");
  cmd->add_option("--data", opts.data_path, "JSONL dataset path");
  cmd->add_option("--checkpoint", opts.checkpoint_path, "checkpoint path");
  cmd->add_option("--out", opts.out_path, "output path");
}

config::RunConfig load_config(const CommonOpts& opts) {
  config::RunConfig cfg = opts.config_path.empty()
                              ? config::RunConfig{}
                              : config::RunConfig::from_file(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.data_path.empty()) cfg.train_data = opts.data_path;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& path, const char* who) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(std::string(who) + ": cannot open " + path);
  return out;
}

json report_to_json(const metrics::MetricsReport& r) {
  json j;
  j["bleu1"] = r.bleu1;
  j["bleu2"] = r.bleu2;
  j["rouge1"] = r.rouge1;
  j["rouge2"] = r.rouge2;
  j["rougeL"] = r.rougeL;
  j["f1"] = r.f1;
  j["f2"] = r.f2;
  j["f3"] = r.f3;
  j["exact_match"] = r.exact_match;
  j["n_examples"] = r.n_examples;
  j["bleu_smoothed"] = r.bleu_smoothed;
  return j;
}

int cmd_synth(const CommonOpts& opts, std::uint64_t seed, std::size_t size) {
  if (opts.out_path.empty()) throw std::runtime_error("synth: --out is required");
  corpus::save_jsonl(corpus::make_synthetic_corpus(seed, size), opts.out_path);
  std::cout << "wrote " << size << " dialogues to " << opts.out_path << "\n";
  return 0;
}

int cmd_labels(const CommonOpts& opts, bool verify) {
  if (opts.data_path.empty()) throw std::runtime_error("labels: --data is required");
  const auto data = corpus::load_jsonl(opts.data_path);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!opts.out_path.empty()) {
    file = open_out(opts.out_path, "labels");
    out = &file;
  }
  std::size_t aligned = 0, roundtrip_failures = 0;
  for (const auto& d : data) {
    const auto labels = supervision::relevance_labels(d);
    const auto [grid, status] = supervision::build_gold_edit_grid(d);
    json rec;
    rec["id"] = d.id;
    rec["R"] = labels.relevant;
    rec["status"] =
        status == supervision::AlignStatus::kAligned ? "ALIGNED" : "UNALIGNABLE";
    json edits = json::array();
    for (int i = 0; i < grid.n_ctx; ++i)
      for (int j = 0; j < grid.n_utt; ++j)
        if (grid.at(i, j) != supervision::EditType::kNone)
          edits.push_back({i, j, supervision::to_string(grid.at(i, j))});
    rec["edits"] = edits;
    (*out) << rec.dump() << "\n";

    if (status == supervision::AlignStatus::kAligned) {
      ++aligned;
      if (verify) {
        std::vector<int> owner;
        corpus::TokenList ctx_tokens;
        for (std::size_t k = 0; k < d.context.size(); ++k)
          for (const auto& tok : d.context[k].tokens) {
            owner.push_back(static_cast<int>(k));
            ctx_tokens.push_back(tok);
          }
        const auto spans = rewriter::decode_grid(grid, owner);
        const auto applied =
            rewriter::apply_edits(d.incomplete.tokens, spans, ctx_tokens, owner);
        if (applied.tokens != d.rewrite->tokens) ++roundtrip_failures;
      }
    }
  }
  std::cerr << "labels: " << aligned << "/" << data.size() << " aligned\n";
  if (verify && roundtrip_failures > 0) {
    std::cerr << "labels: " << roundtrip_failures << " aligned grids failed the round-trip\n";
    return 1;
  }
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& dev_path) {
  config::RunConfig cfg = load_config(opts);
  if (cfg.train_data.empty()) throw std::runtime_error("train: --data or train_data is required");
  const auto train_data = corpus::load_jsonl(cfg.train_data);
  std::vector<corpus::Dialogue> dev_data;
  if (!dev_path.empty())
    dev_data = corpus::load_jsonl(dev_path);
  else if (!cfg.dev_data.empty())
    dev_data = corpus::load_jsonl(cfg.dev_data);

  Model model = Model::create(cfg, corpus::Vocab::build(train_data));
  std::ofstream log;
  std::ostream* log_stream = nullptr;
  if (!opts.out_path.empty()) {
    log = open_out(opts.out_path, "train");
    log_stream = &log;
  }
  const auto outcome = trainer::train(model, train_data, dev_data, log_stream);
  std::cout << "trained " << outcome.steps_run << " steps, final loss " << outcome.final_loss
            << ", best dev exact match " << outcome.best_exact_match << " at step "
            << outcome.best_step << "\n";
  if (!opts.checkpoint_path.empty()) {
    checkpoint::save(opts.checkpoint_path, model, outcome.steps_run, outcome.rng_state);
    std::cout << "checkpoint written to " << opts.checkpoint_path << "\n";
  }
  return 0;
}

int cmd_eval(const CommonOpts& opts, bool oracle, int threads, const std::string& per_example) {
  if (opts.data_path.empty()) throw std::runtime_error("eval: --data is required");
  const auto data = corpus::load_jsonl(opts.data_path);

  metrics::MetricsReport report;
  std::vector<corpus::TokenList> preds;
  if (oracle) {
    report = trainer::evaluate_oracle(data);
  } else {
    if (opts.checkpoint_path.empty())
      throw std::runtime_error("eval: --checkpoint is required unless --oracle is given");
    const auto loaded = checkpoint::load(opts.checkpoint_path);
    report = trainer::evaluate_model(loaded.model, data, threads);
    if (!per_example.empty()) preds = trainer::rewrite_all(loaded.model, data, threads);
  }

  const json j = report_to_json(report);
  if (!opts.out_path.empty())
    open_out(opts.out_path, "eval") << j.dump(2) << "\n";
  else
    std::cout << j.dump(2) << "\n";

  if (!per_example.empty() && !oracle) {
    auto csv = open_out(per_example, "eval");
    csv << "id,bleu1,rouge1,rougeL,exact\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& ref = data[i].rewrite->tokens;
      csv << data[i].id << "," << metrics::bleu_n(preds[i], ref, 1) << ","
          << metrics::rouge_n(preds[i], ref, 1) << "," << metrics::rouge_l(preds[i], ref) << ","
          << (preds[i] == ref ? 1 : 0) << "\n";
    }
  }
  return 0;
}

int cmd_rewrite(const CommonOpts& opts, bool dump_grid, int threads) {
  if (opts.data_path.empty()) throw std::runtime_error("rewrite: --data is required");
  if (opts.checkpoint_path.empty()) throw std::runtime_error("rewrite: --checkpoint is required");
  const auto data = corpus::load_jsonl(opts.data_path);
  const auto loaded = checkpoint::load(opts.checkpoint_path);
  const Model& model = loaded.model;

  struct Line {
    std::string text;
  };
  const auto lines = ordered_parallel_map<Line>(data.size(), threads, [&](std::size_t i) {
    const auto result = rewriter::rewrite(model, model.cfg, data[i]);
    json rec;
    rec["id"] = data[i].id;
    rec["rewrite"] = corpus::join_tokens(result.tokens);
    json spans = json::array();
    for (const auto& s : result.spans)
      spans.push_back({supervision::to_string(s.type), s.ctx_begin, s.ctx_end, s.column});
    rec["spans"] = spans;
    rec["relevance"] = result.relevance;
    rec["conflicts"] = result.conflicts;
    if (dump_grid) {
      const auto ex = corpus::encode_example(data[i], model.vocab);
      const auto enc = encoder::encode(model, ex);
      const auto grid = heads::edit_grid(model, enc.hidden, ex);
      rec["grid"] = {{"n_ctx", grid.n_ctx},
                     {"n_utt", grid.n_utt},
                     {"p", grid.probs->value}};
    }
    return Line{rec.dump()};
  });

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!opts.out_path.empty()) {
    file = open_out(opts.out_path, "rewrite");
    out = &file;
  }
  for (const auto& line : lines) (*out) << line.text << "\n";
  return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& dev_path, std::size_t synth_train,
               std::size_t synth_dev) {
  config::RunConfig base = load_config(opts);
  std::vector<corpus::Dialogue> train_data, dev_data;
  if (!base.train_data.empty()) {
    train_data = corpus::load_jsonl(base.train_data);
    if (dev_path.empty() && base.dev_data.empty())
      throw std::runtime_error("ablate: a dev set is required with --data");
    dev_data = corpus::load_jsonl(dev_path.empty() ? base.dev_data : dev_path);
  } else {
    train_data = corpus::make_synthetic_corpus(mix_seed(base.seed, 0xab1a), synth_train);
    dev_data = corpus::make_synthetic_corpus(mix_seed(base.seed, 0xab1b), synth_dev);
  }

  const auto table = ablation::run(base, train_data, dev_data, &std::cerr);
  std::cout << ablation::format_table(table);
  if (!opts.out_path.empty()) open_out(opts.out_path, "ablate") << ablation::to_json(table) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edit-based incomplete utterance rewriting toolkit"};
  app.require_subcommand(1);

  CommonOpts synth_opts, labels_opts, train_opts, eval_opts, rewrite_opts, ablate_opts;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dialogue corpus");
  std::uint64_t synth_seed = 1;
  std::size_t synth_size = 1000;
  add_common(synth, synth_opts);
  synth->add_option("--size", synth_size, "number of dialogues");
  synth->callback([&] {
    if (synth_opts.seed) synth_seed = *synth_opts.seed;
  });

  auto* labels = app.add_subcommand("labels", "derive relevance labels and gold edit grids");
  bool verify = false;
  add_common(labels, labels_opts);
  labels->add_flag("--verify", verify, "exit nonzero if an aligned grid fails the round-trip");

  auto* train = app.add_subcommand("train", "train a model");
  std::string train_dev;
  add_common(train, train_opts);
  train->add_option("--dev", train_dev, "JSONL dev set for periodic evaluation");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  bool oracle = false;
  int eval_threads = 1;
  std::string per_example;
  add_common(eval, eval_opts);
  eval->add_flag("--oracle", oracle, "score gold-grid rewrites instead of model output");
  eval->add_option("--threads", eval_threads, "worker threads");
  eval->add_option("--per-example", per_example, "optional per-example CSV path");

  auto* rewrite = app.add_subcommand("rewrite", "rewrite a dataset with a checkpoint");
  bool dump_grid = false;
  int rewrite_threads = 1;
  add_common(rewrite, rewrite_opts);
  rewrite->add_flag("--dump-grid", dump_grid, "include raw cell probabilities");
  rewrite->add_option("--threads", rewrite_threads, "worker threads");

  auto* ablate = app.add_subcommand("ablate", "train and evaluate the six switch configurations");
  std::string ablate_dev;
  std::size_t ablate_train_size = 2000, ablate_dev_size = 256;
  add_common(ablate, ablate_opts);
  ablate->add_option("--dev", ablate_dev, "JSONL dev set (required with --data)");
  ablate->add_option("--synth-train-size", ablate_train_size,
                     "synthetic train size when no --data is given");
  ablate->add_option("--synth-dev-size", ablate_dev_size,
                     "synthetic dev size when no --data is given");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(synth_opts, synth_opts.seed.value_or(synth_seed), synth_size);
    if (labels->parsed()) return cmd_labels(labels_opts, verify);
    if (train->parsed()) return cmd_train(train_opts, train_dev);
    if (eval->parsed()) return cmd_eval(eval_opts, oracle, eval_threads, per_example);
    if (rewrite->parsed()) return cmd_rewrite(rewrite_opts, dump_grid, rewrite_threads);
    if (ablate->parsed())
      return cmd_ablate(ablate_opts, ablate_dev, ablate_train_size, ablate_dev_size);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
