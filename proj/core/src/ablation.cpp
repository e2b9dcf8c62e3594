#include "iur/ablation.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "iur/model.hpp"
#include "iur/trainer.hpp"

namespace iur::ablation {

std::vector<std::string> row_names() {
  return {"backbone", "+cs", "+cs/hm", "+cs/sm", "+cs/sm/ic", "+cs/sm/ic/cm"};
}

config::RunConfig row_config(const config::RunConfig& base, const std::string& row_name) {
  config::RunConfig cfg = base;
  cfg.cs = cfg.cm = cfg.sm = cfg.hm = cfg.ic = false;
  if (row_name == "backbone") {
  } else if (row_name == "+cs") {
    cfg.cs = true;
  } else if (row_name == "+cs/hm") {
    cfg.cs = cfg.hm = true;
  } else if (row_name == "+cs/sm") {
    cfg.cs = cfg.sm = true;
  } else if (row_name == "+cs/sm/ic") {
    cfg.cs = cfg.sm = cfg.ic = true;
  } else if (row_name == "+cs/sm/ic/cm") {
    cfg.cs = cfg.sm = cfg.ic = cfg.cm = true;
  } else {
    throw std::invalid_argument("ablation: unknown row '" + row_name + "'");
  }
  cfg.derive_merge_mode();
  cfg.validate();
  return cfg;
}

Table run(const config::RunConfig& base, const std::vector<corpus::Dialogue>& train_data,
          const std::vector<corpus::Dialogue>& dev_data, std::ostream* progress) {
  if (dev_data.empty()) throw std::invalid_argument("ablation: held-out set is empty");
  const corpus::Vocab vocab = corpus::Vocab::build(train_data);
  Table table;
  for (const auto& name : row_names()) {
    const config::RunConfig cfg = row_config(base, name);
    Model model = Model::create(cfg, vocab);
    if (progress) (*progress) << "[ablate] training " << name << "\n" << std::flush;
    const auto outcome = trainer::train(model, train_data, dev_data, nullptr);
    Row row;
    row.name = name;
    row.report = trainer::evaluate_model(model, dev_data);
    row.train_exact_match = outcome.best_exact_match;
    if (progress)
      (*progress) << "[ablate] " << name << " dev exact match "
                  << row.report.exact_match << " (steps " << outcome.steps_run << ")\n"
                  << std::flush;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string format_table(const Table& table) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "model";
  for (const char* col : {"B1", "B2", "R1", "R2", "F1", "F2", "F3", "EM"})
    os << std::right << std::setw(7) << col;
  os << "\n";
  os << std::string(14 + 8 * 7, '-') << "\n";
  os << std::fixed << std::setprecision(1);
  for (const auto& row : table.rows) {
    os << std::left << std::setw(14) << row.name;
    const auto& r = row.report;
    for (double v : {r.bleu1, r.bleu2, r.rouge1, r.rouge2, r.f1, r.f2, r.f3, r.exact_match})
      os << std::right << std::setw(7) << 100.0 * v;
    os << "\n";
  }
  return os.str();
}

std::string to_json(const Table& table) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json j;
    j["model"] = row.name;
    j["B1"] = row.report.bleu1;
    j["B2"] = row.report.bleu2;
    j["R1"] = row.report.rouge1;
    j["R2"] = row.report.rouge2;
    j["RL"] = row.report.rougeL;
    j["F1"] = row.report.f1;
    j["F2"] = row.report.f2;
    j["F3"] = row.report.f3;
    j["EM"] = row.report.exact_match;
    j["train_EM"] = row.train_exact_match;
    out.push_back(j);
  }
  return out.dump(2);
}

}  // namespace iur::ablation
