#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "iur/config.hpp"
#include "iur/corpus.hpp"
#include "iur/metrics.hpp"

namespace iur::ablation {

// The six switch configurations of the ablation grid, in reporting order:
// backbone, +cs, +cs/hm, +cs/sm, +cs/sm/ic, +cs/sm/ic/cm.
std::vector<std::string> row_names();

config::RunConfig row_config(const config::RunConfig& base, const std::string& row_name);

struct Row {
  std::string name;
  metrics::MetricsReport report;
  double train_exact_match = 0.0;
};

struct Table {
  std::vector<Row> rows;
};

// Trains every row from scratch on the same data with the shared seed from
// `base`, then evaluates on the held-out set.
Table run(const config::RunConfig& base, const std::vector<corpus::Dialogue>& train_data,
          const std::vector<corpus::Dialogue>& dev_data, std::ostream* progress = nullptr);

// Fixed-width text table with B1/B2/R1/R2/F1/F2/F3 and EM columns (percent).
std::string format_table(const Table& table);

// JSON payload mirroring the text table.
std::string to_json(const Table& table);

}  // namespace iur::ablation
