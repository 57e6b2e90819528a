#pragma once

#include <string>
#include <vector>

namespace bbci::bench {

struct MetricsRow {
  std::string scenario;
  long seed;
  std::string condition;
  std::string metric;
  double value;
  std::string units;
};

// Writes `scenario,seed,condition,metric,value,units` with rows sorted by
// (scenario, seed, condition, metric) and values printed to 12
// significant digits. Duplicate keys are an error.
void emit_metrics(std::vector<MetricsRow> rows, const std::string& path);

std::string format_value(double v);  // the 12-significant-digit rule

}  // namespace bbci::bench
