#include "bbci/bench/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <tuple>

namespace bbci::bench {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::string(buf);
}

void emit_metrics(std::vector<MetricsRow> rows, const std::string& path) {
  auto key = [](const MetricsRow& r) {
    return std::tie(r.scenario, r.seed, r.condition, r.metric);
  };
  std::sort(rows.begin(), rows.end(),
            [&](const MetricsRow& a, const MetricsRow& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (key(rows[i - 1]) == key(rows[i]))
      throw std::runtime_error("emit_metrics: duplicate row (" + rows[i].scenario + ", " +
                               std::to_string(rows[i].seed) + ", " + rows[i].condition + ", " +
                               rows[i].metric + ")");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_metrics: cannot write " + path);
  out << "scenario,seed,condition,metric,value,units\n";
  for (const MetricsRow& r : rows)
    out << r.scenario << ',' << r.seed << ',' << r.condition << ',' << r.metric << ','
        << format_value(r.value) << ',' << r.units << '\n';
  if (!out) throw std::runtime_error("emit_metrics: write failed for " + path);
}

}  // namespace bbci::bench
