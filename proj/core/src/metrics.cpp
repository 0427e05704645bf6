#include "gpfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace gpfl {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<RunResult>& results) {
  std::vector<const RunResult*> order;
  order.reserve(results.size());
  for (const auto& r : results) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const RunResult* a, const RunResult* b) {
    const std::string an = method_name(a->method);
    const std::string bn = method_name(b->method);
    if (an != bn) return an < bn;
    return a->seed < b->seed;
  });

  out << "method,seed,round,loss,accuracy,dist_to_opt,g_tilde_norm,eta,alpha,"
         "c_norm,delta_probe,wall_ms\n";
  for (const RunResult* run : order) {
    const std::string name = method_name(run->method);
    for (const RoundRecord& rec : run->records) {
      out << name << ',' << run->seed << ',' << rec.round << ','
          << format_double(rec.loss) << ',' << format_double(rec.accuracy) << ','
          << format_double(rec.dist_to_opt) << ','
          << format_double(rec.g_tilde_norm) << ',' << format_double(rec.eta)
          << ',' << format_double(rec.alpha) << ',' << format_double(rec.c_norm)
          << ',' << format_double(rec.delta_probe) << ','
          << format_double(rec.wall_ms) << '\n';
    }
  }
}

void write_bounds_csv(std::ostream& out, const std::vector<BoundBlock>& blocks) {
  out << "method,delta,round,observed_dist,bound_closed,bound_recursive,within\n";
  for (const BoundBlock& block : blocks) {
    for (const EmpiricalRow& row : block.report.rows) {
      out << block.method << ',' << format_double(block.delta) << ','
          << row.round << ',' << format_double(row.observed) << ','
          << format_double(row.bound_closed) << ','
          << format_double(row.bound_recursive) << ','
          << (row.observed <= row.bound_closed ? 1 : 0) << '\n';
    }
  }
}

}  // namespace gpfl
