#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gpfl/analysis.hpp"
#include "gpfl/engine.hpp"

namespace gpfl {

/// 17 significant digits; round-trip exact for doubles, "nan" for NaN.
std::string format_double(double value);

/// Fixed schema:
/// method,seed,round,loss,accuracy,dist_to_opt,g_tilde_norm,eta,alpha,c_norm,delta_probe,wall_ms
/// Rows are sorted by (method, seed, round).
void write_metrics_csv(std::ostream& out, const std::vector<RunResult>& results);

/// Bound-vs-observed table, one block per method that carries a
/// second-order estimate. Schema:
/// method,round,observed_dist,bound_closed,bound_recursive,within
struct BoundBlock {
  std::string method;
  double delta = 0.0;
  EmpiricalReport report;
};
void write_bounds_csv(std::ostream& out, const std::vector<BoundBlock>& blocks);

}  // namespace gpfl
