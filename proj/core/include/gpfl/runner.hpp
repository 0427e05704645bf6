#pragma once

#include <string>
#include <vector>

#include "gpfl/config.hpp"
#include "gpfl/engine.hpp"

namespace gpfl {

/// Resolve the effective output directory: a relative output.dir is
/// placed under $GPFL_OUTPUT_ROOT when that variable is set.
std::string resolve_output_dir(const std::string& configured);

/// Build the federated problem a config describes (dataset, partition,
/// objective, optimum oracle, accuracy metric).
Federation build_federation(const RunConfig& config);

/// Execute every (method, seed) cell and return the results in
/// deterministic (method, seed) order.
std::vector<RunResult> execute_runs(const RunConfig& config,
                                    const Federation& world);

/// `run`: execute and write metrics.csv, bounds.csv, config.resolved
/// into the output dir. Returns the process exit code (0 ok, 2 invalid
/// config, 1 runtime failure).
int run_command(const std::string& config_path);

/// `sweep`: cross product over one parameter; one subdirectory per value
/// plus summary.csv with final-round medians.
int sweep_command(const std::string& config_path, const std::string& param,
                  const std::vector<std::string>& values);

}  // namespace gpfl
