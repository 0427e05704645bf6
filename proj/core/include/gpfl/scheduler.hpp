#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gpfl/channel.hpp"

namespace gpfl {

struct ScheduleOptions {
  int sweeps = 40;          // annealing sweeps; each proposes one flip per client
  double rho = 0.0;         // participation reward: J(S) = variance - rho |S|
  double cooling = 0.95;    // geometric temperature decay per sweep
  double p0 = 1.0;
  int dim = 1;              // symbols per round, enters the ZF power factor
};

struct ScheduleResult {
  std::vector<int> selected;  // ascending client indices, never empty
  double objective = 0.0;
};

/// Aggregation-error objective of a candidate subset: the noise variance
/// of the MRC receiver on the subset's channels minus rho * |S|. The full
/// DC receiver is reserved for the finally chosen set.
double selection_objective(const std::vector<int>& subset,
                           const ChannelRealization& channels,
                           const std::vector<double>& sizes,
                           const ScheduleOptions& options);

/// Metropolis-within-Gibbs over single-client flips with geometric
/// cooling. Deterministic given the seed; the initial temperature is the
/// median |dJ| over 20 random flips from the full set.
ScheduleResult select_devices(const ChannelRealization& channels,
                              const std::vector<double>& sizes,
                              const ScheduleOptions& options, std::uint64_t seed);

}  // namespace gpfl
