#include "gpfl/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gpfl/receiver.hpp"
#include "gpfl/rng.hpp"

namespace gpfl {

double selection_objective(const std::vector<int>& subset,
                           const ChannelRealization& channels,
                           const std::vector<double>& sizes,
                           const ScheduleOptions& options) {
  if (subset.empty()) throw std::invalid_argument("selection_objective: empty set");

  Eigen::MatrixXcd h(channels.antennas, subset.size());
  std::vector<double> sub_sizes(subset.size());
  double noise_var = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const int k = subset[i];
    h.col(static_cast<int>(i)) = channels.h.col(k);
    sub_sizes[i] = sizes[k];
    noise_var += channels.sigma[k] * channels.sigma[k];
    total += sizes[k];
  }

  const Eigen::VectorXcd c = mrc_receiver(h, sub_sizes);
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < h.cols(); ++i) {
    const double proj = std::norm(c.dot(h.col(i)));
    min_ratio = std::min(min_ratio, proj / (sub_sizes[i] * sub_sizes[i]));
  }
  if (min_ratio <= 0.0) return std::numeric_limits<double>::infinity();

  const double alpha = options.p0 * options.dim * min_ratio;
  const double variance = noise_var * c.squaredNorm() / (total * total * alpha);
  return variance - options.rho * static_cast<double>(subset.size());
}

namespace {

std::vector<int> to_sorted(const std::vector<bool>& mask) {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(mask.size()); ++k)
    if (mask[k]) out.push_back(k);
  return out;
}

}  // namespace

ScheduleResult select_devices(const ChannelRealization& channels,
                              const std::vector<double>& sizes,
                              const ScheduleOptions& options, std::uint64_t seed) {
  const int clients = channels.clients();
  if (clients < 1) throw std::invalid_argument("select_devices: no clients");
  if (static_cast<int>(sizes.size()) != clients)
    throw std::invalid_argument("select_devices: size count mismatch");

  std::vector<bool> mask(clients, true);
  double current = selection_objective(to_sorted(mask), channels, sizes, options);
  ScheduleResult best{to_sorted(mask), current};
  if (clients == 1) return best;
  // Noiseless channels make every subset's variance zero; the objective is
  // flat and full participation is the deterministic tie-break.
  if (channels.total_noise_var() == 0.0) return best;

  const auto flipped_objective = [&](int k) {
    mask[k] = !mask[k];
    double value = std::numeric_limits<double>::infinity();
    if (std::any_of(mask.begin(), mask.end(), [](bool b) { return b; }))
      value = selection_objective(to_sorted(mask), channels, sizes, options);
    mask[k] = !mask[k];
    return value;
  };

  // Greedy single-flip descent to a local optimum.
  const auto greedy_finish = [&]() {
    for (int pass = 0; pass < clients * clients; ++pass) {
      int arg = -1;
      double best_flip = current;
      for (int k = 0; k < clients; ++k) {
        const double j = flipped_objective(k);
        if (j < best_flip) {
          best_flip = j;
          arg = k;
        }
      }
      if (arg < 0) break;
      mask[arg] = !mask[arg];
      current = best_flip;
      if (current < best.objective) best = {to_sorted(mask), current};
    }
  };

  for (int restart = 0; restart < 3; ++restart) {
    rng::Stream stream(rng::mix(seed, 0x67696273ULL,
                                static_cast<std::uint64_t>(restart)));
    // Restarts explore from the full set, a random subset, and the best
    // subset seen so far.
    if (restart == 1) {
      for (int k = 0; k < clients; ++k) mask[k] = stream.uniform() < 0.5;
      if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))
        mask[static_cast<int>(stream.below(clients))] = true;
    } else if (restart == 2) {
      std::fill(mask.begin(), mask.end(), false);
      for (int k : best.selected) mask[k] = true;
    }
    current = selection_objective(to_sorted(mask), channels, sizes, options);
    if (current < best.objective) best = {to_sorted(mask), current};

    // Initial temperature: median |dJ| over 20 probe flips.
    std::vector<double> probes;
    for (int i = 0; i < 20; ++i) {
      const int k = static_cast<int>(stream.below(clients));
      const double j = flipped_objective(k);
      if (std::isfinite(j)) probes.push_back(std::abs(j - current));
    }
    double temperature = 1e-3;
    if (!probes.empty()) {
      std::nth_element(probes.begin(), probes.begin() + probes.size() / 2,
                       probes.end());
      temperature = std::max(probes[probes.size() / 2], 1e-12);
    }

    for (int sweep = 0; sweep < options.sweeps; ++sweep) {
      for (int step = 0; step < clients; ++step) {
        const int k = static_cast<int>(stream.below(clients));
        const double proposal = flipped_objective(k);
        if (!std::isfinite(proposal)) continue;  // would empty the set
        const double delta = proposal - current;
        bool accept = delta <= 0.0;
        if (!accept && temperature > 0.0) {
          const double ratio = delta / temperature;
          accept = ratio < 700.0 && stream.uniform() < std::exp(-ratio);
        }
        if (accept) {
          mask[k] = !mask[k];
          current = proposal;
          if (current < best.objective) best = {to_sorted(mask), current};
        }
      }
      temperature *= options.cooling;
    }
    greedy_finish();
  }
  return best;
}

}  // namespace gpfl
