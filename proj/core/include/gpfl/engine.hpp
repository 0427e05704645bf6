#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gpfl/channel.hpp"
#include "gpfl/gp_hessian.hpp"
#include "gpfl/loss.hpp"
#include "gpfl/receiver.hpp"
#include "gpfl/scheduler.hpp"

namespace gpfl {

enum class MethodKind { GpFl, FedAvgAir, BfgsAir, NewtonIdeal };

std::string method_name(MethodKind method);
std::optional<MethodKind> parse_method(const std::string& name);

enum class SchedulerKind { Gibbs, Uniform };

/// eta_t = min{1, lambda^2 / (L |g|)}; 1 at |g| = 0.
double learning_rate(const SmoothnessConstants& constants, double g_norm);

struct EngineConfig {
  int antennas = 5;
  double p0 = 1.0;
  int window = 20;                // observation width r; 0 = plain quasi-Newton
  double tau = 0.0;               // RBF length-scale; <= 0 selects the median heuristic
  double jitter = 1e-6;
  double dc_zeta = 10.0;
  double rho = 0.0;               // scheduler participation reward
  int gibbs_sweeps = 40;
  SchedulerKind scheduler = SchedulerKind::Gibbs;
  double participation = 1.0;     // uniform scheduler inclusion probability
  PosteriorSign posterior_sign = PosteriorSign::Paper;
  double fedavg_eta = 0.1;        // first-order rate for fedavg_air
  double c_damp = 1e-8;           // BFGS curvature-skip threshold
  bool warmup = true;             // gradient fallback while the window is too short
  double sigma_scale = 1.0;       // scales the drawn noise grid (0 = noiseless)
  bool probe_delta = true;        // measure |Bhat^-1 - H^-1| / |H^-1| per round
  bool record_walltime = false;   // keep metrics byte-reproducible by default
};

/// One metrics row. Row 0 describes the initial model; row t >= 1 holds the
/// state after round t's update together with that round's channel stats.
/// Quantities that do not exist for a method/row are NaN.
struct RoundRecord {
  int round = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double dist_to_opt = 0.0;
  double g_tilde_norm = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  double c_norm = 0.0;
  double delta_probe = 0.0;
  double wall_ms = 0.0;
  double sigma_total = 0.0;  // realized noise std of the round's selected set
  double d_total = 0.0;      // |D| of the selected set (aggregate normalizer)
  int selected = 0;
};

/// The federated problem instance shared by every method and seed.
struct Federation {
  std::shared_ptr<const Objective> objective;
  Eigen::VectorXd theta0;                                   // empty = zeros
  Eigen::VectorXd theta_star;                               // empty = no oracle
  std::function<double(const Eigen::VectorXd&)> accuracy;   // optional metric
};

struct RunResult {
  MethodKind method = MethodKind::GpFl;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> records;  // rounds + 1 rows
  Eigen::VectorXd theta_final;
};

/// Single-method round loop. Channel, noise, noise-grid and scheduling
/// randomness are keyed by (seed, round) only, so every method sees the
/// identical draws under a shared seed.
class ExperimentRun {
 public:
  ExperimentRun(const Federation& world, MethodKind method,
                const EngineConfig& config, std::uint64_t seed);

  /// Execute one communication round and return its record.
  RoundRecord step();

  /// Row 0 of the metrics: evaluation of the initial model.
  RoundRecord initial_record() const { return evaluate(0); }

  const Eigen::VectorXd& theta() const { return theta_; }
  int round() const { return round_; }

 private:
  RoundRecord evaluate(int round_index) const;

  const Federation& world_;
  MethodKind method_;
  EngineConfig config_;
  std::uint64_t seed_;
  Eigen::VectorXd sigma_;  // per-client noise std, drawn once per run

  Eigen::VectorXd theta_;
  Eigen::VectorXd prev_theta_;
  Eigen::VectorXd prev_g_tilde_;
  bool have_prev_ = false;
  int round_ = 0;
  BfgsTracker tracker_;
  ObservationWindow window_;
};

RunResult run_experiment(const Federation& world, MethodKind method,
                         const EngineConfig& config, int rounds,
                         std::uint64_t seed);

}  // namespace gpfl
