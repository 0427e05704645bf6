#include "gpfl/engine.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gpfl/rng.hpp"

namespace gpfl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags for the per-round keyed randomness.
constexpr std::uint64_t kTagSigma = 0x7367726964ULL;
constexpr std::uint64_t kTagChannel = 0x6368616eULL;
constexpr std::uint64_t kTagNoise = 0x6e6f697aULL;
constexpr std::uint64_t kTagSchedule = 0x7363686dULL;
constexpr std::uint64_t kTagSampler = 0x67706d63ULL;

double spectral_norm_sym(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

std::string method_name(MethodKind method) {
  switch (method) {
    case MethodKind::GpFl: return "gpfl";
    case MethodKind::FedAvgAir: return "fedavg_air";
    case MethodKind::BfgsAir: return "bfgs_air";
    case MethodKind::NewtonIdeal: return "newton_ideal";
  }
  return "unknown";
}

std::optional<MethodKind> parse_method(const std::string& name) {
  if (name == "gpfl") return MethodKind::GpFl;
  if (name == "fedavg_air") return MethodKind::FedAvgAir;
  if (name == "bfgs_air") return MethodKind::BfgsAir;
  if (name == "newton_ideal") return MethodKind::NewtonIdeal;
  return std::nullopt;
}

double learning_rate(const SmoothnessConstants& constants, double g_norm) {
  if (g_norm <= 0.0) return 1.0;
  return std::min(1.0, constants.lambda * constants.lambda /
                           (constants.L * g_norm));
}

ExperimentRun::ExperimentRun(const Federation& world, MethodKind method,
                             const EngineConfig& config, std::uint64_t seed)
    : world_(world),
      method_(method),
      config_(config),
      seed_(seed),
      tracker_(world.objective->dim(),
               0.5 * (world.objective->constants().lambda +
                      world.objective->constants().L)),
      window_(config.window) {
  const int clients = world.objective->client_count();
  sigma_ = config_.sigma_scale *
           sample_noise_grid(clients, rng::mix(seed_, kTagSigma));
  theta_ = world_.theta0.size() > 0
               ? world_.theta0
               : Eigen::VectorXd::Zero(world_.objective->dim());
  prev_theta_ = theta_;
}

RoundRecord ExperimentRun::evaluate(int round_index) const {
  RoundRecord rec;
  rec.round = round_index;
  rec.loss = world_.objective->loss(theta_);
  rec.accuracy = world_.accuracy ? world_.accuracy(theta_) : kNaN;
  rec.dist_to_opt = world_.theta_star.size() > 0
                        ? (theta_ - world_.theta_star).norm()
                        : kNaN;
  rec.g_tilde_norm = kNaN;
  rec.eta = kNaN;
  rec.alpha = kNaN;
  rec.c_norm = kNaN;
  rec.delta_probe = kNaN;
  rec.wall_ms = 0.0;
  rec.sigma_total = kNaN;
  rec.d_total = kNaN;
  rec.selected = 0;
  return rec;
}

RoundRecord ExperimentRun::step() {
  const auto t_start = std::chrono::steady_clock::now();
  const Objective& objective = *world_.objective;
  const SmoothnessConstants& constants = objective.constants();
  const int t = round_;
  const int clients = objective.client_count();
  const int dim = objective.dim();

  // Shared per-round randomness, identical for every method.
  const ChannelRealization realization =
      draw_channels(clients, config_.antennas, sigma_,
                    rng::mix(seed_, kTagChannel, static_cast<std::uint64_t>(t)));

  std::vector<double> all_sizes(clients);
  for (int k = 0; k < clients; ++k) all_sizes[k] = objective.size(k);

  // Device selection precedes gradient computation, so it sees raw channels.
  std::vector<int> selected;
  if (config_.scheduler == SchedulerKind::Gibbs) {
    ScheduleOptions opts;
    opts.sweeps = config_.gibbs_sweeps;
    opts.rho = config_.rho;
    opts.p0 = config_.p0;
    opts.dim = dim;
    selected = select_devices(realization, all_sizes, opts,
                              rng::mix(seed_, kTagSchedule,
                                       static_cast<std::uint64_t>(t)))
                   .selected;
  } else {
    rng::Stream stream(rng::mix(seed_, kTagSchedule, static_cast<std::uint64_t>(t)));
    for (int k = 0; k < clients; ++k)
      if (stream.uniform() < config_.participation) selected.push_back(k);
    if (selected.empty())
      selected.push_back(static_cast<int>(stream.below(clients)));
  }

  // Local full-batch gradients; silently drop converged clients, whose
  // normalization is undefined and whose contribution is zero anyway.
  std::vector<int> active;
  std::vector<Eigen::VectorXd> gradients;
  for (int k : selected) {
    Eigen::VectorXd g = objective.client(k).gradient(theta_);
    if (g.norm() == 0.0) continue;
    active.push_back(k);
    gradients.push_back(std::move(g));
  }

  double eta = kNaN;
  double alpha = kNaN;
  double c_norm = kNaN;
  double sigma_total = kNaN;
  double d_total = kNaN;
  double g_tilde_norm = 0.0;
  double delta_probe = kNaN;
  Eigen::VectorXd g_tilde = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(dim);
  const Eigen::MatrixXd* probe_matrix = nullptr;  // inverse-error probe target
  Eigen::MatrixXd gp_estimate;

  if (method_ == MethodKind::NewtonIdeal) {
    // Noiseless reference: exact Newton on the selected set's objective.
    double total = 0.0;
    for (int k : active) total += objective.size(k);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double w = objective.size(active[i]) / total;
      g += w * gradients[i];
      h += w * objective.client(active[i]).hessian(theta_);
    }
    if (!active.empty()) {
      direction = -h.ldlt().solve(g);
      eta = learning_rate(constants, g.norm());
      g_tilde_norm = g.norm();
      delta_probe = 0.0;
    }
  } else if (!active.empty()) {
    double total = 0.0;
    std::vector<double> sizes;
    Eigen::MatrixXcd h_sel(config_.antennas, active.size());
    Eigen::VectorXd sigma_sel(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      sizes.push_back(objective.size(active[i]));
      total += sizes.back();
      h_sel.col(static_cast<int>(i)) = realization.h.col(active[i]);
      sigma_sel[static_cast<int>(i)] = sigma_[active[i]];
    }
    ChannelRealization sel{h_sel, sigma_sel, config_.antennas};

    const Eigen::MatrixXcd h_eff = effective_channels(h_sel, gradients);
    DcOptions dc;
    dc.zeta = config_.dc_zeta;
    // Simulation-loop budget. A mildly under-converged receiver only
    // scales the round's noise variance, and every method sees the same
    // receiver, so comparisons are unaffected.
    dc.max_outer = 40;
    dc.max_inner = 250;
    dc.tol = 1e-5;
    const ReceiverDesign design = design_receiver(h_eff, sizes, dc);
    ReceiverWeights weights{design.c,
                            zf_alpha(design.c, h_eff, sizes, config_.p0, dim)};

    const NoisyAggregate aggregate = transmit_round(
        gradients, sel, weights, sizes, total,
        rng::mix(seed_, kTagNoise, static_cast<std::uint64_t>(t)));
    g_tilde = aggregate.g_tilde;
    g_tilde_norm = g_tilde.norm();
    alpha = weights.alpha;
    c_norm = design.c.norm();
    sigma_total = std::sqrt(sel.total_noise_var());
    d_total = total;

    // Quasi-Newton bookkeeping from consecutive noisy aggregates.
    if (have_prev_) {
      const Eigen::VectorXd w = theta_ - prev_theta_;
      const Eigen::VectorXd y = g_tilde - prev_g_tilde_;
      tracker_.update(w, y, config_.c_damp);
      if (method_ == MethodKind::GpFl && config_.window > 0)
        window_.push(y, w, tracker_.matrix());
    }

    switch (method_) {
      case MethodKind::FedAvgAir:
        direction = -g_tilde;
        eta = config_.fedavg_eta;
        break;
      case MethodKind::BfgsAir:
        direction = -(tracker_.inverse() * g_tilde);
        eta = learning_rate(constants, g_tilde_norm);
        probe_matrix = &tracker_.matrix();
        break;
      case MethodKind::GpFl: {
        eta = learning_rate(constants, g_tilde_norm);
        const bool warm = config_.warmup && t < 2;
        if (config_.window == 0) {
          direction = -(tracker_.inverse() * g_tilde);
          probe_matrix = &tracker_.matrix();
        } else if (warm || window_.empty()) {
          direction = -g_tilde;  // no usable window yet
        } else {
          const KernelCache cache =
              build_cache(window_, config_.tau, config_.jitter);
          Eigen::MatrixXd zeta(dim, dim);
          Eigen::MatrixXd psi(dim, dim);
          for (int i = 0; i < dim; ++i) {
            for (int j = i; j < dim; ++j) {
              const GaussianPosterior post =
                  entry_posterior(cache, window_.entry_history(i, j), cache.o,
                                  config_.posterior_sign);
              zeta(i, j) = post.zeta;
              zeta(j, i) = post.zeta;
              psi(i, j) = post.psi;
              psi(j, i) = post.psi;
            }
          }
          const HessianEstimate estimate = sample_hessian(
              zeta, psi, constants, rng::mix(seed_, kTagSampler), t);
          direction = newton_direction(estimate, g_tilde);
          gp_estimate = estimate.b_hat;
          probe_matrix = &gp_estimate;
        }
        break;
      }
      case MethodKind::NewtonIdeal:
        break;  // handled above
    }
  }

  if (config_.probe_delta && probe_matrix != nullptr) {
    const Eigen::MatrixXd h = objective.hessian(theta_);
    const Eigen::MatrixXd h_inv = h.ldlt().solve(
        Eigen::MatrixXd::Identity(dim, dim));
    const Eigen::MatrixXd b_inv = probe_matrix->ldlt().solve(
        Eigen::MatrixXd::Identity(dim, dim));
    const double h_inv_norm = spectral_norm_sym(h_inv);
    if (h_inv_norm > 0)
      delta_probe = spectral_norm_sym(b_inv - h_inv) / h_inv_norm;
  }

  if (!active.empty() && method_ != MethodKind::NewtonIdeal) {
    prev_theta_ = theta_;  // pre-update model paired with this aggregate
    prev_g_tilde_ = g_tilde;
    have_prev_ = true;
  }
  if (std::isfinite(eta)) theta_ += eta * direction;
  ++round_;

  RoundRecord rec = evaluate(round_);
  rec.g_tilde_norm = g_tilde_norm;
  rec.eta = eta;
  rec.alpha = alpha;
  rec.c_norm = c_norm;
  rec.delta_probe = delta_probe;
  rec.sigma_total = sigma_total;
  rec.d_total = d_total;
  rec.selected = static_cast<int>(active.size());
  if (config_.record_walltime) {
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
  }
  return rec;
}

RunResult run_experiment(const Federation& world, MethodKind method,
                         const EngineConfig& config, int rounds,
                         std::uint64_t seed) {
  if (!world.objective) throw std::invalid_argument("run_experiment: no objective");
  if (rounds < 0) throw std::invalid_argument("run_experiment: negative rounds");

  ExperimentRun run(world, method, config, seed);
  RunResult result;
  result.method = method;
  result.seed = seed;
  result.records.reserve(rounds + 1);
  result.records.push_back(run.initial_record());
  for (int t = 0; t < rounds; ++t) result.records.push_back(run.step());
  result.theta_final = run.theta();
  return result;
}

}  // namespace gpfl
