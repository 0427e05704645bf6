#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <vector>

#include "gpfl/loss.hpp"

namespace gpfl {

/// Damped BFGS update. Applies
///   B' = B - (B w w'B)/(w'B w) + (y y')/(w'y)
/// and skips (returns B unchanged) when the curvature condition
/// w'y > c_damp |w||y| fails or w'B w is numerically non-positive.
/// `applied` reports whether the update happened.
Eigen::MatrixXd bfgs_sample(const Eigen::MatrixXd& b_prev, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& y, double c_damp = 1e-8,
                            bool* applied = nullptr);

/// Maintains the exact inverse of bfgs_sample's output via two sequential
/// Sherman-Morrison rank-one updates (the +yy'/w'y correction first, then
/// the -Bww'B/w'Bw one). Must be called exactly when bfgs_sample applied
/// its update; b_prev is the matrix BEFORE that update.
Eigen::MatrixXd inverse_update(const Eigen::MatrixXd& binv_prev,
                               const Eigen::MatrixXd& b_prev,
                               const Eigen::VectorXd& w, const Eigen::VectorXd& y);

/// Deterministic noisy-BFGS state: the quasi-Newton matrix and its inverse
/// kept in lockstep.
class BfgsTracker {
 public:
  BfgsTracker(int dim, double init_scale);

  /// Returns true when the update was applied (curvature condition held).
  bool update(const Eigen::VectorXd& w, const Eigen::VectorXd& y,
              double c_damp = 1e-8);

  const Eigen::MatrixXd& matrix() const { return b_; }
  const Eigen::MatrixXd& inverse() const { return binv_; }

 private:
  Eigen::MatrixXd b_;
  Eigen::MatrixXd binv_;
};

/// [k(u,v)]_{ij} = exp(-|u_i - v_j|^2 / (2 tau^2)), entries in (0, 1].
Eigen::MatrixXd rbf_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                           double tau);

/// Median pairwise |o_i - o_j| over the concatenated observation; the
/// conventional length-scale heuristic when tau is not configured.
double median_heuristic_tau(const Eigen::VectorXd& o);

/// Sliding window of the last r noisy gradient differences, the matching
/// model steps and deterministic BFGS samples.
class ObservationWindow {
 public:
  explicit ObservationWindow(int capacity) : capacity_(capacity) {}

  void push(Eigen::VectorXd y_tilde, Eigen::VectorXd w, Eigen::MatrixXd b_sample);

  int size() const { return static_cast<int>(y_tilde_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return y_tilde_.empty(); }
  int dim() const { return empty() ? 0 : static_cast<int>(y_tilde_.front().size()); }

  const Eigen::VectorXd& y_tilde(int i) const { return y_tilde_[i]; }
  const Eigen::VectorXd& w(int i) const { return w_[i]; }
  const Eigen::MatrixXd& b_sample(int i) const { return b_samples_[i]; }
  const Eigen::MatrixXd& latest_b() const { return b_samples_.back(); }

  /// Concatenation o of the window's differences, oldest first.
  Eigen::VectorXd concat() const;

  /// Blockwise moving-average mean: block i is the average of the window
  /// differences 0..i.
  Eigen::VectorXd moving_average() const;

  /// Entry (i,j) of every stored BFGS sample, oldest first.
  Eigen::VectorXd entry_history(int i, int j) const;

 private:
  int capacity_;
  std::deque<Eigen::VectorXd> y_tilde_;
  std::deque<Eigen::VectorXd> w_;
  std::deque<Eigen::MatrixXd> b_samples_;
};

/// Shared per-round kernel state: K = k(o,o) + jitter I factorized once and
/// reused (as the CG preconditioner) across all entry posteriors.
struct KernelCache {
  double tau = 0.0;
  double jitter = 0.0;
  Eigen::VectorXd o;      // sample observation o^0
  Eigen::VectorXd mu_o;   // moving-average mean of o^0
  Eigen::MatrixXd K;      // with jitter on the diagonal
  Eigen::LLT<Eigen::MatrixXd> factor;
};

/// Build the cache for the current window. tau <= 0 selects the median
/// heuristic. If the factorization fails the jitter is doubled up to 1e-2
/// before giving up.
KernelCache build_cache(const ObservationWindow& window, double tau, double jitter);

struct GaussianPosterior {
  double zeta = 0.0;  // posterior mean
  double psi = 0.0;   // posterior variance, clipped to >= 0
};

/// Sign convention of the posterior-mean correction term. Paper keeps
/// zeta = E - a'(o - mu); Standard is the usual Gaussian conditioning +.
enum class PosteriorSign { Paper, Standard };

struct CgInfo {
  int iterations = 0;
  double residual = 0.0;
  bool fallback = false;  // direct factorized solve was used
};

/// Posterior of one quasi-Newton entry given the window observation:
/// solves K a = phi by preconditioned CG (residual <= 1e-8, at most
/// 10 rd iterations, then a direct factorized solve), with
///   zeta = mean(b_history) -/+ a'(o_t - mu),  psi = 1 - a'phi.
GaussianPosterior entry_posterior(const KernelCache& cache,
                                  const Eigen::VectorXd& b_history,
                                  const Eigen::VectorXd& o_t,
                                  PosteriorSign sign = PosteriorSign::Paper,
                                  CgInfo* info = nullptr);

struct HessianEstimate {
  Eigen::MatrixXd b_hat;
  double eig_lo = 0.0;
  double eig_hi = 0.0;
};

/// Draw every upper-triangle entry from N(zeta_ij, psi_ij), mirror,
/// then clip the spectrum into [constants.lambda, constants.L]. Draws are
/// keyed by (seed, round, i, j), so assembly order is irrelevant.
HessianEstimate sample_hessian(const Eigen::MatrixXd& zeta,
                               const Eigen::MatrixXd& psi,
                               const SmoothnessConstants& constants,
                               std::uint64_t seed, int round);

/// d = -B^[-1] g via conjugate gradient on the clipped SPD estimate;
/// residual <= 1e-8 |g|.
Eigen::VectorXd newton_direction(const HessianEstimate& estimate,
                                 const Eigen::VectorXd& g_tilde);

}  // namespace gpfl
