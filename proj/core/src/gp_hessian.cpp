#include "gpfl/gp_hessian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gpfl/rng.hpp"

namespace gpfl {

Eigen::MatrixXd bfgs_sample(const Eigen::MatrixXd& b_prev, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& y, double c_damp,
                            bool* applied) {
  if (applied) *applied = false;
  const double wy = w.dot(y);
  if (wy <= c_damp * w.norm() * y.norm()) return b_prev;  // damped skip
  const Eigen::VectorXd bw = b_prev * w;
  const double wbw = w.dot(bw);
  if (wbw <= 0.0) return b_prev;

  Eigen::MatrixXd next = b_prev;
  next.noalias() -= (bw * bw.transpose()) / wbw;
  next.noalias() += (y * y.transpose()) / wy;
  next = 0.5 * (next + next.transpose());
  if (applied) *applied = true;
  return next;
}

Eigen::MatrixXd inverse_update(const Eigen::MatrixXd& binv_prev,
                               const Eigen::MatrixXd& b_prev,
                               const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
  const double wy = w.dot(y);
  // First Sherman-Morrison step: inverse of B + y y'/w'y.
  const Eigen::VectorXd ny = binv_prev * y;
  Eigen::MatrixXd m = binv_prev;
  m.noalias() -= (ny * ny.transpose()) / (wy + y.dot(ny));

  // Second step: inverse of (.) - u u'/w'u with u = B w (original B).
  const Eigen::VectorXd u = b_prev * w;
  const double wu = w.dot(u);
  const Eigen::VectorXd mu = m * u;
  m.noalias() += (mu * mu.transpose()) / (wu - u.dot(mu));
  return 0.5 * (m + m.transpose());
}

BfgsTracker::BfgsTracker(int dim, double init_scale) {
  if (init_scale <= 0) throw std::invalid_argument("BfgsTracker: scale must be > 0");
  b_ = init_scale * Eigen::MatrixXd::Identity(dim, dim);
  binv_ = (1.0 / init_scale) * Eigen::MatrixXd::Identity(dim, dim);
}

bool BfgsTracker::update(const Eigen::VectorXd& w, const Eigen::VectorXd& y,
                         double c_damp) {
  bool applied = false;
  Eigen::MatrixXd next = bfgs_sample(b_, w, y, c_damp, &applied);
  if (!applied) return false;
  binv_ = inverse_update(binv_, b_, w, y);
  b_ = std::move(next);
  return true;
}

Eigen::MatrixXd rbf_kernel(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                           double tau) {
  if (tau <= 0) throw std::invalid_argument("rbf_kernel: tau must be > 0");
  const double inv = 1.0 / (2.0 * tau * tau);
  Eigen::MatrixXd k(u.size(), v.size());
  for (int i = 0; i < u.size(); ++i)
    for (int j = 0; j < v.size(); ++j) {
      const double diff = u[i] - v[j];
      k(i, j) = std::exp(-diff * diff * inv);
    }
  return k;
}

double median_heuristic_tau(const Eigen::VectorXd& o) {
  const int n = static_cast<int>(o.size());
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) dists.push_back(std::abs(o[i] - o[j]));
  if (dists.empty()) return 1.0;
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  return std::max(dists[dists.size() / 2], 1e-9);
}

void ObservationWindow::push(Eigen::VectorXd y_tilde, Eigen::VectorXd w,
                             Eigen::MatrixXd b_sample) {
  if (capacity_ <= 0) return;
  y_tilde_.push_back(std::move(y_tilde));
  w_.push_back(std::move(w));
  b_samples_.push_back(std::move(b_sample));
  while (static_cast<int>(y_tilde_.size()) > capacity_) {
    y_tilde_.pop_front();
    w_.pop_front();
    b_samples_.pop_front();
  }
}

Eigen::VectorXd ObservationWindow::concat() const {
  const int d = dim();
  Eigen::VectorXd o(size() * d);
  for (int i = 0; i < size(); ++i) o.segment(i * d, d) = y_tilde_[i];
  return o;
}

Eigen::VectorXd ObservationWindow::moving_average() const {
  const int d = dim();
  Eigen::VectorXd mu(size() * d);
  Eigen::VectorXd running = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < size(); ++i) {
    running += y_tilde_[i];
    mu.segment(i * d, d) = running / (i + 1);
  }
  return mu;
}

Eigen::VectorXd ObservationWindow::entry_history(int i, int j) const {
  Eigen::VectorXd h(size());
  for (int s = 0; s < size(); ++s) h[s] = b_samples_[s](i, j);
  return h;
}

KernelCache build_cache(const ObservationWindow& window, double tau, double jitter) {
  if (window.empty()) throw std::invalid_argument("build_cache: empty window");
  KernelCache cache;
  cache.o = window.concat();
  cache.mu_o = window.moving_average();
  cache.tau = tau > 0 ? tau : median_heuristic_tau(cache.o);

  double eps = jitter > 0 ? jitter : 1e-6;
  const Eigen::MatrixXd base = rbf_kernel(cache.o, cache.o, cache.tau);
  for (;;) {
    cache.K = base;
    cache.K.diagonal().array() += eps;
    cache.factor.compute(cache.K);
    if (cache.factor.info() == Eigen::Success) {
      cache.jitter = eps;
      return cache;
    }
    eps *= 2.0;
    if (eps > 1e-2)
      throw std::runtime_error("build_cache: kernel not positive definite");
  }
}

GaussianPosterior entry_posterior(const KernelCache& cache,
                                  const Eigen::VectorXd& b_history,
                                  const Eigen::VectorXd& o_t, PosteriorSign sign,
                                  CgInfo* info) {
  const int n = static_cast<int>(cache.o.size());
  if (b_history.size() == 0)
    throw std::invalid_argument("entry_posterior: empty history");
  if (o_t.size() != n)
    throw std::invalid_argument("entry_posterior: observation size mismatch");

  const double b_now = b_history[b_history.size() - 1];
  const double mean_b = b_history.mean();

  // phi = k(o^0, b^0_t); beta = k(b,b) = 1 under the RBF.
  Eigen::VectorXd phi(n);
  const double inv = 1.0 / (2.0 * cache.tau * cache.tau);
  for (int i = 0; i < n; ++i) {
    const double diff = cache.o[i] - b_now;
    phi[i] = std::exp(-diff * diff * inv);
  }

  // Preconditioned CG on K a = phi with the Cholesky factor as the
  // preconditioner; falls back to the direct solve after 10n iterations.
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd r = phi;
  const double target = 1e-8;
  CgInfo local;
  if (r.norm() > target) {
    Eigen::VectorXd z = cache.factor.solve(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    const int max_iter = 10 * n;
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
      const Eigen::VectorXd kp = cache.K * p;
      const double pkp = p.dot(kp);
      if (pkp <= 0) break;
      const double step = rz / pkp;
      a += step * p;
      r -= step * kp;
      local.iterations = it + 1;
      if (r.norm() <= target) {
        converged = true;
        break;
      }
      z = cache.factor.solve(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    if (!converged) {
      a = cache.factor.solve(phi);
      local.fallback = true;
    }
    // One step of iterative refinement; keeps the solve accurate even
    // when the jittered kernel is close to singular.
    a += cache.factor.solve(phi - cache.K * a);
  }
  local.residual = (cache.K * a - phi).norm();
  if (info) *info = local;

  const double correction = a.dot(o_t - cache.mu_o);
  GaussianPosterior post;
  post.zeta = sign == PosteriorSign::Paper ? mean_b - correction : mean_b + correction;
  post.psi = 1.0 - a.dot(phi);
  if (post.psi < 0) {
    if (post.psi < -1e-8)
      throw std::runtime_error("entry_posterior: negative posterior variance");
    post.psi = 0.0;
  }
  return post;
}

HessianEstimate sample_hessian(const Eigen::MatrixXd& zeta,
                               const Eigen::MatrixXd& psi,
                               const SmoothnessConstants& constants,
                               std::uint64_t seed, int round) {
  const int d = static_cast<int>(zeta.rows());
  if (zeta.cols() != d || psi.rows() != d || psi.cols() != d)
    throw std::invalid_argument("sample_hessian: shape mismatch");

  Eigen::MatrixXd b(d, d);
  const std::uint64_t round_key = rng::mix(seed, 0x68657373ULL,
                                           static_cast<std::uint64_t>(round));
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      rng::Stream stream(rng::mix(round_key, static_cast<std::uint64_t>(i),
                                  static_cast<std::uint64_t>(j)));
      const double sd = std::sqrt(std::max(psi(i, j), 0.0));
      const double value = zeta(i, j) + sd * stream.normal();
      b(i, j) = value;
      b(j, i) = value;
    }
  }
  b = 0.5 * (b + b.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  Eigen::VectorXd vals = eig.eigenvalues()
                             .cwiseMax(constants.lambda)
                             .cwiseMin(constants.L);
  HessianEstimate est;
  est.b_hat = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
  est.b_hat = 0.5 * (est.b_hat + est.b_hat.transpose());
  est.eig_lo = constants.lambda;
  est.eig_hi = constants.L;
  return est;
}

Eigen::VectorXd newton_direction(const HessianEstimate& estimate,
                                 const Eigen::VectorXd& g_tilde) {
  const int d = static_cast<int>(g_tilde.size());
  const double g_norm = g_tilde.norm();
  if (g_norm == 0.0) return Eigen::VectorXd::Zero(d);

  // Plain CG; the clipped spectrum keeps the condition number at L/lambda.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd r = g_tilde;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  const double target = 1e-8 * g_norm;
  for (int it = 0; it < 20 * d + 50; ++it) {
    if (std::sqrt(rr) <= target) break;
    const Eigen::VectorXd bp = estimate.b_hat * p;
    const double pbp = p.dot(bp);
    if (pbp <= 0) break;
    const double step = rr / pbp;
    x += step * p;
    r -= step * bp;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  if (std::sqrt(rr) > target) {
    // Spectrum clipping guarantees SPD; LLT as a deterministic backstop.
    x = estimate.b_hat.llt().solve(g_tilde);
  }
  return -x;
}

}  // namespace gpfl
