// Independent test oracles. Everything here recomputes expected values
// through a different route than the library code under test: scalar
// loops, finite differences, dense joint-Gaussian conditioning, explicit
// subset enumeration.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

// Naive scalar-loop logistic loss over (features, labels) rows.
inline double logistic_loss_naive(const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& theta, double reg) {
  double total = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    double margin = 0.0;
    for (int j = 0; j < x.cols(); ++j) margin += x(i, j) * theta[j];
    total += std::log(1.0 + std::exp(-y[i] * margin));
  }
  double reg_term = 0.0;
  for (int j = 0; j < theta.size(); ++j) reg_term += theta[j] * theta[j];
  return total / x.rows() + 0.5 * reg * reg_term;
}

// Central finite differences of a scalar function.
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& theta, double h = 1e-6) {
  Eigen::VectorXd g(theta.size());
  for (int j = 0; j < theta.size(); ++j) {
    Eigen::VectorXd hi = theta, lo = theta;
    hi[j] += h;
    lo[j] -= h;
    g[j] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

// Central finite differences of a vector function (per-column Jacobian).
inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& theta, double h = 1e-5) {
  const int n = static_cast<int>(theta.size());
  Eigen::MatrixXd jac(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd hi = theta, lo = theta;
    hi[j] += h;
    lo[j] -= h;
    jac.col(j) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return jac;
}

// Dense joint-Gaussian conditioning for the scalar entry against the full
// observation block, via explicit inversion (no shared code with the CG
// path). paper_sign flips the correction term the way the posterior under
// test defines it.
struct DensePosterior {
  double zeta;
  double psi;
};

inline DensePosterior dense_conditioning(const Eigen::MatrixXd& k_oo,
                                         const Eigen::VectorXd& phi, double beta,
                                         double prior_mean,
                                         const Eigen::VectorXd& deviation,
                                         bool paper_sign) {
  const Eigen::MatrixXd k_inv =
      k_oo.inverse();  // small rd only; explicit on purpose
  Eigen::VectorXd a = k_inv * phi;
  a += k_inv * (phi - k_oo * a);  // refinement against the raw inverse
  const double correction = a.dot(deviation);
  DensePosterior post;
  post.zeta = paper_sign ? prior_mean - correction : prior_mean + correction;
  post.psi = beta - phi.dot(a);
  return post;
}

// All non-empty subsets of {0..n-1}, smallest objective wins.
inline std::vector<int> brute_force_subset(
    int n, const std::function<double(const std::vector<int>&)>& objective,
    double* best_value = nullptr) {
  std::vector<int> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> subset;
    for (int k = 0; k < n; ++k)
      if (mask & (1u << k)) subset.push_back(k);
    const double obj = objective(subset);
    if (obj < best_obj) {
      best_obj = obj;
      best = subset;
    }
  }
  if (best_value) *best_value = best_obj;
  return best;
}

// Symmetric-eigendecomposition spectral norm.
inline double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      Eigen::MatrixXd(0.5 * (m + m.transpose())));
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace oracles
