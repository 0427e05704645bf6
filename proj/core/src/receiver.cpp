#include "gpfl/receiver.hpp"

#include <cmath>
#include <stdexcept>

namespace gpfl {

namespace {

// Constraint directions scaled so every constraint reads Tr(C g g^H) >= 1
// and max_k |g_k|^2 == 1. Keeps the penalty solver well conditioned
// regardless of gradient norms and shard sizes.
struct NormalizedProblem {
  std::vector<Eigen::VectorXcd> g;
  double scale = 1.0;  // D = scale * C
};

NormalizedProblem normalize(const Eigen::MatrixXcd& h_eff,
                            const std::vector<double>& sizes) {
  if (h_eff.cols() == 0) throw std::invalid_argument("receiver: no clients");
  if (static_cast<int>(sizes.size()) != h_eff.cols())
    throw std::invalid_argument("receiver: client count mismatch");
  NormalizedProblem p;
  p.g.reserve(h_eff.cols());
  double max_sq = 0.0;
  for (int k = 0; k < h_eff.cols(); ++k) {
    if (h_eff.col(k).norm() == 0.0)
      throw std::invalid_argument("receiver: zero effective channel");
    Eigen::VectorXcd v = h_eff.col(k) / sizes[k];
    max_sq = std::max(max_sq, v.squaredNorm());
    p.g.push_back(std::move(v));
  }
  const double root = std::sqrt(max_sq);
  for (auto& v : p.g) v /= root;
  p.scale = max_sq;

  // Parallel channels induce redundant constraints; keep the tightest
  // (smallest |g|^2 needs the largest C along the shared direction).
  std::vector<Eigen::VectorXcd> kept;
  for (const auto& v : p.g) {
    bool merged = false;
    for (auto& u : kept) {
      const double cosine = std::abs(u.dot(v)) / (u.norm() * v.norm());
      if (cosine >= 1.0 - 1e-12) {
        if (v.squaredNorm() < u.squaredNorm()) u = v;
        merged = true;
        break;
      }
    }
    if (!merged) kept.push_back(v);
  }
  p.g = std::move(kept);
  return p;
}

Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
      Eigen::MatrixXcd(0.5 * (m + m.adjoint())));
  Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint();
}

double spectral_norm(const Eigen::MatrixXcd& m, Eigen::VectorXcd* top = nullptr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
      Eigen::MatrixXcd(0.5 * (m + m.adjoint())));
  const int last = static_cast<int>(m.rows()) - 1;
  if (top) *top = eig.eigenvectors().col(last);
  return eig.eigenvalues()[last];
}

double violation_sq(const Eigen::MatrixXcd& c,
                    const std::vector<Eigen::VectorXcd>& g) {
  double total = 0.0;
  for (const auto& v : g) {
    const double slack = 1.0 - std::real(v.dot(c * v));
    if (slack > 0) total += slack * slack;
  }
  return total;
}

// Accelerated projected gradient (FISTA with function restarts) on
// F(C) = (1+zeta) Tr(C) - zeta Re<V, C> + penalty * viol^2.
// Returns the best PSD iterate seen, never worse than the start.
Eigen::MatrixXcd descend(const Eigen::MatrixXcd& start,
                         const Eigen::MatrixXcd& subgrad,
                         const std::vector<Eigen::VectorXcd>& g, double zeta,
                         double penalty, int max_iter) {
  const int n = static_cast<int>(start.rows());
  const auto value = [&](const Eigen::MatrixXcd& c) {
    return (1.0 + zeta) * c.trace().real() -
           zeta * (subgrad.adjoint() * c).trace().real() +
           penalty * violation_sq(c, g);
  };
  const auto gradient = [&](const Eigen::MatrixXcd& c) {
    Eigen::MatrixXcd grad =
        (1.0 + zeta) * Eigen::MatrixXcd::Identity(n, n) - zeta * subgrad;
    for (const auto& v : g) {
      const double slack = 1.0 - std::real(v.dot(c * v));
      if (slack > 0) grad -= (2.0 * penalty * slack) * (v * v.adjoint());
    }
    return grad;
  };

  // Gradient Lipschitz constant of the penalty part (the linear part has
  // none); |g_k| <= 1 after normalization.
  double lip = 1.0;
  for (const auto& v : g) {
    const double sq = v.squaredNorm();
    lip += 2.0 * penalty * sq * sq;
  }
  const double step = 1.0 / lip;

  Eigen::MatrixXcd x = start;
  Eigen::MatrixXcd x_prev = start;
  Eigen::MatrixXcd best = start;
  double f_x = value(x);
  double f_best = f_x;
  double momentum = 1.0;
  int flat = 0;
  for (int it = 0; it < max_iter; ++it) {
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const Eigen::MatrixXcd y =
        x + ((momentum - 1.0) / momentum_next) * (x - x_prev);
    Eigen::MatrixXcd x_next = project_psd(y - step * gradient(y));
    const double f_next = value(x_next);
    if (f_next > f_x) {
      // Momentum overshoot: restart from the plain gradient step.
      x_prev = x;
      x = project_psd(x - step * gradient(x));
      f_x = value(x);
      momentum = 1.0;
    } else {
      x_prev = x;
      x = std::move(x_next);
      f_x = f_next;
      momentum = momentum_next;
    }
    if (f_x < f_best - 1e-13 * std::max(1.0, std::abs(f_best))) {
      flat = 0;
      f_best = f_x;
      best = x;
    } else if (++flat >= 12) {
      break;  // no measurable progress for a long stretch
    }
  }
  return best;
}

Eigen::MatrixXcd run_subproblem(const Eigen::MatrixXcd& c_now, double zeta,
                                const std::vector<Eigen::VectorXcd>& g,
                                const DcOptions& opt) {
  Eigen::VectorXcd top;
  spectral_norm(c_now, &top);
  const Eigen::MatrixXcd subgrad = top * top.adjoint();
  return descend(c_now, subgrad, g, zeta, opt.penalty_scale * (1.0 + zeta),
                 opt.max_inner);
}

double penalized_objective(const Eigen::MatrixXcd& c, double zeta,
                           const std::vector<Eigen::VectorXcd>& g,
                           const DcOptions& opt) {
  return (1.0 + zeta) * c.trace().real() - zeta * spectral_norm(c) +
         opt.penalty_scale * (1.0 + zeta) * violation_sq(c, g);
}

}  // namespace

double minmax_objective(const Eigen::VectorXcd& c, const Eigen::MatrixXcd& h_eff,
                        const std::vector<double>& sizes) {
  double worst = 0.0;
  for (int k = 0; k < h_eff.cols(); ++k) {
    const double proj = std::norm(c.dot(h_eff.col(k)));
    if (proj == 0.0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, sizes[k] * sizes[k] * c.squaredNorm() / proj);
  }
  return worst;
}

Eigen::VectorXcd mrc_receiver(const Eigen::MatrixXcd& h_eff,
                              const std::vector<double>& sizes) {
  if (h_eff.cols() == 0) throw std::invalid_argument("mrc_receiver: no clients");
  (void)sizes;
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(h_eff.rows());
  for (int k = 0; k < h_eff.cols(); ++k) c += h_eff.col(k) / h_eff.col(k).norm();
  if (c.norm() < 1e-12 * h_eff.cols()) c = h_eff.col(0);  // cancellation fallback
  return c / c.norm();
}

Eigen::MatrixXcd dc_subproblem(const DcState& state, const Eigen::MatrixXcd& h_eff,
                               const std::vector<double>& sizes,
                               const DcOptions& options) {
  const NormalizedProblem p = normalize(h_eff, sizes);
  const Eigen::MatrixXcd d_now = p.scale * state.C;
  DcOptions opt = options;
  opt.zeta = state.zeta;
  return run_subproblem(d_now, state.zeta, p.g, opt) / p.scale;
}

ReceiverDesign design_receiver(const Eigen::MatrixXcd& h_eff,
                               const std::vector<double>& sizes,
                               const DcOptions& options) {
  const NormalizedProblem p = normalize(h_eff, sizes);
  const int n = static_cast<int>(h_eff.rows());

  // Feasible identity start: scale I so the weakest constraint holds.
  double min_gain = std::numeric_limits<double>::infinity();
  for (const auto& v : p.g) min_gain = std::min(min_gain, v.squaredNorm());
  Eigen::MatrixXcd d = (1.0 / min_gain) * Eigen::MatrixXcd::Identity(n, n);

  // Soft-optimal magnitude along a candidate direction: for rank-one C the
  // zeta terms cancel and the penalized objective reduces to
  // t + penalty * sum_k max(0, 1 - t p_k)^2, a convex scalar problem.
  const auto soft_rank_one = [&](const Eigen::VectorXcd& u,
                                 double penalty) -> Eigen::MatrixXcd {
    std::vector<double> gains;
    double tight = 0.0;
    for (const auto& v : p.g) {
      const double proj = std::norm(v.dot(u));
      if (proj <= 0)
        return (1.0 / min_gain) * Eigen::MatrixXcd::Identity(n, n);
      gains.push_back(proj);
      tight = std::max(tight, 1.0 / proj);
    }
    double t = tight;
    for (int it = 0; it < 12; ++it) {
      double d1 = 1.0;
      double d2 = 0.0;
      for (const double pk : gains) {
        const double slack = 1.0 - t * pk;
        if (slack > 0) {
          d1 -= 2.0 * penalty * slack * pk;
          d2 += 2.0 * penalty * pk * pk;
        }
      }
      if (d2 <= 0) break;
      const double next = t - d1 / d2;
      if (std::abs(next - t) <= 1e-14 * std::max(1.0, t)) {
        t = std::max(next, 0.0);
        break;
      }
      t = std::max(next, 0.0);
    }
    return t * (u * u.adjoint());
  };

  // Exact rank-one descent of the penalized objective: for C = t u u^H the
  // spectral-norm term needs no linearization, leaving
  //   psi(u, t) = t + penalty * sum_k max(0, 1 - t |g_k^H u|^2)^2.
  // Alternates a scalar Newton step in t with a backtracked sphere step in
  // u. Monotone in psi; used to polish the DC iterate.
  const auto polish_rank_one = [&](Eigen::VectorXcd u, double penalty,
                                   int iterations, double* final_value) {
    const auto value_at = [&](const Eigen::VectorXcd& w,
                              const Eigen::MatrixXcd& c) {
      (void)w;
      return c.trace().real() + penalty * violation_sq(c, p.g);
    };
    Eigen::MatrixXcd c = soft_rank_one(u, penalty);
    double best = value_at(u, c);
    double step = 0.1;
    for (int it = 0; it < iterations; ++it) {
      const double t = c.trace().real();
      Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(n);
      for (const auto& v : p.g) {
        const double slack = 1.0 - t * std::norm(v.dot(u));
        if (slack > 0) grad -= (2.0 * penalty * slack * t) * (v * v.dot(u));
      }
      grad -= u * u.dot(grad);  // tangent projection
      const double g_norm = grad.norm();
      if (g_norm <= 1e-12 * std::max(1.0, t)) break;
      bool moved = false;
      for (int bt = 0; bt < 30; ++bt) {
        Eigen::VectorXcd trial = (u - step * grad).normalized();
        const Eigen::MatrixXcd trial_c = soft_rank_one(trial, penalty);
        const double trial_value = value_at(trial, trial_c);
        if (trial_value < best - 1e-15 * std::max(1.0, best)) {
          u = std::move(trial);
          c = trial_c;
          best = trial_value;
          moved = true;
          if (bt == 0) step *= 1.6;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    if (final_value) *final_value = best;
    return c;
  };

  ReceiverDesign out;
  double zeta = options.zeta;
  int stall = 0;
  bool stationary = false;
  Eigen::VectorXcd dir_prev2, dir_prev1;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    out.outer_iterations = outer + 1;
    const Eigen::MatrixXcd next = run_subproblem(d, zeta, p.g, options);
    const double move = (next - d).norm();
    d = next;
    out.history.emplace_back(zeta, penalized_objective(d, zeta, p.g, options));

    double trace = d.trace().real();
    Eigen::VectorXcd dir;
    double top = spectral_norm(d, &dir);
    double residual = trace > 0 ? (trace - top) / trace : 1.0;

    // The linearized iteration rotates the principal direction with a
    // geometric rate near zeta/(1+zeta); once the iterates are rank-one,
    // Aitken extrapolation of the direction cuts straight to the fixed
    // point. The result is only kept when it does not worsen the
    // penalized objective.
    if (residual < 1e-8 && dir_prev1.size() == n && dir_prev2.size() == n) {
      // Align phases before differencing unit vectors.
      const auto align = [](Eigen::VectorXcd v, const Eigen::VectorXcd& ref) {
        const std::complex<double> inner = ref.dot(v);
        if (std::abs(inner) > 0) v *= std::conj(inner) / std::abs(inner);
        return v;
      };
      const Eigen::VectorXcd u1 = align(dir_prev1, dir_prev2);
      const Eigen::VectorXcd u2 = align(dir, dir_prev2);
      const double step1 = (u1 - dir_prev2).norm();
      const double step2 = (u2 - u1).norm();
      if (step1 > 0 && step2 > 0 && step2 < step1) {
        const double rate = std::min(step2 / step1, 0.995);
        Eigen::VectorXcd guess = u2 + (rate / (1.0 - rate)) * (u2 - u1);
        guess.normalize();
        const double penalty = options.penalty_scale * (1.0 + zeta);
        const Eigen::MatrixXcd candidate = soft_rank_one(guess, penalty);
        if (penalized_objective(candidate, zeta, p.g, options) <=
            out.history.back().second + 1e-12) {
          d = candidate;
          out.history.back().second =
              penalized_objective(d, zeta, p.g, options);
          trace = d.trace().real();
          top = spectral_norm(d, &dir);
          residual = trace > 0 ? (trace - top) / trace : 1.0;
          dir_prev1.resize(0);
          dir_prev2.resize(0);
        }
      }
    }
    dir_prev2 = dir_prev1;
    dir_prev1 = dir;

    if (residual > 1e-3) {
      if (++stall >= 20) {
        zeta *= 2.0;
        stall = 0;
      }
    } else {
      stall = 0;
    }
    if (move <= options.tol * std::max(1.0, d.norm()) &&
        residual <= options.rank1_target) {
      stationary = true;
      break;
    }
  }

  Eigen::VectorXcd top;
  const double top_val = spectral_norm(d, &top);
  const double trace = d.trace().real();
  out.rank1_residual = trace > 0 ? (trace - top_val) / trace : 1.0;
  out.converged = stationary && out.rank1_residual <= options.rank1_target;

  // Polish the extracted direction on the rank-one manifold, where the
  // penalized objective is exact. The matched-filter direction seeds a
  // second polish so a mislead DC basin can never beat the baseline.
  const double penalty = options.penalty_scale * (1.0 + zeta);
  const double last_history =
      out.history.empty() ? std::numeric_limits<double>::infinity()
                          : out.history.back().second;
  double dc_value = 0.0;
  const Eigen::MatrixXcd dc_polished =
      polish_rank_one(top, penalty, 4 * options.max_inner, &dc_value);
  if (dc_value <= last_history + 1e-10)
    out.history.emplace_back(zeta, dc_value);

  // Rescale each candidate so the worst constraint holds with equality or
  // better; the min-max objective itself is scale-invariant.
  const auto extract = [&](const Eigen::MatrixXcd& rank_one,
                           Eigen::VectorXcd* c_out) {
    Eigen::VectorXcd u;
    const double t = spectral_norm(rank_one, &u);
    Eigen::VectorXcd c = std::sqrt(std::max(t, 1e-300)) * u;
    double worst = 0.0;
    for (int k = 0; k < h_eff.cols(); ++k) {
      const double proj = std::norm(c.dot(h_eff.col(k)));
      if (proj == 0.0) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, sizes[k] * sizes[k] / proj);
    }
    if (worst > 0) c *= std::sqrt(worst);
    *c_out = std::move(c);
    return minmax_objective(*c_out, h_eff, sizes);
  };

  Eigen::VectorXcd c_best;
  double obj_best = extract(dc_polished, &c_best);

  // Multi-start insurance against off-basin terminations: polish from the
  // matched-filter and every per-client direction as well, then keep the
  // best. Never returns anything worse than the plain MRC baseline.
  const Eigen::VectorXcd mrc = mrc_receiver(h_eff, sizes);
  std::vector<Eigen::VectorXcd> seeds;
  seeds.push_back(mrc.normalized());
  for (int k = 0; k < h_eff.cols(); ++k)
    seeds.push_back(h_eff.col(k).normalized());
  for (const auto& seed : seeds) {
    Eigen::VectorXcd candidate;
    const double obj = extract(
        polish_rank_one(seed, penalty, 4 * options.max_inner, nullptr),
        &candidate);
    if (obj < obj_best) {
      obj_best = obj;
      c_best = std::move(candidate);
    }
  }
  Eigen::VectorXcd c_raw;
  const double obj_raw = extract(
      Eigen::MatrixXcd(mrc.normalized() * mrc.normalized().adjoint()), &c_raw);
  if (obj_raw < obj_best) {
    obj_best = obj_raw;
    c_best = std::move(c_raw);
    out.rank1_residual = 0.0;
  }

  out.c = std::move(c_best);
  out.objective = obj_best;
  return out;
}

}  // namespace gpfl
