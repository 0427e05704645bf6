#pragma once

#include <vector>

namespace gpfl {

/// Problem-level constants entering the convergence bounds.
struct BoundInputs {
  double lambda = 1.0;    // strong-convexity modulus
  double L = 1.0;         // gradient Lipschitz constant
  double delta = 0.0;     // max_t relative inverse-Hessian error
  double g0_norm = 1.0;   // |g_0| at the initial model
  double init_dist = 1.0; // E|theta_0 - theta*|
};

/// Realized per-round channel quantities the additive bound term uses.
/// sigma_n == 0 encodes a noiseless round (alpha/c_norm ignored). dim is
/// the model dimension; the aggregate noise vector spans dim symbols and
/// its expected norm carries a sqrt(dim/2) factor under the real-part
/// transmission convention.
struct ChannelTerm {
  double sigma_n = 0.0;
  double c_norm = 0.0;
  double alpha = 1.0;
  double d_total = 1.0;
  int dim = 1;
};

/// All intermediate quantities of the distance bound at round t.
struct BoundBreakdown {
  double mu = 0.0;
  int t0 = 0;
  double gamma = 0.0;
  double c_term = 0.0;      // C_0 or C_1 evaluated at t
  double geometric = 0.0;   // (mu^t - 1)/(mu - 1), continuity limit t at mu=1
  double bound = 0.0;
  bool post_regime = false; // t > t0
};

BoundBreakdown theorem1_breakdown(const BoundInputs& in, const ChannelTerm& ch,
                                  int t);

/// E|theta_t - theta*| <= mu^t E|theta_0 - theta*| + C_t.
double theorem1_bound(const BoundInputs& in, const ChannelTerm& ch, int t);

/// Optimality gap: (L/2)(mu^{2t} E|theta_0 - theta*|^2 + C'_t).
double theorem2_bound(const BoundInputs& in, const ChannelTerm& ch, int t,
                      double init_dist_sq);

/// Faithful per-round recursion: unrolls E_{t+1} <= mu E_t + A_t with the
/// round-s realized channel term, rather than re-using round-t values for
/// the whole history. Returns bounds for t = 0..terms.size().
std::vector<double> recursive_bound_trace(const BoundInputs& in,
                                          const std::vector<ChannelTerm>& terms);

enum class Regime { Superlinear, Linear };

/// Smallest t whose corollary bound drops below eps (forward scan).
/// Linear: 2 mu^t E|theta_0 - theta*| <= eps.
/// Superlinear: 2 geom(mu,t) C_1(t) <= eps.
/// Throws std::domain_error when mu >= 1 and std::runtime_error when the
/// target is below the reachable floor.
long rounds_to_epsilon(const BoundInputs& in, const ChannelTerm& ch, double eps,
                       Regime regime);

struct EmpiricalRow {
  int round = 0;
  double observed = 0.0;         // mean over seeds of |theta_t - theta*|
  double bound_closed = 0.0;     // mean over seeds of the closed form
  double bound_recursive = 0.0;  // mean over seeds of the unrolled recursion
};

struct EmpiricalReport {
  std::vector<EmpiricalRow> rows;
  double fraction_within = 0.0;  // rounds with observed <= bound_closed
};

/// Compare observed distance trajectories against the bound. One inner
/// vector per seed; all seeds must have equal length (rounds 0..T).
EmpiricalReport empirical_check(
    const std::vector<std::vector<double>>& observed_per_seed,
    const BoundInputs& in,
    const std::vector<std::vector<ChannelTerm>>& terms_per_seed);

}  // namespace gpfl
