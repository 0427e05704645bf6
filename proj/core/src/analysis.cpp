#include "gpfl/analysis.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpfl {

namespace {

double mu_of(const BoundInputs& in) { return in.L * in.delta / in.lambda; }

int t0_of(const BoundInputs& in) {
  const double x = 2.0 * in.L * in.g0_norm / (in.lambda * in.lambda);
  const double t0 = std::ceil(x) - 2.0;
  return t0 > 0 ? static_cast<int>(t0) : 0;
}

double gamma_of(const BoundInputs& in, int t0) {
  return in.L * in.g0_norm / (2.0 * in.lambda * in.lambda) - 0.25 * t0;
}

// gamma^(2^(t - t0)) without overflowing the exponent.
double gamma_power(double gamma, int t_minus_t0) {
  if (gamma <= 0.0) return 0.0;
  if (gamma >= 1.0) return std::numeric_limits<double>::infinity();
  const double expo = std::exp2(static_cast<double>(std::min(t_minus_t0, 1024)));
  return std::pow(gamma, expo);
}

double noise_term(const BoundInputs& in, const ChannelTerm& ch) {
  if (ch.sigma_n == 0.0) return 0.0;
  // E|n~| over the dim-symbol round; the per-symbol value carries a
  // sqrt(dim/2) factor for the real part of the post-processed noise.
  return std::sqrt(ch.dim / 2.0) * (in.delta + 1.0) / in.lambda * ch.sigma_n *
         ch.c_norm / (ch.d_total * std::sqrt(ch.alpha));
}

// (mu^t - 1)/(mu - 1); continuity limit t at mu = 1.
double geometric_factor(double mu, int t) {
  if (t == 0) return 0.0;
  if (std::abs(mu - 1.0) < 1e-12) return static_cast<double>(t);
  return (std::pow(mu, t) - 1.0) / (mu - 1.0);
}

double polyak_term(const BoundInputs& in, int t, int t0, double gamma) {
  if (t <= t0) {
    return in.lambda / in.L * (t0 - t + 2.0 * gamma / (1.0 - gamma));
  }
  const double p = gamma_power(gamma, t - t0);
  if (!std::isfinite(p) || p >= 1.0) return std::numeric_limits<double>::infinity();
  return 2.0 * in.lambda / in.L * p / (1.0 - p);
}

}  // namespace

BoundBreakdown theorem1_breakdown(const BoundInputs& in, const ChannelTerm& ch,
                                  int t) {
  BoundBreakdown b;
  b.mu = mu_of(in);
  b.t0 = t0_of(in);
  b.gamma = gamma_of(in, b.t0);
  b.post_regime = t > b.t0;
  b.c_term = polyak_term(in, t, b.t0, b.gamma) + noise_term(in, ch);
  b.geometric = geometric_factor(b.mu, t);
  b.bound = std::pow(b.mu, t) * in.init_dist + b.geometric * b.c_term;
  return b;
}

double theorem1_bound(const BoundInputs& in, const ChannelTerm& ch, int t) {
  return theorem1_breakdown(in, ch, t).bound;
}

double theorem2_bound(const BoundInputs& in, const ChannelTerm& ch, int t,
                      double init_dist_sq) {
  const double mu = mu_of(in);
  const int t0 = t0_of(in);
  const double gamma = gamma_of(in, t0);

  const double polyak = polyak_term(in, t, t0, gamma);
  double noise_sq = 0.0;
  if (ch.sigma_n != 0.0) {
    const double ratio = (in.delta + 1.0) / in.lambda;
    noise_sq = (ch.dim / 2.0) * ratio * ratio * ch.sigma_n * ch.sigma_n *
               ch.c_norm * ch.c_norm / (ch.d_total * ch.d_total * ch.alpha);
  }
  const double c_prime = polyak * polyak + noise_sq;
  const double geometric = geometric_factor(mu * mu, t);
  return in.L / 2.0 *
         (std::pow(mu, 2 * t) * init_dist_sq + geometric * c_prime);
}

std::vector<double> recursive_bound_trace(const BoundInputs& in,
                                          const std::vector<ChannelTerm>& terms) {
  const double mu = mu_of(in);
  const int t0 = t0_of(in);
  const double gamma = gamma_of(in, t0);

  std::vector<double> bounds;
  bounds.reserve(terms.size() + 1);
  double value = in.init_dist;
  bounds.push_back(value);
  for (std::size_t s = 0; s < terms.size(); ++s) {
    const double a_s = polyak_term(in, static_cast<int>(s), t0, gamma) +
                       noise_term(in, terms[s]);
    value = mu * value + a_s;
    bounds.push_back(value);
  }
  return bounds;
}

long rounds_to_epsilon(const BoundInputs& in, const ChannelTerm& ch, double eps,
                       Regime regime) {
  const double mu = mu_of(in);
  if (mu >= 1.0)
    throw std::domain_error("rounds_to_epsilon: mu >= 1, no convergence guarantee");
  constexpr long kMaxScan = 10'000'000;

  if (regime == Regime::Linear) {
    for (long t = 0; t <= kMaxScan; ++t) {
      if (2.0 * std::pow(mu, static_cast<double>(t)) * in.init_dist <= eps) return t;
    }
    throw std::runtime_error("rounds_to_epsilon: target unreachable");
  }

  const int t0 = t0_of(in);
  const double gamma = gamma_of(in, t0);
  for (long t = 0; t <= kMaxScan; ++t) {
    const double c1 = polyak_term(in, std::max<int>(t0 + 1, static_cast<int>(t)),
                                  t0, gamma) +
                      noise_term(in, ch);
    const double bound = 2.0 * geometric_factor(mu, static_cast<int>(t)) * c1;
    if (t > 0 && bound <= eps) return t;
  }
  throw std::runtime_error("rounds_to_epsilon: target unreachable");
}

EmpiricalReport empirical_check(
    const std::vector<std::vector<double>>& observed_per_seed,
    const BoundInputs& in,
    const std::vector<std::vector<ChannelTerm>>& terms_per_seed) {
  if (observed_per_seed.empty())
    throw std::invalid_argument("empirical_check: no trajectories");
  if (observed_per_seed.size() != terms_per_seed.size())
    throw std::invalid_argument("empirical_check: seed count mismatch");
  const std::size_t rounds = observed_per_seed.front().size();
  for (const auto& traj : observed_per_seed)
    if (traj.size() != rounds)
      throw std::invalid_argument("empirical_check: ragged trajectories");

  const double seeds = static_cast<double>(observed_per_seed.size());
  EmpiricalReport report;
  report.rows.resize(rounds);

  std::vector<std::vector<double>> recursive;
  recursive.reserve(terms_per_seed.size());
  for (const auto& terms : terms_per_seed)
    recursive.push_back(recursive_bound_trace(in, terms));

  int within = 0;
  for (std::size_t t = 0; t < rounds; ++t) {
    EmpiricalRow row;
    row.round = static_cast<int>(t);
    for (std::size_t s = 0; s < observed_per_seed.size(); ++s) {
      row.observed += observed_per_seed[s][t] / seeds;
      const ChannelTerm& ch =
          t == 0 ? ChannelTerm{} : terms_per_seed[s][std::min(t - 1, terms_per_seed[s].size() - 1)];
      row.bound_closed += theorem1_bound(in, ch, static_cast<int>(t)) / seeds;
      if (t < recursive[s].size()) row.bound_recursive += recursive[s][t] / seeds;
    }
    if (row.observed <= row.bound_closed) ++within;
    report.rows[t] = row;
  }
  report.fraction_within = static_cast<double>(within) / rounds;
  return report;
}

}  // namespace gpfl
