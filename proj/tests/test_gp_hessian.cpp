#include <doctest.h>

#include <cmath>

#include "gpfl/gp_hessian.hpp"
#include "gpfl/rng.hpp"
#include "support/oracles.hpp"

using namespace gpfl;

TEST_SUITE_BEGIN("gp_hessian");

namespace {

Eigen::VectorXd random_vector(int n, rng::Stream& s) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = s.normal();
  return v;
}

Eigen::MatrixXd random_spd(int n, rng::Stream& s, double ridge = 0.5) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = s.normal();
  return a * a.transpose() / n + ridge * Eigen::MatrixXd::Identity(n, n);
}

// A window filled with random differences/steps and chained BFGS samples.
ObservationWindow random_window(int r, int d, std::uint64_t seed,
                                double scale = 1.0) {
  rng::Stream s(seed);
  ObservationWindow window(r);
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < r; ++i) {
    const Eigen::VectorXd w = random_vector(d, s);
    const Eigen::VectorXd y = scale * random_vector(d, s);
    b = bfgs_sample(b, w, y);
    window.push(y, w, b);
  }
  return window;
}

}  // namespace

TEST_CASE("bfgs secant identity on a quadratic") {
  rng::Stream s(70);
  const int d = 8;
  const Eigen::MatrixXd a = random_spd(d, s);
  Eigen::MatrixXd b = 2.0 * Eigen::MatrixXd::Identity(d, d);
  for (int it = 0; it < 12; ++it) {
    const Eigen::VectorXd w = random_vector(d, s);
    const Eigen::VectorXd y = a * w;  // exact curvature pair
    bool applied = false;
    b = bfgs_sample(b, w, y, 1e-8, &applied);
    REQUIRE(applied);
    CHECK((b * w - y).norm() <= 1e-9 * std::max(1.0, y.norm()));
  }
}

TEST_CASE("damped skip leaves the matrix bit-identical") {
  rng::Stream s(71);
  const int d = 5;
  const Eigen::MatrixXd b = random_spd(d, s);
  const Eigen::VectorXd w = random_vector(d, s);
  Eigen::VectorXd y = -w;  // negative curvature
  bool applied = true;
  const Eigen::MatrixXd next = bfgs_sample(b, w, y, 1e-8, &applied);
  CHECK_FALSE(applied);
  CHECK(next == b);
}

TEST_CASE("applied updates preserve positive definiteness") {
  rng::Stream s(72);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(s.below(6));
    Eigen::MatrixXd b = random_spd(d, s);
    const Eigen::VectorXd w = random_vector(d, s);
    Eigen::VectorXd y = random_vector(d, s);
    bool applied = false;
    const Eigen::MatrixXd next = bfgs_sample(b, w, y, 1e-8, &applied);
    if (!applied) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(next);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK((next * w - y).norm() <= 1e-9 * std::max(1.0, y.norm()));
  }
}

TEST_CASE("inverse_update matches a direct inverse") {
  rng::Stream s(73);
  const int d = 6;
  SUBCASE("single update from identity") {
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd binv = b;
    const Eigen::VectorXd w = random_vector(d, s);
    const Eigen::VectorXd y = random_spd(d, s) * w;
    bool applied = false;
    const Eigen::MatrixXd next = bfgs_sample(b, w, y, 1e-8, &applied);
    REQUIRE(applied);
    binv = inverse_update(binv, b, w, y);
    CHECK((binv * next - Eigen::MatrixXd::Identity(d, d)).norm() <= 1e-9);
  }
  SUBCASE("tracker skip leaves inverse unchanged") {
    BfgsTracker tracker(d, 1.5);
    const Eigen::MatrixXd before = tracker.inverse();
    const Eigen::VectorXd w = random_vector(d, s);
    CHECK_FALSE(tracker.update(w, -w));
    CHECK(tracker.inverse() == before);
  }
  SUBCASE("20-update chain drift") {
    BfgsTracker tracker(d, 2.0);
    rng::Stream chain(74);
    const Eigen::MatrixXd a = random_spd(d, chain);
    for (int it = 0; it < 20; ++it) {
      const Eigen::VectorXd w = random_vector(d, chain);
      Eigen::VectorXd y = a * w + 0.01 * random_vector(d, chain);
      tracker.update(w, y);
    }
    const Eigen::MatrixXd direct = tracker.matrix().inverse();
    CHECK((tracker.inverse() - direct).norm() <= 1e-6 * direct.norm());
  }
}

TEST_CASE("rbf kernel values") {
  Eigen::VectorXd u(3);
  u << 0.0, 1.0, -2.0;
  const Eigen::MatrixXd k = rbf_kernel(u, u, 0.7);
  for (int i = 0; i < 3; ++i) CHECK(k(i, i) == doctest::Approx(1.0));
  CHECK(k.maxCoeff() <= 1.0);
  CHECK(k.minCoeff() > 0.0);

  // |u - v| = tau sqrt(2 ln 2) halves the kernel.
  const double tau = 1.3;
  Eigen::VectorXd a(1), b(1);
  a << 0.0;
  b << tau * std::sqrt(2.0 * std::log(2.0));
  CHECK(rbf_kernel(a, b, tau)(0, 0) == doctest::Approx(0.5));

  CHECK_THROWS(rbf_kernel(u, u, 0.0));
}

TEST_CASE("jittered kernel of random inputs is positive definite") {
  rng::Stream s(75);
  const Eigen::VectorXd u = random_vector(50, s);
  Eigen::MatrixXd k = rbf_kernel(u, u, 0.5);
  k.diagonal().array() += 1e-8;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("build_cache basics") {
  SUBCASE("r=1, d=1 window") {
    ObservationWindow window(1);
    Eigen::VectorXd y(1), w(1);
    y << 0.3;
    w << 0.1;
    window.push(y, w, Eigen::MatrixXd::Identity(1, 1));
    const KernelCache cache = build_cache(window, 1.0, 1e-6);
    CHECK(cache.K.rows() == 1);
    CHECK(cache.K(0, 0) == doctest::Approx(1.0 + 1e-6));
    CHECK(cache.mu_o(0) == doctest::Approx(0.3));
  }
  SUBCASE("duplicate observations still factorize") {
    ObservationWindow window(4);
    Eigen::VectorXd y(2), w(2);
    y << 0.5, 0.5;
    w << 0.1, 0.1;
    for (int i = 0; i < 4; ++i)
      window.push(y, w, Eigen::MatrixXd::Identity(2, 2));
    const KernelCache cache = build_cache(window, 0.8, 1e-6);
    CHECK(cache.factor.info() == Eigen::Success);
  }
  SUBCASE("kernel matches the entrywise recomputation") {
    const ObservationWindow window = random_window(3, 4, 76);
    const KernelCache cache = build_cache(window, 0.0, 1e-6);
    Eigen::MatrixXd expect = rbf_kernel(cache.o, cache.o, cache.tau);
    expect.diagonal().array() += cache.jitter;
    CHECK((cache.K - expect).norm() == 0.0);
  }
}

TEST_CASE("moving average blocks") {
  ObservationWindow window(3);
  Eigen::VectorXd w(1);
  w << 0.0;
  for (double v : {1.0, 2.0, 6.0}) {
    Eigen::VectorXd y(1);
    y << v;
    window.push(y, w, Eigen::MatrixXd::Identity(1, 1));
  }
  const Eigen::VectorXd mu = window.moving_average();
  CHECK(mu(0) == doctest::Approx(1.0));
  CHECK(mu(1) == doctest::Approx(1.5));
  CHECK(mu(2) == doctest::Approx(3.0));
}

TEST_CASE("scalar posterior matches the 1x1 conditioning formula") {
  ObservationWindow window(1);
  Eigen::VectorXd y(1), w(1);
  y << 0.4;
  w << 0.2;
  Eigen::MatrixXd b(1, 1);
  b << 1.7;
  window.push(y, w, b);
  const double eps = 1e-6;
  const double tau = 0.9;
  const KernelCache cache = build_cache(window, tau, eps);

  const double delta = 0.05;  // observation deviating from its mean
  Eigen::VectorXd o_t(1);
  o_t << cache.o(0) + delta;  // mu_o equals o for a singleton window

  Eigen::VectorXd hist(1);
  hist << 1.7;
  const GaussianPosterior post =
      entry_posterior(cache, hist, o_t, PosteriorSign::Paper);

  const double k = std::exp(-(0.4 - 1.7) * (0.4 - 1.7) / (2 * tau * tau));
  CHECK(post.zeta == doctest::Approx(1.7 - k * delta / (1.0 + eps)).epsilon(1e-12));
  CHECK(post.psi == doctest::Approx(1.0 - k * k / (1.0 + eps)).epsilon(1e-12));
}

TEST_CASE("far-away entry value recovers the prior") {
  const ObservationWindow window = random_window(2, 3, 77, 0.1);
  const KernelCache cache = build_cache(window, 0.05, 1e-6);
  // History far outside the observation range makes phi vanish.
  Eigen::VectorXd hist(window.size());
  hist.setConstant(1e6);
  const GaussianPosterior post = entry_posterior(cache, hist, cache.o);
  CHECK(post.zeta == doctest::Approx(1e6));
  CHECK(post.psi == doctest::Approx(1.0));
}

TEST_CASE("posterior equals dense joint-Gaussian conditioning") {
  rng::Stream s(78);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 1 + static_cast<int>(s.below(3));
    const int d = 1 + static_cast<int>(s.below(2));
    const ObservationWindow window = random_window(r, d, 1000 + trial);
    const KernelCache cache = build_cache(window, 0.0, 1e-6);

    const int i = static_cast<int>(s.below(d));
    const int j = static_cast<int>(s.below(d));
    const Eigen::VectorXd hist = window.entry_history(i, j);
    const double b_now = hist[hist.size() - 1];

    for (const bool paper : {true, false}) {
      const GaussianPosterior post = entry_posterior(
          cache, hist, cache.o,
          paper ? PosteriorSign::Paper : PosteriorSign::Standard);
      const Eigen::VectorXd phi = rbf_kernel(cache.o, Eigen::VectorXd::Constant(1, b_now), cache.tau).col(0);
      const oracles::DensePosterior expect = oracles::dense_conditioning(
          cache.K, phi, 1.0, hist.mean(), cache.o - cache.mu_o, paper);
      CHECK(post.zeta == doctest::Approx(expect.zeta).epsilon(1e-8));
      CHECK(post.psi ==
            doctest::Approx(std::max(expect.psi, 0.0)).epsilon(1e-8));
    }
  }
}

TEST_CASE("posterior variance never exceeds the prior") {
  rng::Stream s(79);
  for (int trial = 0; trial < 20; ++trial) {
    const ObservationWindow window = random_window(3, 3, 2000 + trial);
    const KernelCache cache = build_cache(window, 0.0, 1e-6);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const GaussianPosterior post =
            entry_posterior(cache, window.entry_history(i, j), cache.o);
        CHECK(post.psi <= 1.0 + 1e-10);
        CHECK(post.psi >= 0.0);
      }
  }
}

TEST_CASE("cg agrees with the dense solve and reports diagnostics") {
  const ObservationWindow window = random_window(3, 2, 81);
  const KernelCache cache = build_cache(window, 0.0, 1e-6);
  const Eigen::VectorXd hist = window.entry_history(0, 1);
  CgInfo info;
  entry_posterior(cache, hist, cache.o, PosteriorSign::Paper, &info);
  CHECK(info.residual <= 1e-8);
  CHECK_FALSE(info.fallback);
}

TEST_CASE("sample_hessian behaviour") {
  const SmoothnessConstants constants{0.5, 2.0};
  SUBCASE("zero variance returns the clipped means") {
    Eigen::MatrixXd zeta(2, 2);
    zeta << 1.0, 0.2, 0.2, 1.0;
    const Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(2, 2);
    const HessianEstimate est = sample_hessian(zeta, psi, constants, 5, 3);
    CHECK((est.b_hat - zeta).norm() <= 1e-12);  // already inside [0.5, 2]
  }
  SUBCASE("identity means with tiny variance stay near identity") {
    const Eigen::MatrixXd zeta = Eigen::MatrixXd::Identity(4, 4);
    const Eigen::MatrixXd psi = Eigen::MatrixXd::Constant(4, 4, 1e-12);
    const HessianEstimate est = sample_hessian(zeta, psi, constants, 6, 0);
    CHECK((est.b_hat - zeta).norm() <= 1e-4);
  }
  SUBCASE("spectrum is clipped into [lambda, L]") {
    Eigen::MatrixXd zeta(3, 3);
    zeta << 10, 0, 0, 0, -4, 0, 0, 0, 1;
    const Eigen::MatrixXd psi = Eigen::MatrixXd::Constant(3, 3, 0.5);
    const HessianEstimate est = sample_hessian(zeta, psi, constants, 7, 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(est.b_hat);
    CHECK(eig.eigenvalues().minCoeff() >= constants.lambda - 1e-10);
    CHECK(eig.eigenvalues().maxCoeff() <= constants.L + 1e-10);
    CHECK((est.b_hat - est.b_hat.transpose()).norm() <= 1e-10);
  }
  SUBCASE("per-entry sample mean matches zeta") {
    // Wide clip range so clipping does not bias the Monte-Carlo check.
    const SmoothnessConstants wide{-100.0, 100.0};
    Eigen::MatrixXd zeta(2, 2);
    zeta << 0.3, -0.7, -0.7, 1.2;
    Eigen::MatrixXd psi = Eigen::MatrixXd::Constant(2, 2, 0.09);
    double acc = 0.0;
    const int trials = 1000;
    for (int rep = 0; rep < trials; ++rep)
      acc += sample_hessian(zeta, psi, wide, 11, rep).b_hat(0, 1);
    const double se = 0.3 / std::sqrt(trials);
    CHECK(std::abs(acc / trials - zeta(0, 1)) <= 4 * se);
  }
  SUBCASE("deterministic per (seed, round)") {
    const Eigen::MatrixXd zeta = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXd psi = Eigen::MatrixXd::Constant(3, 3, 0.2);
    const HessianEstimate a = sample_hessian(zeta, psi, constants, 9, 4);
    const HessianEstimate b = sample_hessian(zeta, psi, constants, 9, 4);
    CHECK(a.b_hat == b.b_hat);
    const HessianEstimate c = sample_hessian(zeta, psi, constants, 9, 5);
    CHECK(a.b_hat != c.b_hat);
  }
}

TEST_CASE("newton_direction solves the clipped system") {
  SUBCASE("identity") {
    HessianEstimate est;
    est.b_hat = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd g(3);
    g << 1, -2, 3;
    CHECK((newton_direction(est, g) + g).norm() <= 1e-10);
  }
  SUBCASE("scaled identity") {
    HessianEstimate est;
    est.b_hat = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    Eigen::VectorXd g(2);
    g << 4, 0;
    const Eigen::VectorXd d = newton_direction(est, g);
    CHECK(d[0] == doctest::Approx(-2.0));
    CHECK(d[1] == doctest::Approx(0.0));
  }
  SUBCASE("random SPD residual and descent") {
    rng::Stream s(82);
    for (int trial = 0; trial < 30; ++trial) {
      HessianEstimate est;
      est.b_hat = random_spd(6, s);
      const Eigen::VectorXd g = random_vector(6, s);
      const Eigen::VectorXd d = newton_direction(est, g);
      CHECK((est.b_hat * (-d) - g).norm() <= 1e-7 * std::max(1.0, g.norm()));
      CHECK(g.dot(d) < 0.0);
    }
  }
}

TEST_SUITE_END();
