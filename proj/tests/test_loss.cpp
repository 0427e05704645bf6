#include <doctest.h>

#include "gpfl/loss.hpp"
#include "gpfl/rng.hpp"
#include "support/oracles.hpp"

using namespace gpfl;

TEST_SUITE_BEGIN("loss_model");

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, rng::Stream& s) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = s.normal();
  return m;
}

Eigen::VectorXd random_vector(int n, rng::Stream& s) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = s.normal();
  return v;
}

Eigen::VectorXd pm_labels(int n, rng::Stream& s) {
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = s.uniform() < 0.5 ? -1.0 : 1.0;
  return y;
}

Objective toy_objective(int clients, int per_client, int dim, double reg,
                        std::uint64_t seed) {
  rng::Stream s(seed);
  std::vector<std::shared_ptr<const ClientLoss>> cs;
  std::vector<double> sizes;
  std::vector<std::shared_ptr<const LogisticLoss>> logits;
  for (int k = 0; k < clients; ++k) {
    auto loss = std::make_shared<LogisticLoss>(random_matrix(per_client, dim, s),
                                               pm_labels(per_client, s), reg);
    logits.push_back(loss);
    cs.push_back(loss);
    sizes.push_back(per_client);
  }
  return Objective(cs, sizes, logistic_constants(logits, sizes));
}

}  // namespace

TEST_CASE("loss at the origin is log 2") {
  rng::Stream s(1);
  LogisticLoss loss(random_matrix(7, 3, s), pm_labels(7, s), 0.7);
  CHECK(loss.loss(Eigen::VectorXd::Zero(3)) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("regularizer dominates along a separating ray") {
  Eigen::MatrixXd x(1, 3);
  x << 1, 0, 0;
  Eigen::VectorXd y(1);
  y << 1;
  LogisticLoss loss(x, y, 0.5);
  const double t = 40.0;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  theta[0] = t;
  // log(1+exp(-40)) ~ 4e-18; the quadratic term is all that remains.
  CHECK(loss.loss(theta) == doctest::Approx(0.25 * t * t).epsilon(1e-12));
}

TEST_CASE("matches the naive scalar-loop oracle") {
  rng::Stream s(2);
  const Eigen::MatrixXd x = random_matrix(4, 5, s);
  const Eigen::VectorXd y = pm_labels(4, s);
  LogisticLoss loss(x, y, 0.31);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd theta = random_vector(5, s);
    CHECK(loss.loss(theta) ==
          doctest::Approx(oracles::logistic_loss_naive(x, y, theta, 0.31))
              .epsilon(1e-12));
  }
}

TEST_CASE("gradient is zero at the origin on symmetric data") {
  // Same features under both labels: the label terms cancel at theta = 0.
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 2.0, 1.0, 2.0;
  Eigen::VectorXd y(2);
  y << 1.0, -1.0;
  LogisticLoss loss(x, y, 1.0);
  CHECK(loss.gradient(Eigen::VectorXd::Zero(2)).norm() == doctest::Approx(0.0));
}

TEST_CASE("gradient matches finite differences") {
  rng::Stream s(3);
  const Eigen::MatrixXd x = random_matrix(9, 4, s);
  const Eigen::VectorXd y = pm_labels(9, s);
  LogisticLoss loss(x, y, 0.2);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd theta = random_vector(4, s);
    const Eigen::VectorXd fd = oracles::fd_gradient(
        [&](const Eigen::VectorXd& t) { return loss.loss(t); }, theta);
    const Eigen::VectorXd g = loss.gradient(theta);
    CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("large regularizer dominates the gradient") {
  rng::Stream s(4);
  const Eigen::MatrixXd x = random_matrix(5, 3, s);
  const Eigen::VectorXd y = pm_labels(5, s);
  const double reg = 1e8;
  LogisticLoss loss(x, y, reg);
  const Eigen::VectorXd theta = random_vector(3, s);
  const Eigen::VectorXd g = loss.gradient(theta);
  CHECK((g - reg * theta).norm() <= 1e-6 * g.norm());
}

TEST_CASE("hessian at the origin with a unit sample") {
  Eigen::MatrixXd x(1, 4);
  x << 1, 0, 0, 0;
  Eigen::VectorXd y(1);
  y << 1;
  LogisticLoss loss(x, y, 1.0);
  const Eigen::MatrixXd h = loss.hessian(Eigen::VectorXd::Zero(4));
  Eigen::VectorXd expect(4);
  expect << 1.25, 1.0, 1.0, 1.0;  // sigma(0)(1-sigma(0)) = 1/4 on e1
  CHECK((h.diagonal() - expect).norm() == doctest::Approx(0.0));
  CHECK((h - Eigen::MatrixXd(expect.asDiagonal())).norm() == doctest::Approx(0.0));
}

TEST_CASE("hessian matches finite differences of the gradient") {
  Objective obj = toy_objective(3, 6, 4, 0.4, 11);
  rng::Stream s(12);
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::VectorXd theta = random_vector(4, s);
    const Eigen::MatrixXd fd = oracles::fd_jacobian(
        [&](const Eigen::VectorXd& t) { return obj.gradient(t); }, theta);
    CHECK((obj.hessian(theta) - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST_CASE("hessian respects the regularizer floor") {
  Objective obj = toy_objective(2, 8, 5, 0.35, 13);
  rng::Stream s(14);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd h = obj.hessian(random_vector(5, s));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    CHECK(eig.eigenvalues().minCoeff() >= 0.35 - 1e-10);
  }
}

TEST_CASE("constants: no data curvature") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
  Eigen::VectorXd y(3);
  y << 1, -1, 1;
  auto loss = std::make_shared<LogisticLoss>(x, y, 1.0);
  const SmoothnessConstants c = logistic_constants({loss}, {3.0});
  CHECK(c.lambda == doctest::Approx(1.0));
  CHECK(c.L == doctest::Approx(1.0));
}

TEST_CASE("constants: single sample with |u|^2 = 4") {
  Eigen::MatrixXd x(1, 2);
  x << 2, 0;
  Eigen::VectorXd y(1);
  y << 1;
  auto loss = std::make_shared<LogisticLoss>(x, y, 1.0);
  const SmoothnessConstants c = logistic_constants({loss}, {1.0});
  CHECK(c.L == doctest::Approx(2.0));  // 1 + 4/4
}

TEST_CASE("constants match a dense eigendecomposition oracle") {
  rng::Stream s(21);
  std::vector<std::shared_ptr<const LogisticLoss>> logits;
  std::vector<double> sizes;
  const int dim = 12;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(dim, dim);
  double total = 0;
  for (int k = 0; k < 4; ++k) {
    const int nk = 10 + k;
    const Eigen::MatrixXd x = random_matrix(nk, dim, s);
    logits.push_back(
        std::make_shared<LogisticLoss>(x, pm_labels(nk, s), 0.05));
    sizes.push_back(nk);
    total += nk;
  }
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const auto& x = logits[k]->features();
    pooled += (sizes[k] / total) * (x.transpose() * x) / x.rows();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pooled);
  const double expect = 0.05 + eig.eigenvalues().maxCoeff() / 4.0;
  const SmoothnessConstants c = logistic_constants(logits, sizes);
  CHECK(c.L == doctest::Approx(expect).epsilon(1e-7));
  CHECK(c.L >= c.lambda);
}

TEST_CASE("curvature interval certifies the hessian at random points") {
  Objective obj = toy_objective(4, 12, 6, 0.25, 31);
  const SmoothnessConstants c = obj.constants();
  rng::Stream s(32);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        obj.hessian(random_vector(6, s)));
    CHECK(eig.eigenvalues().minCoeff() >= c.lambda - 1e-10);
    CHECK(eig.eigenvalues().maxCoeff() <= c.L + 1e-10);
  }
}

TEST_CASE("weighted global gradient equals the weighted sum of local ones") {
  Objective obj = toy_objective(5, 7, 4, 0.15, 41);
  rng::Stream s(42);
  const Eigen::VectorXd theta = random_vector(4, s);
  Eigen::VectorXd manual = Eigen::VectorXd::Zero(4);
  for (int k = 0; k < obj.client_count(); ++k)
    manual += obj.weight(k) * obj.client(k).gradient(theta);
  CHECK((obj.gradient(theta) - manual).norm() <= 1e-12);
}

TEST_CASE("optimum drives the gradient to zero and is unique-stable") {
  Objective obj = toy_objective(3, 20, 5, 0.3, 51);
  const Eigen::VectorXd star = obj.optimum();
  CHECK(obj.gradient(star).norm() <= 1e-10);
  // Strong convexity: restarting from elsewhere reaches the same point.
  rng::Stream s(52);
  Eigen::VectorXd other = star + 0.5 * random_vector(5, s);
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd g = obj.gradient(other);
    if (g.norm() <= 1e-12) break;
    other -= obj.hessian(other).ldlt().solve(g);
  }
  CHECK((other - star).norm() <= 1e-8);
}

TEST_CASE("quadratic loss oracle behaviour") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 0, 0, 3;
  Eigen::VectorXd b(2);
  b << 2, 3;
  QuadraticLoss q(a, b);
  Eigen::VectorXd theta(2);
  theta << 1, 1;
  CHECK(q.gradient(theta).norm() == doctest::Approx(0.0));
  CHECK(q.hessian(theta) == a);
}

TEST_SUITE_END();
