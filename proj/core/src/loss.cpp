#include "gpfl/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace gpfl {

namespace {

// log(1 + exp(z)) without overflow.
double log1pexp(double z) {
  if (z > 35.0) return z;
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_dim(int expect, const Eigen::VectorXd& theta, const char* who) {
  if (theta.size() != expect)
    throw std::invalid_argument(std::string(who) + ": parameter dimension mismatch");
}

}  // namespace

LogisticLoss::LogisticLoss(Eigen::MatrixXd features, Eigen::VectorXd labels,
                           double reg)
    : x_(std::move(features)), y_(std::move(labels)), reg_(reg) {
  if (x_.rows() != y_.size())
    throw std::invalid_argument("LogisticLoss: feature/label count mismatch");
  if (x_.rows() == 0) throw std::invalid_argument("LogisticLoss: empty shard");
  if (reg_ <= 0) throw std::invalid_argument("LogisticLoss: reg must be > 0");
}

double LogisticLoss::loss(const Eigen::VectorXd& theta) const {
  check_dim(dim(), theta, "LogisticLoss::loss");
  const Eigen::VectorXd margins = (x_ * theta).cwiseProduct(y_);
  double total = 0.0;
  for (int i = 0; i < margins.size(); ++i) total += log1pexp(-margins[i]);
  return total / count() + 0.5 * reg_ * theta.squaredNorm();
}

Eigen::VectorXd LogisticLoss::gradient(const Eigen::VectorXd& theta) const {
  check_dim(dim(), theta, "LogisticLoss::gradient");
  const Eigen::VectorXd margins = (x_ * theta).cwiseProduct(y_);
  Eigen::VectorXd coeff(count());
  for (int i = 0; i < count(); ++i) coeff[i] = -y_[i] * sigmoid(-margins[i]);
  return x_.transpose() * coeff / count() + reg_ * theta;
}

Eigen::MatrixXd LogisticLoss::hessian(const Eigen::VectorXd& theta) const {
  check_dim(dim(), theta, "LogisticLoss::hessian");
  const Eigen::VectorXd margins = (x_ * theta).cwiseProduct(y_);
  Eigen::VectorXd curv(count());
  for (int i = 0; i < count(); ++i) {
    const double s = sigmoid(margins[i]);
    curv[i] = s * (1.0 - s);
  }
  Eigen::MatrixXd h = x_.transpose() * curv.asDiagonal() * x_ / count();
  h.diagonal().array() += reg_;
  return h;
}

QuadraticLoss::QuadraticLoss(Eigen::MatrixXd a, Eigen::VectorXd b, double c)
    : a_(std::move(a)), b_(std::move(b)), c_(c) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size())
    throw std::invalid_argument("QuadraticLoss: dimension mismatch");
}

double QuadraticLoss::loss(const Eigen::VectorXd& theta) const {
  check_dim(dim(), theta, "QuadraticLoss::loss");
  return 0.5 * theta.dot(a_ * theta) - b_.dot(theta) + c_;
}

Eigen::VectorXd QuadraticLoss::gradient(const Eigen::VectorXd& theta) const {
  check_dim(dim(), theta, "QuadraticLoss::gradient");
  return a_ * theta - b_;
}

Objective::Objective(std::vector<std::shared_ptr<const ClientLoss>> clients,
                     std::vector<double> sizes, SmoothnessConstants constants)
    : clients_(std::move(clients)),
      sizes_(std::move(sizes)),
      total_size_(0.0),
      constants_(constants) {
  if (clients_.empty()) throw std::invalid_argument("Objective: no clients");
  if (clients_.size() != sizes_.size())
    throw std::invalid_argument("Objective: client/size count mismatch");
  for (double s : sizes_) {
    if (s <= 0) throw std::invalid_argument("Objective: client sizes must be > 0");
    total_size_ += s;
  }
}

double Objective::loss(const Eigen::VectorXd& theta) const {
  double total = 0.0;
  for (int k = 0; k < client_count(); ++k)
    total += weight(k) * clients_[k]->loss(theta);
  return total;
}

Eigen::VectorXd Objective::gradient(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (int k = 0; k < client_count(); ++k)
    g += weight(k) * clients_[k]->gradient(theta);
  return g;
}

Eigen::MatrixXd Objective::hessian(const Eigen::VectorXd& theta) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), dim());
  for (int k = 0; k < client_count(); ++k)
    h += weight(k) * clients_[k]->hessian(theta);
  return h;
}

Eigen::VectorXd Objective::optimum(double tol, int max_iter) const {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim());
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd g = gradient(theta);
    if (g.norm() <= tol) return theta;
    theta -= hessian(theta).ldlt().solve(g);
  }
  const double g_norm = gradient(theta).norm();
  if (g_norm > tol * 10)
    throw std::runtime_error("Objective::optimum: Newton did not converge");
  return theta;
}

SmoothnessConstants logistic_constants(
    const std::vector<std::shared_ptr<const LogisticLoss>>& clients,
    const std::vector<double>& sizes) {
  if (clients.empty())
    throw std::invalid_argument("logistic_constants: no clients");
  const int m = clients[0]->dim();
  double total = 0.0;
  for (double s : sizes) total += s;

  Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t k = 0; k < clients.size(); ++k) {
    const auto& x = clients[k]->features();
    second_moment += (sizes[k] / total) * (x.transpose() * x) / clients[k]->count();
  }

  // Power iteration for the leading eigenvalue; the matrix is PSD.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m).normalized();
  double eig = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd next = second_moment * v;
    const double norm = next.norm();
    if (norm == 0.0) {
      eig = 0.0;
      break;
    }
    next /= norm;
    const double estimate = next.dot(second_moment * next);
    const bool settled = std::abs(estimate - eig) <= 1e-8 * std::max(1.0, std::abs(estimate));
    eig = estimate;
    v = next;
    if (settled && it > 2) break;
  }

  SmoothnessConstants c;
  c.lambda = clients[0]->reg();
  c.L = c.lambda + eig / 4.0;
  return c;
}

Objective make_logistic_objective(const Dataset& data, const Partition& part,
                                  double reg) {
  const Eigen::MatrixXd x = data.dense();
  const Eigen::VectorXd y = data.labels();

  std::vector<std::shared_ptr<const LogisticLoss>> logits;
  std::vector<std::shared_ptr<const ClientLoss>> clients;
  std::vector<double> sizes;
  for (const auto& shard : part.assignments) {
    Eigen::MatrixXd xs(shard.size(), data.dim);
    Eigen::VectorXd ys(shard.size());
    for (std::size_t i = 0; i < shard.size(); ++i) {
      xs.row(i) = x.row(shard[i]);
      ys[i] = y[shard[i]];
    }
    auto loss = std::make_shared<LogisticLoss>(std::move(xs), std::move(ys), reg);
    logits.push_back(loss);
    clients.push_back(loss);
    sizes.push_back(static_cast<double>(shard.size()));
  }
  const SmoothnessConstants constants = logistic_constants(logits, sizes);
  return Objective(std::move(clients), std::move(sizes), constants);
}

double classification_accuracy(const Dataset& data, const Eigen::VectorXd& theta) {
  if (data.size() == 0) return 0.0;
  int correct = 0;
  for (const auto& s : data.samples) {
    double margin = 0.0;
    for (const auto& [idx, val] : s.features) margin += val * theta[idx];
    const double pred = margin >= 0 ? 1.0 : -1.0;
    if (pred == s.label) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

}  // namespace gpfl
