#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "gpfl/dataio.hpp"

namespace gpfl {

/// Certified curvature interval of the global loss:
/// lambda * I <= hessian(theta) <= L * I for all theta.
struct SmoothnessConstants {
  double lambda = 0.0;
  double L = 0.0;
};

/// Per-client loss oracle. Implementations must be twice continuously
/// differentiable with exact gradient/Hessian.
class ClientLoss {
 public:
  virtual ~ClientLoss() = default;
  virtual int dim() const = 0;
  virtual double loss(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const = 0;
};

/// L2-regularized logistic regression over a dense local shard:
///   f(theta) = (1/n) sum log(1 + exp(-y_i x_i' theta)) + (reg/2) |theta|^2
class LogisticLoss final : public ClientLoss {
 public:
  LogisticLoss(Eigen::MatrixXd features, Eigen::VectorXd labels, double reg);

  int dim() const override { return static_cast<int>(x_.cols()); }
  double loss(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const override;

  double reg() const { return reg_; }
  int count() const { return static_cast<int>(x_.rows()); }
  const Eigen::MatrixXd& features() const { return x_; }
  const Eigen::VectorXd& labels() const { return y_; }

 private:
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  double reg_;
};

/// Quadratic client loss f(theta) = 0.5 theta'A theta - b'theta + c,
/// used by the convergence-bound benchmarks. A must be symmetric PSD.
class QuadraticLoss final : public ClientLoss {
 public:
  QuadraticLoss(Eigen::MatrixXd a, Eigen::VectorXd b, double c = 0.0);

  int dim() const override { return static_cast<int>(a_.rows()); }
  double loss(const Eigen::VectorXd& theta) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd&) const override { return a_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  double c_;
};

/// Weighted federation of client losses with weights |D_k|/|D|.
class Objective {
 public:
  Objective(std::vector<std::shared_ptr<const ClientLoss>> clients,
            std::vector<double> sizes, SmoothnessConstants constants);

  int dim() const { return clients_.empty() ? 0 : clients_[0]->dim(); }
  int client_count() const { return static_cast<int>(clients_.size()); }
  const ClientLoss& client(int k) const { return *clients_[k]; }
  double size(int k) const { return sizes_[k]; }
  double total_size() const { return total_size_; }
  double weight(int k) const { return sizes_[k] / total_size_; }
  const SmoothnessConstants& constants() const { return constants_; }

  double loss(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;

  /// Unique minimizer, found by full-batch Newton to |grad| <= tol.
  Eigen::VectorXd optimum(double tol = 1e-10, int max_iter = 200) const;

 private:
  std::vector<std::shared_ptr<const ClientLoss>> clients_;
  std::vector<double> sizes_;
  double total_size_;
  SmoothnessConstants constants_;
};

/// lambda = reg and L = reg + max-eig(weighted sample second moment)/4,
/// the analytic curvature bound of the logistic link. The leading
/// eigenvalue comes from power iteration to relative tolerance 1e-8.
SmoothnessConstants logistic_constants(
    const std::vector<std::shared_ptr<const LogisticLoss>>& clients,
    const std::vector<double>& sizes);

/// Build the federation for a partitioned dataset.
Objective make_logistic_objective(const Dataset& data, const Partition& part,
                                  double reg);

/// Classification accuracy of sign(x theta) against the labels.
double classification_accuracy(const Dataset& data, const Eigen::VectorXd& theta);

}  // namespace gpfl
