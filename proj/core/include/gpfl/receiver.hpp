#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gpfl {

/// Outer-iteration state of the penalized DC program over Hermitian PSD
/// matrices C with constraints Tr(C h_k h_k^H) >= |D_k|^2.
struct DcState {
  Eigen::MatrixXcd C;
  double zeta = 10.0;
  int iter = 0;
  double objective = 0.0;  // penalized objective at C
};

struct DcOptions {
  double zeta = 10.0;
  int max_outer = 60;
  int max_inner = 400;
  double tol = 1e-7;            // outer stationarity on |C_next - C|
  double penalty_scale = 50.0;  // constraint penalty = scale * (1 + zeta);
                                // leaves ~1/(2*scale) soft violation that the
                                // extraction rescale removes exactly
  double rank1_target = 1e-4;   // required (Tr - |C|_2)/Tr at termination
};

struct ReceiverDesign {
  Eigen::VectorXcd c;
  double objective = 0.0;       // max_k |D_k|^2 |c|^2 / |c^H h_k|^2
  double rank1_residual = 0.0;
  bool converged = true;
  int outer_iterations = 0;
  /// Penalized objective trace, one (zeta, value) pair per outer
  /// iteration; monotone non-increasing within a fixed zeta.
  std::vector<std::pair<double, double>> history;
};

/// max_k |D_k|^2 |c|^2 / |c^H h_k|^2; the variance proxy the receiver
/// minimizes (scale-invariant in c).
double minmax_objective(const Eigen::VectorXcd& c, const Eigen::MatrixXcd& h_eff,
                        const std::vector<double>& sizes);

/// Matched-filter baseline: sum of unit-norm effective channels.
Eigen::VectorXcd mrc_receiver(const Eigen::MatrixXcd& h_eff,
                              const std::vector<double>& sizes);

/// One DC step: linearize -|C|_2 at state.C and solve the convex
/// subproblem by projected gradient on the PSD cone with quadratic
/// constraint penalties. Returns the next iterate.
Eigen::MatrixXcd dc_subproblem(const DcState& state, const Eigen::MatrixXcd& h_eff,
                               const std::vector<double>& sizes,
                               const DcOptions& options = {});

/// Full min-max receive-beamforming design. Never returns an objective
/// worse than the MRC baseline; the returned c satisfies
/// |c^H h_k|^2 >= |D_k|^2 for all k after rescaling.
ReceiverDesign design_receiver(const Eigen::MatrixXcd& h_eff,
                               const std::vector<double>& sizes,
                               const DcOptions& options = {});

}  // namespace gpfl
