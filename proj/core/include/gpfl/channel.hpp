#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gpfl {

/// One coherence block: per-client channel vectors (columns), per-client
/// noise standard deviations and the antenna count.
struct ChannelRealization {
  Eigen::MatrixXcd h;      // antennas x clients
  Eigen::VectorXd sigma;   // per-client noise std, fixed for the whole run
  int antennas = 0;

  int clients() const { return static_cast<int>(h.cols()); }
  /// Client noise sources add up at the receiver.
  double total_noise_var() const { return sigma.squaredNorm(); }
};

struct ReceiverWeights {
  Eigen::VectorXcd c;
  double alpha = 0.0;  // zero-forcing power factor
};

struct NoisyAggregate {
  Eigen::VectorXd g_tilde;        // real gradient estimate fed to the optimizer
  Eigen::VectorXd noise_used;     // g_tilde minus the weighted true aggregate
  Eigen::VectorXcd noise_post;    // complex post-processed noise, diagnostics
};

struct ZeroGradientError : std::runtime_error {
  ZeroGradientError() : std::runtime_error("client gradient is zero (converged)") {}
};

struct DegenerateReceiverError : std::runtime_error {
  explicit DegenerateReceiverError(int client)
      : std::runtime_error("receiver orthogonal to effective channel of client " +
                           std::to_string(client)) {}
};

/// s = g / |g|_2. Throws ZeroGradientError on a vanishing gradient.
Eigen::VectorXd normalize_gradient(const Eigen::VectorXd& g);

/// Effective channels h_k / |g_k|, one column per client.
Eigen::MatrixXcd effective_channels(const Eigen::MatrixXcd& h,
                                    const std::vector<Eigen::VectorXd>& gradients);

/// alpha = P0 * d * min_k |c^H h_eff_k|^2 / |D_k|^2.
double zf_alpha(const Eigen::VectorXcd& c, const Eigen::MatrixXcd& h_eff,
                const std::vector<double>& sizes, double p0, int dim);

/// b_k = sqrt(alpha) |D_k| (h_eff_k^H c) / |c^H h_eff_k|^2.
std::complex<double> scale_factor(double alpha, double size_k,
                                  const Eigen::VectorXcd& h_eff_k,
                                  const Eigen::VectorXcd& c);

/// The 200-value noise grid {0.005, 0.010, ..., 1.0}; one std per client,
/// sampled with replacement.
Eigen::VectorXd sample_noise_grid(int clients, std::uint64_t seed);

/// Rayleigh i.i.d. fading: h entries are CN(0,1).
ChannelRealization draw_channels(int clients, int antennas,
                                 const Eigen::VectorXd& sigma, std::uint64_t seed);

/// Simulate one uplink round: normalize, power-scale, superimpose with
/// AWGN, post-process with the receiver. Noise draws are keyed by
/// (seed, symbol), so the result does not depend on evaluation order.
/// total_size is the normalizer |D| of the weighted aggregate.
NoisyAggregate transmit_round(const std::vector<Eigen::VectorXd>& gradients,
                              const ChannelRealization& realization,
                              const ReceiverWeights& weights,
                              const std::vector<double>& sizes, double total_size,
                              std::uint64_t seed);

}  // namespace gpfl
