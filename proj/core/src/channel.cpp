#include "gpfl/channel.hpp"

#include <cmath>

#include "gpfl/rng.hpp"

namespace gpfl {

Eigen::VectorXd normalize_gradient(const Eigen::VectorXd& g) {
  const double norm = g.norm();
  if (norm == 0.0) throw ZeroGradientError();
  return g / norm;
}

Eigen::MatrixXcd effective_channels(const Eigen::MatrixXcd& h,
                                    const std::vector<Eigen::VectorXd>& gradients) {
  if (static_cast<int>(gradients.size()) != h.cols())
    throw std::invalid_argument("effective_channels: client count mismatch");
  Eigen::MatrixXcd h_eff = h;
  for (int k = 0; k < h.cols(); ++k) {
    const double norm = gradients[k].norm();
    if (norm == 0.0) throw ZeroGradientError();
    h_eff.col(k) /= norm;
  }
  return h_eff;
}

double zf_alpha(const Eigen::VectorXcd& c, const Eigen::MatrixXcd& h_eff,
                const std::vector<double>& sizes, double p0, int dim) {
  if (static_cast<int>(sizes.size()) != h_eff.cols())
    throw std::invalid_argument("zf_alpha: client count mismatch");
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < h_eff.cols(); ++k) {
    const double proj = std::norm(c.dot(h_eff.col(k)));  // |c^H h|^2
    if (proj == 0.0) throw DegenerateReceiverError(k);
    min_ratio = std::min(min_ratio, proj / (sizes[k] * sizes[k]));
  }
  return p0 * dim * min_ratio;
}

std::complex<double> scale_factor(double alpha, double size_k,
                                  const Eigen::VectorXcd& h_eff_k,
                                  const Eigen::VectorXcd& c) {
  const std::complex<double> proj = c.dot(h_eff_k);  // c^H h
  const double mag2 = std::norm(proj);
  if (mag2 == 0.0) throw DegenerateReceiverError(-1);
  return std::sqrt(alpha) * size_k * std::conj(proj) / mag2;
}

Eigen::VectorXd sample_noise_grid(int clients, std::uint64_t seed) {
  rng::Stream stream(rng::mix(seed, 0x73696772ULL));
  Eigen::VectorXd sigma(clients);
  for (int k = 0; k < clients; ++k) {
    const auto idx = stream.below(200);  // grid 0.005 * {1..200}
    sigma[k] = 0.005 * static_cast<double>(idx + 1);
  }
  return sigma;
}

ChannelRealization draw_channels(int clients, int antennas,
                                 const Eigen::VectorXd& sigma, std::uint64_t seed) {
  if (sigma.size() != clients)
    throw std::invalid_argument("draw_channels: sigma/client count mismatch");
  ChannelRealization real;
  real.antennas = antennas;
  real.sigma = sigma;
  real.h.resize(antennas, clients);
  rng::Stream stream(rng::mix(seed, 0x6368616eULL));
  for (int k = 0; k < clients; ++k)
    for (int a = 0; a < antennas; ++a) real.h(a, k) = stream.cnormal(1.0);
  return real;
}

NoisyAggregate transmit_round(const std::vector<Eigen::VectorXd>& gradients,
                              const ChannelRealization& realization,
                              const ReceiverWeights& weights,
                              const std::vector<double>& sizes, double total_size,
                              std::uint64_t seed) {
  const int clients = realization.clients();
  if (static_cast<int>(gradients.size()) != clients ||
      static_cast<int>(sizes.size()) != clients)
    throw std::invalid_argument("transmit_round: client count mismatch");
  if (clients == 0) throw std::invalid_argument("transmit_round: no clients");
  const int dim = static_cast<int>(gradients[0].size());

  const Eigen::MatrixXcd h_eff = effective_channels(realization.h, gradients);

  // Per-client transmit scaling; power feasibility holds by construction.
  Eigen::VectorXcd b(clients);
  for (int k = 0; k < clients; ++k)
    b[k] = scale_factor(weights.alpha, sizes[k], h_eff.col(k), weights.c);

  Eigen::VectorXd true_aggregate = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < clients; ++k) true_aggregate += sizes[k] * gradients[k];
  true_aggregate /= total_size;

  const double noise_var = realization.total_noise_var();
  const double sqrt_alpha = std::sqrt(weights.alpha);

  NoisyAggregate out;
  out.g_tilde.resize(dim);
  out.noise_used.resize(dim);
  out.noise_post.resize(dim);

  // Precompute c^H h_eff_k b_k; in the noiseless case each equals
  // sqrt(alpha) |D_k| exactly, which is the zero-forcing identity.
  Eigen::VectorXcd gains(clients);
  for (int k = 0; k < clients; ++k) gains[k] = weights.c.dot(h_eff.col(k)) * b[k];

  for (int j = 0; j < dim; ++j) {
    std::complex<double> received = 0.0;
    for (int k = 0; k < clients; ++k) received += gains[k] * gradients[k][j];
    std::complex<double> noise = 0.0;
    if (noise_var > 0.0) {
      rng::Stream stream(rng::mix(seed, 0x73796d62ULL, static_cast<std::uint64_t>(j)));
      Eigen::VectorXcd n(realization.antennas);
      for (int a = 0; a < realization.antennas; ++a) n[a] = stream.cnormal(noise_var);
      noise = weights.c.dot(n);
    }
    const std::complex<double> post = (received + noise) / (sqrt_alpha * total_size);
    out.noise_post[j] = noise / (sqrt_alpha * total_size);
    out.g_tilde[j] = post.real();
    out.noise_used[j] = out.g_tilde[j] - true_aggregate[j];
  }
  return out;
}

}  // namespace gpfl
