#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpfl/dataio.hpp"
#include "gpfl/engine.hpp"

namespace gpfl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full experiment description. Parsed from a sectioned key=value file
/// with strict unknown-key rejection; serializes back canonically so a
/// run can always be replayed from its config.resolved.
struct RunConfig {
  // [dataset]
  std::string dataset_kind = "synthetic";  // synthetic | libsvm
  std::string dataset_path;
  int synth_dim = 30;
  int synth_count = 2000;
  double synth_sep = 5.0;
  std::uint64_t data_seed = 1;
  std::string partition_scheme = "iid";  // iid | dirichlet
  double dirichlet_beta = 0.5;
  bool max_abs_scale = false;
  double reg = 0.1;

  // [channel]
  int clients = 20;
  int antennas = 5;
  double p0 = 1.0;
  double sigma_scale = 1.0;

  // [run]
  int rounds = 50;
  std::vector<std::string> methods = {"gpfl"};
  std::vector<std::uint64_t> seeds = {1};
  int window = 20;
  std::string tau = "median";  // "median" or a positive number
  double jitter = 1e-6;
  double zeta = 10.0;
  double rho = 0.0;
  std::string scheduler = "gibbs";  // gibbs | uniform
  double participation = 1.0;
  int gibbs_sweeps = 40;
  std::string posterior_sign = "paper";  // paper | standard
  double fedavg_eta = 0.1;
  double c_damp = 1e-8;
  bool warmup = true;
  bool probe_delta = true;
  bool record_walltime = false;

  // [analysis]
  bool bounds = true;
  std::string delta = "probe";  // "probe" or a number

  // [output]
  std::string output_dir = "out";

  /// Throws ConfigError when any invariant fails.
  void validate() const;

  /// Engine view of this configuration.
  EngineConfig engine() const;

  /// Canonical serialization; parsing it back yields an equal config.
  std::string resolved() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Apply one sweep value to a copy of the base config. Throws ConfigError
/// for unknown parameter names or unparsable values.
RunConfig apply_sweep_value(const RunConfig& base, const std::string& param,
                            const std::string& value);

}  // namespace gpfl
