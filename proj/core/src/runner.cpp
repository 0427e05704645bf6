#include "gpfl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gpfl/metrics.hpp"

namespace fs = std::filesystem;

namespace gpfl {

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<BoundBlock> make_bound_blocks(const RunConfig& config,
                                          const Federation& world,
                                          const std::vector<RunResult>& results) {
  std::vector<BoundBlock> blocks;
  if (!config.bounds || world.theta_star.size() == 0) return blocks;

  const Eigen::VectorXd theta0 = world.theta0.size() > 0
                                     ? world.theta0
                                     : Eigen::VectorXd::Zero(world.objective->dim());
  BoundInputs base;
  base.lambda = world.objective->constants().lambda;
  base.L = world.objective->constants().L;
  base.g0_norm = world.objective->gradient(theta0).norm();
  base.init_dist = (theta0 - world.theta_star).norm();

  std::map<std::string, std::vector<const RunResult*>> by_method;
  for (const auto& run : results)
    by_method[method_name(run.method)].push_back(&run);

  for (const auto& [name, runs] : by_method) {
    if (name == "fedavg_air") continue;  // no second-order estimate to bound

    double delta = 0.0;
    if (config.delta == "probe") {
      for (const RunResult* run : runs)
        for (const RoundRecord& rec : run->records)
          if (std::isfinite(rec.delta_probe))
            delta = std::max(delta, rec.delta_probe);
    } else {
      delta = std::stod(config.delta);
    }

    std::vector<std::vector<double>> observed;
    std::vector<std::vector<ChannelTerm>> terms;
    for (const RunResult* run : runs) {
      std::vector<double> dist;
      std::vector<ChannelTerm> ch;
      for (const RoundRecord& rec : run->records) {
        dist.push_back(rec.dist_to_opt);
        if (rec.round == 0) continue;
        ChannelTerm term;
        if (std::isfinite(rec.sigma_total) && std::isfinite(rec.alpha) &&
            rec.sigma_total > 0) {
          term.sigma_n = rec.sigma_total;
          term.c_norm = rec.c_norm;
          term.alpha = rec.alpha;
          term.d_total = rec.d_total;
          term.dim = world.objective->dim();
        }
        ch.push_back(term);
      }
      observed.push_back(std::move(dist));
      terms.push_back(std::move(ch));
    }

    BoundBlock block;
    block.method = name;
    block.delta = delta;
    BoundInputs in = base;
    in.delta = delta;
    block.report = empirical_check(observed, in, terms);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace

std::string resolve_output_dir(const std::string& configured) {
  const char* root = std::getenv("GPFL_OUTPUT_ROOT");
  if (root != nullptr && *root != '\0' && fs::path(configured).is_relative())
    return (fs::path(root) / configured).string();
  return configured;
}

Federation build_federation(const RunConfig& config) {
  Dataset data;
  if (config.dataset_kind == "synthetic") {
    data = synth_logistic(config.synth_dim, config.synth_count, config.synth_sep,
                          config.data_seed);
  } else {
    data = load_libsvm_file(config.dataset_path);
  }
  if (config.max_abs_scale) scale_max_abs(data);
  if (config.clients > data.size())
    throw ConfigError("channel.clients exceeds the dataset size");

  const PartitionScheme scheme = config.partition_scheme == "iid"
                                     ? PartitionScheme::IidUniform
                                     : PartitionScheme::Dirichlet;
  const Partition part =
      partition(data, config.clients, scheme, config.dirichlet_beta,
                config.data_seed);

  Federation world;
  world.objective = std::make_shared<Objective>(
      make_logistic_objective(data, part, config.reg));
  world.theta0 = Eigen::VectorXd::Zero(data.dim);
  world.theta_star = world.objective->optimum();
  world.accuracy = [data](const Eigen::VectorXd& theta) {
    return classification_accuracy(data, theta);
  };
  return world;
}

std::vector<RunResult> execute_runs(const RunConfig& config,
                                    const Federation& world) {
  std::vector<std::string> methods = config.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  const EngineConfig engine = config.engine();
  std::vector<RunResult> results;
  for (const std::string& name : methods) {
    const MethodKind method = *parse_method(name);
    for (const std::uint64_t seed : config.seeds)
      results.push_back(run_experiment(world, method, engine, config.rounds, seed));
  }
  return results;
}

namespace {

int run_into_directory(const RunConfig& config, const fs::path& out_dir) {
  const Federation world = build_federation(config);
  const std::vector<RunResult> results = execute_runs(config, world);

  fs::create_directories(out_dir);
  {
    std::ofstream metrics(out_dir / "metrics.csv", std::ios::binary);
    write_metrics_csv(metrics, results);
  }
  {
    std::ofstream bounds(out_dir / "bounds.csv", std::ios::binary);
    write_bounds_csv(bounds, make_bound_blocks(config, world, results));
  }
  {
    std::ofstream resolved(out_dir / "config.resolved", std::ios::binary);
    resolved << config.resolved();
  }
  return 0;
}

}  // namespace

int run_command(const std::string& config_path) {
  RunConfig config;
  try {
    config = load_config_file(config_path);
    config.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    return run_into_directory(config, resolve_output_dir(config.output_dir));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int sweep_command(const std::string& config_path, const std::string& param,
                  const std::vector<std::string>& values) {
  RunConfig base;
  std::vector<RunConfig> cells;
  try {
    base = load_config_file(config_path);
    base.validate();
    if (values.empty()) throw ConfigError("sweep: empty values list");
    for (const std::string& value : values) {
      RunConfig cell = apply_sweep_value(base, param, value);
      cell.validate();
      cells.push_back(std::move(cell));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const fs::path root = resolve_output_dir(base.output_dir);
    std::ostringstream summary;
    summary << "param,value,method,final_loss_median,final_accuracy_median,"
               "final_dist_median\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      const fs::path cell_dir = root / (param + "=" + values[i]);
      const Federation world = build_federation(cells[i]);
      const std::vector<RunResult> results = execute_runs(cells[i], world);

      fs::create_directories(cell_dir);
      {
        std::ofstream metrics(cell_dir / "metrics.csv", std::ios::binary);
        write_metrics_csv(metrics, results);
      }
      {
        std::ofstream bounds(cell_dir / "bounds.csv", std::ios::binary);
        write_bounds_csv(bounds, make_bound_blocks(cells[i], world, results));
      }
      {
        std::ofstream resolved(cell_dir / "config.resolved", std::ios::binary);
        resolved << cells[i].resolved();
      }

      std::map<std::string, std::vector<const RunResult*>> by_method;
      for (const auto& run : results)
        by_method[method_name(run.method)].push_back(&run);
      for (const auto& [name, runs] : by_method) {
        std::vector<double> loss, acc, dist;
        for (const RunResult* run : runs) {
          const RoundRecord& last = run->records.back();
          loss.push_back(last.loss);
          if (std::isfinite(last.accuracy)) acc.push_back(last.accuracy);
          if (std::isfinite(last.dist_to_opt)) dist.push_back(last.dist_to_opt);
        }
        summary << param << ',' << values[i] << ',' << name << ','
                << format_double(median(std::move(loss))) << ','
                << format_double(median(std::move(acc))) << ','
                << format_double(median(std::move(dist))) << '\n';
      }
    }
    std::ofstream file(root / "summary.csv", std::ios::binary);
    file << summary.str();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gpfl
