#include "gpfl/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gpfl {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" +
                      value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset.kind", [](RunConfig& c, const std::string&, const std::string& v) { c.dataset_kind = v; }},
      {"dataset.path", [](RunConfig& c, const std::string&, const std::string& v) { c.dataset_path = v; }},
      {"dataset.m", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_dim = to_int(k, v); }},
      {"dataset.n", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_count = to_int(k, v); }},
      {"dataset.sep", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_sep = to_double(k, v); }},
      {"dataset.data_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.data_seed = to_u64(k, v); }},
      {"dataset.partition", [](RunConfig& c, const std::string&, const std::string& v) { c.partition_scheme = v; }},
      {"dataset.beta", [](RunConfig& c, const std::string& k, const std::string& v) { c.dirichlet_beta = to_double(k, v); }},
      {"dataset.max_abs_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.max_abs_scale = to_bool(k, v); }},
      {"dataset.reg", [](RunConfig& c, const std::string& k, const std::string& v) { c.reg = to_double(k, v); }},
      {"channel.clients", [](RunConfig& c, const std::string& k, const std::string& v) { c.clients = to_int(k, v); }},
      {"channel.antennas", [](RunConfig& c, const std::string& k, const std::string& v) { c.antennas = to_int(k, v); }},
      {"channel.p0", [](RunConfig& c, const std::string& k, const std::string& v) { c.p0 = to_double(k, v); }},
      {"channel.sigma_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.sigma_scale = to_double(k, v); }},
      {"run.rounds", [](RunConfig& c, const std::string& k, const std::string& v) { c.rounds = to_int(k, v); }},
      {"run.methods", [](RunConfig& c, const std::string&, const std::string& v) { c.methods = split_list(v); }},
      {"run.seeds",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seeds.clear();
         for (const auto& item : split_list(v)) c.seeds.push_back(to_u64(k, item));
       }},
      {"run.window", [](RunConfig& c, const std::string& k, const std::string& v) { c.window = to_int(k, v); }},
      {"run.tau", [](RunConfig& c, const std::string&, const std::string& v) { c.tau = v; }},
      {"run.jitter", [](RunConfig& c, const std::string& k, const std::string& v) { c.jitter = to_double(k, v); }},
      {"run.zeta", [](RunConfig& c, const std::string& k, const std::string& v) { c.zeta = to_double(k, v); }},
      {"run.rho", [](RunConfig& c, const std::string& k, const std::string& v) { c.rho = to_double(k, v); }},
      {"run.scheduler", [](RunConfig& c, const std::string&, const std::string& v) { c.scheduler = v; }},
      {"run.participation", [](RunConfig& c, const std::string& k, const std::string& v) { c.participation = to_double(k, v); }},
      {"run.gibbs_sweeps", [](RunConfig& c, const std::string& k, const std::string& v) { c.gibbs_sweeps = to_int(k, v); }},
      {"run.posterior_sign", [](RunConfig& c, const std::string&, const std::string& v) { c.posterior_sign = v; }},
      {"run.fedavg_eta", [](RunConfig& c, const std::string& k, const std::string& v) { c.fedavg_eta = to_double(k, v); }},
      {"run.c_damp", [](RunConfig& c, const std::string& k, const std::string& v) { c.c_damp = to_double(k, v); }},
      {"run.warmup", [](RunConfig& c, const std::string& k, const std::string& v) { c.warmup = to_bool(k, v); }},
      {"run.probe_delta", [](RunConfig& c, const std::string& k, const std::string& v) { c.probe_delta = to_bool(k, v); }},
      {"run.record_walltime", [](RunConfig& c, const std::string& k, const std::string& v) { c.record_walltime = to_bool(k, v); }},
      {"analysis.bounds", [](RunConfig& c, const std::string& k, const std::string& v) { c.bounds = to_bool(k, v); }},
      {"analysis.delta", [](RunConfig& c, const std::string&, const std::string& v) { c.delta = v; }},
      {"output.dir", [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset_kind != "synthetic" && dataset_kind != "libsvm")
    throw ConfigError("dataset.kind must be 'synthetic' or 'libsvm'");
  if (dataset_kind == "libsvm" && dataset_path.empty())
    throw ConfigError("dataset.path required for dataset.kind=libsvm");
  if (dataset_kind == "synthetic" && (synth_dim < 1 || synth_count < 2))
    throw ConfigError("dataset.m must be >= 1 and dataset.n >= 2");
  if (partition_scheme != "iid" && partition_scheme != "dirichlet")
    throw ConfigError("dataset.partition must be 'iid' or 'dirichlet'");
  if (reg <= 0) throw ConfigError("dataset.reg must be > 0");
  if (clients < 1) throw ConfigError("channel.clients must be >= 1");
  if (antennas < 1) throw ConfigError("channel.antennas must be >= 1");
  if (p0 <= 0) throw ConfigError("channel.p0 must be > 0");
  if (sigma_scale < 0) throw ConfigError("channel.sigma_scale must be >= 0");
  if (rounds < 0) throw ConfigError("run.rounds must be >= 0");
  if (methods.empty()) throw ConfigError("run.methods must be non-empty");
  for (const auto& m : methods)
    if (!parse_method(m)) throw ConfigError("unknown method '" + m + "'");
  if (seeds.empty()) throw ConfigError("run.seeds must be non-empty");
  if (window < 0) throw ConfigError("run.window must be >= 0");
  if (tau != "median" && to_double("run.tau", tau) <= 0)
    throw ConfigError("run.tau must be 'median' or a positive number");
  if (jitter <= 0) throw ConfigError("run.jitter must be > 0");
  if (scheduler != "gibbs" && scheduler != "uniform")
    throw ConfigError("run.scheduler must be 'gibbs' or 'uniform'");
  if (participation <= 0 || participation > 1)
    throw ConfigError("run.participation must be in (0, 1]");
  if (gibbs_sweeps < 1) throw ConfigError("run.gibbs_sweeps must be >= 1");
  if (posterior_sign != "paper" && posterior_sign != "standard")
    throw ConfigError("run.posterior_sign must be 'paper' or 'standard'");
  if (fedavg_eta <= 0) throw ConfigError("run.fedavg_eta must be > 0");
  if (delta != "probe") (void)to_double("analysis.delta", delta);
  if (output_dir.empty()) throw ConfigError("output.dir must be non-empty");
}

EngineConfig RunConfig::engine() const {
  EngineConfig e;
  e.antennas = antennas;
  e.p0 = p0;
  e.window = window;
  e.tau = tau == "median" ? 0.0 : to_double("run.tau", tau);
  e.jitter = jitter;
  e.dc_zeta = zeta;
  e.rho = rho;
  e.gibbs_sweeps = gibbs_sweeps;
  e.scheduler = scheduler == "gibbs" ? SchedulerKind::Gibbs : SchedulerKind::Uniform;
  e.participation = participation;
  e.posterior_sign = posterior_sign == "paper" ? PosteriorSign::Paper
                                               : PosteriorSign::Standard;
  e.fedavg_eta = fedavg_eta;
  e.c_damp = c_damp;
  e.warmup = warmup;
  e.sigma_scale = sigma_scale;
  e.probe_delta = probe_delta;
  e.record_walltime = record_walltime;
  return e;
}

std::string RunConfig::resolved() const {
  std::ostringstream out;
  const auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  out << "[dataset]\n";
  out << "kind = " << dataset_kind << "\n";
  out << "path = " << dataset_path << "\n";
  out << "m = " << synth_dim << "\n";
  out << "n = " << synth_count << "\n";
  out << "sep = " << num(synth_sep) << "\n";
  out << "data_seed = " << data_seed << "\n";
  out << "partition = " << partition_scheme << "\n";
  out << "beta = " << num(dirichlet_beta) << "\n";
  out << "max_abs_scale = " << (max_abs_scale ? "true" : "false") << "\n";
  out << "reg = " << num(reg) << "\n";
  out << "\n[channel]\n";
  out << "clients = " << clients << "\n";
  out << "antennas = " << antennas << "\n";
  out << "p0 = " << num(p0) << "\n";
  out << "sigma_scale = " << num(sigma_scale) << "\n";
  out << "\n[run]\n";
  out << "rounds = " << rounds << "\n";
  out << "methods = ";
  for (std::size_t i = 0; i < methods.size(); ++i)
    out << (i ? "," : "") << methods[i];
  out << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
  out << "\n";
  out << "window = " << window << "\n";
  out << "tau = " << tau << "\n";
  out << "jitter = " << num(jitter) << "\n";
  out << "zeta = " << num(zeta) << "\n";
  out << "rho = " << num(rho) << "\n";
  out << "scheduler = " << scheduler << "\n";
  out << "participation = " << num(participation) << "\n";
  out << "gibbs_sweeps = " << gibbs_sweeps << "\n";
  out << "posterior_sign = " << posterior_sign << "\n";
  out << "fedavg_eta = " << num(fedavg_eta) << "\n";
  out << "c_damp = " << num(c_damp) << "\n";
  out << "warmup = " << (warmup ? "true" : "false") << "\n";
  out << "probe_delta = " << (probe_delta ? "true" : "false") << "\n";
  out << "record_walltime = " << (record_walltime ? "true" : "false") << "\n";
  out << "\n[analysis]\n";
  out << "bounds = " << (bounds ? "true" : "false") << "\n";
  out << "delta = " << delta << "\n";
  out << "\n[output]\n";
  out << "dir = " << output_dir << "\n";
  return out.str();
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end())
      throw ConfigError("unknown config key '" + full + "'");
    it->second(config, full, value);
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

RunConfig apply_sweep_value(const RunConfig& base, const std::string& param,
                            const std::string& value) {
  static const std::map<std::string, std::string> aliases = {
      {"r", "run.window"},           {"window", "run.window"},
      {"sigma_scale", "channel.sigma_scale"},
      {"tau", "run.tau"},            {"jitter", "run.jitter"},
      {"zeta", "run.zeta"},          {"rho", "run.rho"},
      {"clients", "channel.clients"},{"antennas", "channel.antennas"},
      {"rounds", "run.rounds"},      {"p0", "channel.p0"},
      {"reg", "dataset.reg"},        {"fedavg_eta", "run.fedavg_eta"},
      {"participation", "run.participation"},
      {"sep", "dataset.sep"},        {"m", "dataset.m"},
      {"n", "dataset.n"},            {"beta", "dataset.beta"},
      {"gibbs_sweeps", "run.gibbs_sweeps"},
  };
  const auto alias = aliases.find(param);
  const std::string full = alias != aliases.end() ? alias->second : param;
  const auto it = setters().find(full);
  if (it == setters().end())
    throw ConfigError("unknown sweep parameter '" + param + "'");
  RunConfig next = base;
  it->second(next, full, value);
  return next;
}

}  // namespace gpfl
