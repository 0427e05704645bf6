#include "gpfl/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gpfl/rng.hpp"

namespace gpfl {

Eigen::MatrixXd Dataset::dense() const {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(size(), dim);
  for (int i = 0; i < size(); ++i) {
    for (const auto& [idx, val] : samples[i].features) x(i, idx) = val;
  }
  return x;
}

Eigen::VectorXd Dataset::labels() const {
  Eigen::VectorXd y(size());
  for (int i = 0; i < size(); ++i) y[i] = samples[i].label;
  return y;
}

namespace {

double parse_label(const std::string& tok, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line_no, "bad label '" + tok + "'");
  }
  if (pos != tok.size()) throw ParseError(line_no, "bad label '" + tok + "'");
  if (v == 0.0) return -1.0;  // {0,1} convention
  if (v == 1.0 || v == -1.0) return v;
  throw ParseError(line_no, "unsupported label " + tok + " (want -1/+1 or 0/1)");
}

}  // namespace

Dataset parse_libsvm(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    Sample s;
    s.label = parse_label(tok, line_no);

    int prev_idx = 0;  // disk indices are 1-based
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError(line_no, "expected idx:val, got '" + tok + "'");
      int idx = 0;
      double val = 0.0;
      try {
        std::size_t p = 0;
        idx = std::stoi(tok.substr(0, colon), &p);
        if (p != colon) throw std::invalid_argument("idx");
        val = std::stod(tok.substr(colon + 1), &p);
        if (p != tok.size() - colon - 1) throw std::invalid_argument("val");
      } catch (const std::exception&) {
        throw ParseError(line_no, "malformed feature '" + tok + "'");
      }
      if (idx <= prev_idx)
        throw ParseError(line_no, "feature indices not strictly increasing");
      prev_idx = idx;
      s.features.emplace_back(idx - 1, val);
      data.dim = std::max(data.dim, idx);
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

Dataset parse_libsvm_text(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

Dataset load_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_libsvm(in);
}

std::string to_libsvm(const Sample& s) {
  std::ostringstream out;
  out << (s.label > 0 ? "+1" : "-1");
  out.precision(17);
  for (const auto& [idx, val] : s.features) out << ' ' << idx + 1 << ':' << val;
  return out.str();
}

Dataset synth_logistic(int dim, int count, double sep, std::uint64_t seed,
                       Eigen::VectorXd* planted) {
  if (dim < 1) throw std::invalid_argument("synth_logistic: dim must be >= 1");
  if (count < 2) throw std::invalid_argument("synth_logistic: count must be >= 2");

  rng::Stream plant_stream(rng::mix(seed, 0x706c616eULL));
  Eigen::VectorXd w(dim);
  for (int j = 0; j < dim; ++j) w[j] = plant_stream.normal();
  const double norm = w.norm();
  if (norm > 0) w /= norm;
  if (planted) *planted = w;

  Dataset data;
  data.dim = dim;
  data.samples.reserve(count);
  rng::Stream feature_stream(rng::mix(seed, 0x64617461ULL));
  rng::Stream label_stream(rng::mix(seed, 0x6c61626cULL));
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.features.reserve(dim);
    double margin = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double v = feature_stream.normal();
      s.features.emplace_back(j, v);
      margin += v * w[j];
    }
    const double p_pos = 1.0 / (1.0 + std::exp(-sep * margin));
    s.label = label_stream.uniform() < p_pos ? 1.0 : -1.0;
    data.samples.push_back(std::move(s));
  }
  return data;
}

void scale_max_abs(Dataset& data) {
  Eigen::VectorXd max_abs = Eigen::VectorXd::Zero(data.dim);
  for (const auto& s : data.samples)
    for (const auto& [idx, val] : s.features)
      max_abs[idx] = std::max(max_abs[idx], std::abs(val));
  for (auto& s : data.samples)
    for (auto& [idx, val] : s.features)
      if (max_abs[idx] > 0) val /= max_abs[idx];
}

namespace {

Partition partition_iid(int n, int clients, rng::Stream& stream) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with the deterministic stream.
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(stream.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  Partition part;
  part.scheme = PartitionScheme::IidUniform;
  part.assignments.resize(clients);
  for (int i = 0; i < n; ++i) part.assignments[i % clients].push_back(order[i]);
  return part;
}

Partition partition_dirichlet(const Dataset& data, int clients, double beta,
                              rng::Stream& stream) {
  Partition part;
  part.scheme = PartitionScheme::Dirichlet;
  part.assignments.resize(clients);

  // Split each label class by a Dirichlet(beta) draw over clients.
  for (const double cls : {-1.0, 1.0}) {
    std::vector<int> members;
    for (int i = 0; i < data.size(); ++i)
      if (data.samples[i].label == cls) members.push_back(i);
    if (members.empty()) continue;

    for (int i = static_cast<int>(members.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(stream.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(members[i], members[j]);
    }
    Eigen::VectorXd props(clients);
    for (int k = 0; k < clients; ++k) props[k] = stream.gamma(beta);
    props /= props.sum();

    // Largest-remainder apportionment of |members| by the drawn proportions.
    const int total = static_cast<int>(members.size());
    std::vector<int> quota(clients);
    std::vector<std::pair<double, int>> rem(clients);
    int assigned = 0;
    for (int k = 0; k < clients; ++k) {
      const double exact = props[k] * total;
      quota[k] = static_cast<int>(std::floor(exact));
      rem[k] = {exact - quota[k], k};
      assigned += quota[k];
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int i = 0; i < total - assigned; ++i) quota[rem[i].second] += 1;

    int cursor = 0;
    for (int k = 0; k < clients; ++k)
      for (int c = 0; c < quota[k]; ++c)
        part.assignments[k].push_back(members[cursor++]);
  }

  // Empty-client repair: local gradients are undefined on an empty shard.
  for (int k = 0; k < clients; ++k) {
    if (!part.assignments[k].empty()) continue;
    int largest = 0;
    for (int j = 1; j < clients; ++j)
      if (part.assignments[j].size() > part.assignments[largest].size())
        largest = j;
    part.assignments[k].push_back(part.assignments[largest].back());
    part.assignments[largest].pop_back();
  }
  for (auto& shard : part.assignments) std::sort(shard.begin(), shard.end());
  return part;
}

}  // namespace

Partition partition(const Dataset& data, int clients, PartitionScheme scheme,
                    double beta, std::uint64_t seed) {
  const int n = data.size();
  if (clients < 1) throw std::invalid_argument("partition: need at least one client");
  if (clients > n)
    throw std::invalid_argument("partition: more clients than samples");
  rng::Stream stream(rng::mix(seed, 0x70617274ULL));
  if (scheme == PartitionScheme::IidUniform) return partition_iid(n, clients, stream);
  return partition_dirichlet(data, clients, beta, stream);
}

}  // namespace gpfl
