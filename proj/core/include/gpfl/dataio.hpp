#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gpfl {

/// One labeled sample. Feature indices are 0-based in memory (1-based on
/// disk), strictly increasing, and the label is -1 or +1.
struct Sample {
  double label = 0.0;
  std::vector<std::pair<int, double>> features;

  bool operator==(const Sample&) const = default;
};

struct ParseError : std::runtime_error {
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

struct Dataset {
  std::vector<Sample> samples;
  int dim = 0;

  int size() const { return static_cast<int>(samples.size()); }

  /// Dense n x dim feature matrix.
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd labels() const;
};

/// Parse LIBSVM text: `<label> <idx>:<val> ...` per line, 1-based indices.
/// Labels {0,1} are remapped to {-1,+1}. Accepts \n and \r\n endings.
Dataset parse_libsvm(std::istream& in);
Dataset parse_libsvm_text(const std::string& text);
Dataset load_libsvm_file(const std::string& path);

/// Serialize one sample back to LIBSVM text (no trailing newline).
std::string to_libsvm(const Sample& s);

/// Synthetic logistic data: features ~ N(0, I), labels drawn from the
/// logistic model with a planted unit-norm weight vector scaled by `sep`.
/// The planted direction is written to *planted when given.
Dataset synth_logistic(int dim, int count, double sep, std::uint64_t seed,
                       Eigen::VectorXd* planted = nullptr);

/// In-place per-feature max-abs scaling (optional preprocessing).
void scale_max_abs(Dataset& data);

enum class PartitionScheme { IidUniform, Dirichlet };

struct Partition {
  std::vector<std::vector<int>> assignments;  // sample indices per client
  PartitionScheme scheme = PartitionScheme::IidUniform;
};

/// Split sample indices across `clients`. IID gives sizes differing by at
/// most one; Dirichlet(beta) draws per-client label proportions. Every
/// client ends up non-empty (one sample is moved from the largest client
/// if a Dirichlet draw leaves somebody with nothing).
Partition partition(const Dataset& data, int clients, PartitionScheme scheme,
                    double beta, std::uint64_t seed);

}  // namespace gpfl
