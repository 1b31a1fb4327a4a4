#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsdc/model.hpp"

namespace lsdc {

enum class SourceKind { gaussian_chain, gaussian_field, csv };

struct SourceSpec {
  SourceKind kind = SourceKind::gaussian_chain;
  int source_count = 5;
  double rho = 0.95;
  double d0 = 100.0;
  /// Sensor coordinates for gaussian_field.
  std::vector<Eigen::Vector2d> positions;
  Index sample_count = 20000;
  std::uint64_t rng_seed = 1;
  std::string path;
  bool normalize = true;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Sigma_ij = rho^|i-j|.
Eigen::MatrixXd chain_covariance(int source_count, double rho);
/// Sigma_ij = rho^(dist(i,j) / d0).
Eigen::MatrixXd field_covariance(std::span<const Eigen::Vector2d> positions, double rho, double d0);

/// Zero-mean Gaussian samples with the given covariance, x = L z with L the
/// Cholesky factor. Covariances whose smallest eigenvalue is <= 1e-10 are
/// rejected with DataError; a 1e-9 diagonal jitter is tried if the
/// factorization itself fails.
TrainingSet sample_gaussian(const Eigen::MatrixXd& covariance, Index count, std::uint64_t seed);

TrainingSet gen_gaussian_chain(int source_count, double rho, Index count, std::uint64_t seed);
TrainingSet gen_gaussian_field(std::span<const Eigen::Vector2d> positions, double rho, double d0, Index count,
                               std::uint64_t seed);

struct CsvData {
  TrainingSet data;
  std::vector<std::string> columns;  // empty without a header row
  std::size_t dropped_rows = 0;
  /// Standardization applied (zero mean / unit scale when not normalized).
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

/// Comma-separated numeric table, one column per source, optional header.
/// Rows with an empty, NA or NaN cell are dropped and counted. With
/// `normalize`, columns are standardized with the mean and population
/// standard deviation of the first `train_fraction` of the kept rows.
CsvData load_csv(const std::string& path, bool normalize, double train_fraction = 0.5);
CsvData parse_csv(const std::string& text, bool normalize, double train_fraction = 0.5);

struct DataSplit {
  TrainingSet train;
  TrainingSet test;
};

/// First floor(fraction * |T|) rows train, the rest test; with a seed the rows
/// are shuffled first. Both parts must be nonempty.
DataSplit split(const TrainingSet& data, double fraction, std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// Generates (or loads) according to the spec.
TrainingSet make_source(const SourceSpec& spec);

/// Writes samples as CSV with header x0,x1,... at full round-trip precision.
void write_csv(const std::string& path, const TrainingSet& data);

}  // namespace lsdc
