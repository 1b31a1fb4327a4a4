#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsdc/bits.hpp"

namespace lsdc {

using Index = Eigen::Index;

/// Training (or test) samples: one row per observation, column i is source X_i.
class TrainingSet {
 public:
  TrainingSet() = default;
  /// Throws DataError on empty input or non-finite entries.
  explicit TrainingSet(Eigen::MatrixXd samples);

  Index sample_count() const { return samples_.rows(); }
  int source_count() const { return static_cast<int>(samples_.cols()); }
  const Eigen::MatrixXd& samples() const { return samples_; }
  auto source(int i) const { return samples_.col(i); }

 private:
  Eigen::MatrixXd samples_;
};

/// Scalar partition of the real line into region_count() intervals.
/// Region j is [boundaries[j-1], boundaries[j]) with open ends at +-infinity.
struct HighRateQuantizer {
  std::vector<double> boundaries;
  std::vector<double> codewords;

  int region_count() const { return static_cast<int>(codewords.size()); }
  /// Throws UsageError if the invariants (sorted, sizes, >= 2 regions) fail.
  void validate() const;
};

/// Relabels quantizer regions with transmission indices in [0, 2^rate).
struct WzMap {
  std::vector<int> labels;
  int rate = 1;

  int label_count() const { return 1 << rate; }
  int region_count() const { return static_cast<int>(labels.size()); }
  void validate() const;

  /// Region j -> label j; valid when there are exactly 2^rate regions.
  static WzMap identity(int rate);
  friend bool operator==(const WzMap&, const WzMap&) = default;
};

/// Per-source subsets of received bit positions used for decoding.
using BitSubsetSelector = std::vector<BitSubset>;

/// Reconstruction table for one decoder. Cells never reached during design
/// hold the fallback (the source's training mean) and are marked unpopulated.
struct CellTable {
  std::vector<double> values;
  std::vector<std::uint8_t> populated;
  double fallback = 0.0;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t cell) const { return values[cell]; }
  /// Single-cell table holding `value`.
  static CellTable constant(double value);
};

struct DecoderCodebook {
  std::vector<CellTable> tables;
};

/// Complete designed coder for the single-sink setting.
struct SourceSystem {
  std::vector<HighRateQuantizer> quantizers;
  std::vector<WzMap> wz_maps;
  BitSubsetSelector selector;
  DecoderCodebook codebooks;
  Eigen::VectorXd weights;

  int source_count() const { return static_cast<int>(quantizers.size()); }
  BitLayout layout() const;
  /// Throws UsageError on inconsistent sizes, bad weights or table sizes.
  void validate() const;
};

/// Uniform weights 1/N.
Eigen::VectorXd uniform_weights(int source_count);

/// Concatenated transmission indices of all sources.
BitVector encode(std::span<const double> x, const SourceSystem& system);
BitVector encode(const Eigen::Ref<const Eigen::VectorXd>& x, const SourceSystem& system);

/// Reconstruction of every source from the received bits.
Eigen::VectorXd decode(const BitVector& bits, const SourceSystem& system);

/// Average codebook size (1/N) sum_i 2^|S(i)|.
double complexity(const BitSubsetSelector& selector);

/// Codewords a full joint decoder must store: N * 2^(sum R_i).
double naive_decoder_storage(int source_count, std::span<const int> rates);

struct DistortionReport {
  double distortion = 0.0;
  Eigen::VectorXd per_source_mse;
  /// Decodes that landed in a cell unpopulated during design.
  std::size_t fallback_hits = 0;
};

/// Weighted empirical MSE sum_i gamma_i * mean_t (x_i - xhat_i)^2.
double distortion(const TrainingSet& data, const SourceSystem& system);
DistortionReport evaluate(const TrainingSet& data, const SourceSystem& system);

/// D + lambda * C. Throws UsageError for negative lambda.
double lagrangian(double distortion, double complexity, double lambda);

/// Region index of every sample for every source (|T| x N, column-major).
Eigen::MatrixXi quantize_all(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers);

/// Packed index tuple of every sample.
std::vector<std::uint64_t> encode_all(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                                      std::span<const WzMap> wz_maps, const BitLayout& layout);

}  // namespace lsdc
