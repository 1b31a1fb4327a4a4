#pragma once

// Mutable design-time state shared by the greedy, annealing and routing
// designers. A design is a set of encoders (WZ-maps over fixed high-rate
// quantizers) and a bank of decoders; each decoder reconstructs one source
// from one subset of the received bits and carries a distortion weight. The
// single-sink coder has one decoder per source. The routing coder has one per
// (sink, source) pair, all decoders at a sink sharing that sink's bits.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lsdc/bits.hpp"
#include "lsdc/model.hpp"

namespace lsdc {

struct DecoderSpec {
  int source = 0;
  BitSubset subset;
  double weight = 0.0;
};

/// One decoder per source: decoder i reconstructs source i from selector[i].
std::vector<DecoderSpec> selector_decoders(const BitSubsetSelector& selector, const Eigen::VectorXd& weights);

/// Quantization regions of every sample, plus the samples of each region.
class RegionIndex {
 public:
  RegionIndex() = default;
  RegionIndex(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers);

  int source_count() const { return static_cast<int>(members_.size()); }
  Index sample_count() const { return regions_.rows(); }
  int region(Index t, int source) const { return regions_(t, source); }
  const Eigen::MatrixXi& regions() const { return regions_; }
  int region_count(int source) const { return static_cast<int>(members_[source].size()); }
  const std::vector<int>& members(int source, int region) const { return members_[source][region]; }

 private:
  Eigen::MatrixXi regions_;
  std::vector<std::vector<std::vector<int>>> members_;
};

/// Per-cell mass and first moment of one source's samples, plus the total
/// second moment. Hard designs use sample counts; soft designs use
/// probabilities.
struct CellStats {
  Eigen::VectorXd mass;
  Eigen::VectorXd sum;
  double sumsq = 0.0;

  /// Centroid reconstruction; cells with mass <= min_mass get the fallback.
  CellTable centroid(double fallback, double min_mass) const;
  /// Sum of squared errors when decoding with `table`.
  double sse(const CellTable& table) const;
  /// Sum of squared errors of the centroid table.
  double centroid_sse(double fallback, double min_mass) const;
  /// Sums cells of a finer table into the cells of `target`, where `fine`
  /// maps fine-cell index -> packed index understood by `target`.
  static CellStats marginalize(const CellStats& fine, const CellPacker& target);
};

/// Per-decoder mean squared error weighted by decoder weights.
double weighted_distortion(std::span<const DecoderSpec> decoders, const Eigen::VectorXd& mse);

class HardDesign {
 public:
  HardDesign(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers, std::vector<WzMap> wz_maps,
             std::vector<DecoderSpec> decoders);

  const TrainingSet& data() const { return *data_; }
  const BitLayout& layout() const { return layout_; }
  const RegionIndex& regions() const { return regions_; }
  const std::vector<HighRateQuantizer>& quantizers() const { return quantizers_; }
  const std::vector<WzMap>& wz_maps() const { return wz_maps_; }
  const std::vector<DecoderSpec>& decoders() const { return decoders_; }
  const std::vector<CellTable>& codebooks() const { return codebooks_; }
  /// Training mean of a source, the reconstruction for unreached cells.
  double fallback(int source) const { return means_[source]; }

  /// Direct per-sample evaluation with the current tables.
  Eigen::VectorXd decoder_mse() const;
  double distortion() const;

  /// score(j, k) = sum over samples in region j of source i of the weighted
  /// squared error of every decoder, when region j is relabeled k.
  Eigen::MatrixXd wz_label_scores(int source) const;
  /// Optimal relabeling at fixed decoders; a region keeps its label unless
  /// another is strictly better (ties -> smallest label). Returns the number
  /// of regions relabeled.
  int update_wz_map(int source);
  void set_wz_map(int source, WzMap map);

  CellStats cell_stats(int source, BitSubset subset) const;
  /// Centroid-decoder MSE of `source` reading `subset`.
  double centroid_mse(int source, BitSubset subset) const;

  /// Changes a decoder's bit subset and installs the centroid table.
  void set_subset(int decoder, BitSubset subset);
  void set_codebook(int decoder, CellTable table);
  void refresh_codebook(int decoder);
  void refresh_codebooks();

 private:
  void rebuild_histogram();

  const TrainingSet* data_;
  BitLayout layout_;
  std::vector<HighRateQuantizer> quantizers_;
  RegionIndex regions_;
  std::vector<WzMap> wz_maps_;
  std::vector<DecoderSpec> decoders_;
  std::vector<CellPacker> packers_;
  std::vector<CellTable> codebooks_;
  std::vector<double> means_;
  Eigen::VectorXd sumsq_;
  std::vector<std::uint64_t> packed_;

  // Sufficient statistics over the full received index, used when 2^R_r is
  // small relative to the training set.
  bool use_histogram_ = false;
  std::vector<std::uint64_t> occupied_;
  Eigen::VectorXd hist_count_;
  Eigen::MatrixXd hist_sum_;
};

}  // namespace lsdc
