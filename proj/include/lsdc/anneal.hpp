#pragma once

// Deterministic annealing over probabilistic WZ-maps.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lsdc/design_state.hpp"
#include "lsdc/greedy.hpp"
#include "lsdc/model.hpp"
#include "lsdc/tradeoff.hpp"

namespace lsdc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-source conditional label distributions P_i(k | q), one row per region.
struct SoftEncoder {
  std::vector<RowMatrix> probs;

  int source_count() const { return static_cast<int>(probs.size()); }
  /// Throws UsageError unless rows are nonnegative and sum to 1 within 1e-9.
  void validate() const;

  static SoftEncoder uniform(std::span<const HighRateQuantizer> quantizers, std::span<const int> rates);
  static SoftEncoder one_hot(std::span<const WzMap> maps);
  /// Argmax of every row; ties go to the smallest label.
  std::vector<WzMap> harden() const;
};

struct AnnealSchedule {
  /// Zero selects 2x the largest per-source training variance.
  double t_init = 0.0;
  double alpha = 0.9;
  /// Zero selects 1e-4 * t_init.
  double t_min = 0.0;
  double equilibrium_tol = 1e-5;
  int max_inner_iterations = 50;
  /// Amplitude of the multiplicative noise applied at each new temperature.
  double perturbation = 1e-3;

  /// Fills automatic temperatures from the data and checks the invariants.
  AnnealSchedule resolved(const TrainingSet& data) const;
};

/// Soft counterpart of SourceSystem.
struct SoftSystem {
  std::vector<HighRateQuantizer> quantizers;
  SoftEncoder encoder;
  BitSubsetSelector selector;
  DecoderCodebook codebooks;
  Eigen::VectorXd weights;
};

/// Expected weighted MSE when indices are drawn from the soft encoder,
/// computed cell by cell from marginals over the selected bits.
double soft_distortion(const TrainingSet& data, const SoftSystem& system);

/// Expected distortion over the samples of region q of source i when that
/// region is sent as label k deterministically and every other source stays
/// soft: mean over those samples of sum_i (N gamma_i) E[(x_i - xhat_i)^2].
/// Zero for an empty region.
double conditional_distortion(int source, int region, int label, const TrainingSet& data, const SoftSystem& system);

/// Row-wise exp(-d / T), normalized after subtracting each row's minimum.
RowMatrix gibbs_rows(const Eigen::Ref<const RowMatrix>& d, double temperature);

/// Weighted-mean codebooks; cells with total probability <= 1e-12 get the
/// training mean.
DecoderCodebook soft_codebook_update(const TrainingSet& data, const SoftSystem& system);

/// -(1/(N|T|)) sum_x sum_i sum_k P log P, natural log.
double entropy(const SoftEncoder& soft, const TrainingSet& data, std::span<const HighRateQuantizer> quantizers);

/// Soft design state over a bank of decoders (see HardDesign).
class SoftDesign {
 public:
  SoftDesign(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers, std::vector<int> rates,
             std::vector<DecoderSpec> decoders, SoftEncoder encoder);

  const TrainingSet& data() const { return *data_; }
  const BitLayout& layout() const { return layout_; }
  const SoftEncoder& encoder() const { return encoder_; }
  const std::vector<DecoderSpec>& decoders() const { return decoders_; }
  const std::vector<CellTable>& codebooks() const { return codebooks_; }

  /// Expected weighted distortion with the current codebooks.
  double distortion() const;
  double entropy() const;

  /// N_i x 2^R_i matrix of conditional distortions. Without constants, terms
  /// that do not depend on the label are left out (enough for Gibbs).
  RowMatrix conditional_distortions(int source, bool with_constants = true) const;
  void gibbs_update(int source, double temperature);
  /// Installs soft centroid codebooks; returns the resulting distortion.
  double refresh_codebooks();
  void set_codebook(int decoder, CellTable table);

  /// Probability mass and weighted sum of `source` per cell of `subset`.
  CellStats soft_stats(int source, BitSubset subset) const;
  /// Same, for every source at once over the full index (2^R_r cells).
  std::vector<CellStats> full_stats() const;
  /// Changes a decoder subset and installs its soft centroid codebook.
  void set_subset(int decoder, BitSubset subset);

  void set_encoder(SoftEncoder encoder);
  void perturb(std::mt19937_64& rng, double amplitude);

 private:
  struct Group {
    BitSubset subset;
    std::vector<int> decoders;
    std::vector<int> sources;  // distinct decoder sources, ascending
  };
  std::vector<Group> groups() const;
  /// Pattern marginals of every source under `packer`.
  std::vector<RowMatrix> marginals(const CellPacker& packer) const;
  /// Mass and per-source sums over the cells of `subset`.
  void accumulate(BitSubset subset, std::span<const int> sources, Eigen::VectorXd& mass,
                  RowMatrix& sums) const;

  const TrainingSet* data_;
  BitLayout layout_;
  RegionIndex regions_;
  std::vector<DecoderSpec> decoders_;
  std::vector<CellTable> codebooks_;
  SoftEncoder encoder_;
  std::vector<double> means_;
  std::vector<double> sumsq_;
};

/// Called once per temperature after equilibrium; may change decoder subsets.
using AnnealSelectorStep = std::function<void(SoftDesign&, double temperature)>;

struct AnnealOutcome {
  SoftEncoder encoder;
  std::vector<DecoderSpec> decoders;
  int temperature_steps = 0;
  int inner_iterations = 0;
  /// Largest increase of D - T H over any (Gibbs sweep, codebook update) pair.
  double max_free_energy_increase = 0.0;
  /// D - T H at each equilibrium.
  std::vector<double> free_energy;
};

/// Cools from t_init to t_min, alternating Gibbs and codebook updates at each
/// temperature until D - T H settles.
AnnealOutcome anneal(SoftDesign& design, const AnnealSchedule& schedule, std::uint64_t seed,
                     const AnnealSelectorStep& selector_step = {});

/// Soft analogue of select_subset: candidates are scored with soft centroid
/// codebooks. `protected_bits` are never removed. `full` may hold the output of
/// SoftDesign::full_stats to avoid one pass per candidate.
BitSubset soft_select_subset(SoftDesign& design, int decoder, double lambda, BitSubset protected_bits,
                             const std::vector<CellStats>* full = nullptr);

struct DaConfig {
  double lambda = 0.0;
  AnnealSchedule schedule;
  /// hamming1 or fixed; also used by the final greedy sweeps.
  SelectorSearch selector_search = SelectorSearch::hamming1;
  bool own_bits_mandatory = false;
  std::uint64_t rng_seed = 1;
  std::optional<BitSubsetSelector> initial_selector;
  Eigen::VectorXd weights;
  int max_sweeps = 100;
};

struct DaResult {
  SourceSystem system;
  TradeoffPoint point;
  double lagrangian = 0.0;
  /// Argmax WZ-maps and selector at the end of annealing, before greedy sweeps.
  std::vector<WzMap> hardened;
  BitSubsetSelector annealed_selector;
  AnnealOutcome anneal;
};

/// DA over WZ-maps and codebooks with a selector step per temperature, then
/// hardening and greedy sweeps to a fixed point.
DaResult run_da(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers, std::span<const int> rates,
                const DaConfig& config);

}  // namespace lsdc
