#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lsdc/design_state.hpp"
#include "lsdc/model.hpp"
#include "lsdc/tradeoff.hpp"

namespace lsdc {

enum class SelectorSearch {
  full,      // exact minimizer over every subset (exponential; capped)
  hamming1,  // current subset and its neighbors at Hamming distance 1
  fixed,     // selectors never change (grouping baselines)
};

/// At lambda = 0, without an explicit initial selector, every decoder starts
/// reading every bit when the total rate is at most this.
inline constexpr int kFullStartBits = 16;

/// Starting selectors of each restart (lambda > 0).
enum class SelectorInit {
  own_bits,  // every decoder reads only its own source's bits
  random,    // uniform over the allowed subsets, drawn per restart
};

struct GreedyConfig {
  double lambda = 0.0;
  int max_sweeps = 100;
  int restarts = 25;
  std::uint64_t rng_seed = 1;
  SelectorSearch selector_search = SelectorSearch::hamming1;
  bool own_bits_mandatory = false;
  /// Largest R_r for which full selector search is allowed.
  int full_search_cap = 16;
  SelectorInit selector_init = SelectorInit::random;
  /// Fixed starting selectors for every restart; overrides selector_init.
  std::optional<BitSubsetSelector> initial_selector;
  /// Source weights; uniform when empty.
  Eigen::VectorXd weights;
  /// Record the Lagrangian after every individual update.
  bool record_trace = false;
};

struct GreedyRun {
  SourceSystem system;
  double lagrangian = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> trace;
};

struct GreedyResult {
  SourceSystem system;
  TradeoffPoint point;
  int best_restart = 0;
  /// Per restart, in order. Systems are dropped to save memory; traces kept.
  std::vector<double> restart_lagrangians;
  std::vector<std::vector<double>> traces;
};

// Single-update operations on a complete system; each builds its own design
// state from `data`.

/// Optimal relabeling of source i at fixed selectors and codebooks.
WzMap update_wz_map(int source, const SourceSystem& system, const TrainingSet& data);
/// Exact best subset for source i; every candidate gets its own centroid
/// codebook. Throws UsageError when R_r exceeds `cap`.
BitSubset update_selector_full(int source, const SourceSystem& system, const TrainingSet& data, double lambda,
                               bool own_bits_mandatory = false, int cap = 16);
/// Best of the current subset and its Hamming-distance-1 neighbors.
BitSubset update_selector_hamming1(int source, const SourceSystem& system, const TrainingSet& data, double lambda,
                                   bool own_bits_mandatory = false);
/// Centroid codebooks at fixed encoders and selector.
DecoderCodebook update_codebooks(const SourceSystem& system, const TrainingSet& data);

/// Selector-update rule on a design state. Scores each candidate as
/// weight * centroid MSE + (lambda / N) 2^|e|; keeps the current subset
/// unless a candidate is strictly better, ties going to the lexicographically
/// smallest subset. Installs the centroid codebook of the result.
BitSubset select_subset(HardDesign& design, int decoder, double lambda, SelectorSearch search,
                        bool own_bits_mandatory, int full_search_cap = 16);

/// Greedy descent from a given starting point until a sweep changes nothing.
GreedyRun refine_greedy(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                        std::vector<WzMap> wz_maps, BitSubsetSelector selector, const GreedyConfig& config);

/// Best of `config.restarts` descents from random WZ-maps (and, per
/// selector_init, random selectors).
GreedyResult run_greedy(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                        std::span<const int> rates, const GreedyConfig& config);

/// Greedy correlation agglomeration: groups are filled in the given order,
/// each seeded with the lowest-index unassigned source and grown by the
/// unassigned source with the largest mean |correlation| to the group.
std::vector<std::vector<int>> correlation_groups(const TrainingSet& data, std::span<const int> group_sizes);

/// Sizes [s, s, ..., remainder] partitioning `source_count`.
std::vector<int> uniform_group_sizes(int source_count, int group_size);

/// Every member of a group reads the bits of the whole group.
BitSubsetSelector group_selector(const BitLayout& layout, const std::vector<std::vector<int>>& groups);

struct GroupingResult {
  std::vector<std::vector<int>> groups;
  GreedyResult design;
};

/// Conventional full-complexity coding inside each group, for each partition
/// in `partitions` (each a list of group sizes).
std::vector<GroupingResult> grouping_baseline(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                                              std::span<const int> rates,
                                              std::span<const std::vector<int>> partitions,
                                              const GreedyConfig& config);

}  // namespace lsdc
