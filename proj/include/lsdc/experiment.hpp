#pragma once

// Configuration-driven experiments: design runs, lambda sweeps, baselines,
// network experiments and curve files.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsdc/anneal.hpp"
#include "lsdc/data.hpp"
#include "lsdc/dir.hpp"
#include "lsdc/greedy.hpp"
#include "lsdc/tradeoff.hpp"

namespace lsdc {

inline constexpr const char* kConfigFormat = "lsdc-config/1";
inline constexpr const char* kCurvesSchema = "lsdc-curves/1";

enum class OptimizerChoice { greedy, da, both };

struct DirSection {
  /// Edge-list and traffic files; a random deployment and cyclic traffic
  /// are generated when the graph path is empty.
  std::string graph_path;
  std::string traffic_path;
  int intermediates = 10;
  double side = 100.0;
  std::uint64_t deployment_seed = 1;
  int requests_per_sink = 2;
  RouterSearch router_search = RouterSearch::full;
};

struct ExperimentConfig {
  SourceSpec source;
  double train_fraction = 0.5;
  std::optional<std::uint64_t> shuffle_seed;
  /// One entry for all sources, or one per source.
  std::vector<int> rates = {2};
  std::vector<int> regions = {32};
  /// Empty for uniform weights.
  std::vector<double> weights;

  OptimizerChoice optimizer = OptimizerChoice::both;
  std::vector<double> lambdas;
  int restarts = 25;
  SelectorSearch selector_search = SelectorSearch::hamming1;
  SelectorInit selector_init = SelectorInit::random;
  bool own_bits_mandatory = true;
  int max_sweeps = 100;
  int full_search_cap = 16;
  std::uint64_t seed = 1;
  AnnealSchedule schedule;

  /// Subset of {grouping, lowrate} for the single-sink verbs and
  /// {conventional, broadcast} for the network verb.
  std::vector<std::string> baselines = {"grouping"};
  /// Group sizes for the grouping baseline; each yields one partition.
  /// Empty means 1, 2, ..., N.
  std::vector<int> group_sizes;

  DirSection dir;
  std::string output_dir = "out";
  int threads = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// INI text (see README). Unknown sections or keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

enum class Verb { design, sweep, dir, gen, baselines };

struct ExperimentResult {
  /// Train and test rows for every design, in a fixed order.
  std::vector<TradeoffPoint> points;
  /// Human-readable notes: monotonicity flags and dominance comparisons.
  std::string summary;
  /// Files written by `gen`.
  std::vector<std::string> files;
};

/// Runs a verb. Nothing is written to disk except by `gen`.
ExperimentResult run_experiment(const ExperimentConfig& config, Verb verb);

/// A point that some cheaper point of the same series beats.
struct MonotonicityFlag {
  TradeoffPoint point;
  TradeoffPoint dominated_by;
};

/// Per (method, optimizer, set) series, points whose distortion exceeds that
/// of a point with strictly smaller measure.
std::vector<MonotonicityFlag> monotonicity_report(const std::vector<TradeoffPoint>& points);

/// Lowest distortion among points with measure <= `measure`.
std::optional<double> step_envelope(const std::vector<TradeoffPoint>& points, double measure);

struct EnvelopeGap {
  double measure = 0.0;
  /// 10 log10(baseline envelope / proposed envelope); positive favors proposed.
  double gain_db = 0.0;
  /// Strictly between the smallest and largest measure of both series.
  bool interior = false;
};

/// Both step envelopes compared at every measure either series reaches
/// (where both are defined).
std::vector<EnvelopeGap> envelope_gaps(const std::vector<TradeoffPoint>& proposed,
                                       const std::vector<TradeoffPoint>& baseline);

/// Envelope gains of each proposed test series over each baseline test
/// series of the same measure kind.
std::string dominance_summary(const std::vector<TradeoffPoint>& points);

/// Curve files without wall times, so reruns are byte-identical.
std::string curves_csv(const std::vector<TradeoffPoint>& points);
std::string curves_json(const std::vector<TradeoffPoint>& points);
std::vector<TradeoffPoint> parse_curves_json(const std::string& text);
std::string timings_csv(const std::vector<TradeoffPoint>& points);

/// Writes curves.csv, curves.json and timings.csv into `directory`
/// (created if needed). Throws DataError when a file cannot be written.
void emit_curves(const std::vector<TradeoffPoint>& points, const std::string& directory);

}  // namespace lsdc
