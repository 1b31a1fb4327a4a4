#pragma once

// Multi-sink networks: exact Steiner multicast costs, per-bit routing and the
// joint design of encoders, routes and sink decoders.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lsdc/anneal.hpp"
#include "lsdc/design_state.hpp"
#include "lsdc/model.hpp"
#include "lsdc/tradeoff.hpp"

namespace lsdc {

/// Set of sinks as a bit mask (bit j = sink j).
using SinkSet = std::uint32_t;

/// Largest sink count the exact Steiner solver accepts.
inline constexpr int kMaxSinks = 12;

enum class NodeRole { source, sink, intermediate };

struct Edge {
  int u = 0;
  int v = 0;
  double weight = 0.0;
};

class NetworkGraph {
 public:
  NetworkGraph() = default;
  /// `source_nodes[i]` is the node of source i, `sink_nodes[j]` that of sink j.
  NetworkGraph(int node_count, std::vector<Edge> edges, std::vector<int> source_nodes, std::vector<int> sink_nodes);

  int node_count() const { return node_count_; }
  int source_count() const { return static_cast<int>(source_nodes_.size()); }
  int sink_count() const { return static_cast<int>(sink_nodes_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  int source_node(int i) const { return source_nodes_[i]; }
  int sink_node(int j) const { return sink_nodes_[j]; }
  NodeRole role(int node) const;
  bool connected() const;

  /// All-pairs shortest path lengths (infinity between components).
  Eigen::MatrixXd distances() const;

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> source_nodes_;
  std::vector<int> sink_nodes_;
};

/// Binary request matrix: entry (i, j) is 1 when sink j wants source i.
struct TrafficMatrix {
  Eigen::MatrixXi requests;

  int source_count() const { return static_cast<int>(requests.rows()); }
  int sink_count() const { return static_cast<int>(requests.cols()); }
  /// Sinks requesting source i.
  SinkSet sinks_of(int source) const;
  /// Throws UsageError unless entries are 0/1 and every source is requested.
  void validate() const;
};

/// d*_i(B) for every sink subset B of one source.
struct SteinerCostTable {
  std::vector<double> cost;  // indexed by SinkSet

  double operator()(SinkSet b) const { return cost[b]; }
};

/// Dreyfus-Wagner tables for every source. Throws UsageError for more than
/// kMaxSinks sinks and InfeasibleError when a source cannot reach a sink.
std::vector<SteinerCostTable> steiner_tables(const NetworkGraph& graph);
SteinerCostTable steiner_table(const NetworkGraph& graph, int source);

/// Sink set receiving each bit: routes[i][b] for bit b of source i.
struct RouterAssignment {
  std::vector<std::vector<SinkSet>> routes;

  static RouterAssignment uniform(std::span<const int> rates, SinkSet sinks);
  /// Every bit of source i goes to exactly the sinks requesting it.
  static RouterAssignment conventional(const TrafficMatrix& traffic, std::span<const int> rates);
  static RouterAssignment broadcast(int sink_count, std::span<const int> rates);

  /// Bits delivered to sink j, as global positions.
  BitSubset bits_at(int sink, const BitLayout& layout) const;
  friend bool operator==(const RouterAssignment&, const RouterAssignment&) = default;
};

/// W = sum_i sum_b d*_i(routes[i][b]).
double communication_cost(const RouterAssignment& routers, std::span<const SteinerCostTable> tables);

/// gamma_ij uniform over requested pairs (N x M, summing to 1).
Eigen::MatrixXd default_dir_weights(const TrafficMatrix& traffic);

/// Complete multi-sink coder. Decoder (j, i) is stored at index j * N + i and
/// reads every bit routed to sink j.
struct DirSystem {
  std::vector<HighRateQuantizer> quantizers;
  std::vector<WzMap> wz_maps;
  RouterAssignment routers;
  std::vector<CellTable> codebooks;
  Eigen::MatrixXd weights;  // N x M
  int sink_count = 0;

  int source_count() const { return static_cast<int>(quantizers.size()); }
  BitLayout layout() const;
  std::vector<DecoderSpec> decoders() const;
  void validate() const;
};

/// Reconstruction of every source at sink j.
Eigen::VectorXd decode_at_sink(const BitVector& bits, const DirSystem& system, int sink);

/// sum_ij gamma_ij * mean_t (x_i - xhat_ij)^2.
double dir_distortion(const TrainingSet& data, const DirSystem& system);

enum class RouterSearch {
  full,          // every sink subset
  hamming1,      // current set and every single-sink toggle
  conventional,  // the empty set or exactly the requesting sinks
  fixed,         // routes never change
};

/// Router-update rule on a design state whose decoders follow the DIR layout.
/// Scores each candidate set C as the centroid distortion with the bit added
/// to or removed from every sink, plus lambda * d*_i(C). Keeps the current set
/// unless another is strictly better (then the smallest mask). Installs
/// centroid codebooks at every sink.
SinkSet select_route(HardDesign& design, RouterAssignment& routers, int source, int bit, double lambda,
                     RouterSearch search, const SteinerCostTable& table, const TrafficMatrix& traffic);

/// Single update on a complete system.
SinkSet update_router(int source, int bit, const DirSystem& system, const TrainingSet& data, double lambda,
                      RouterSearch search, std::span<const SteinerCostTable> tables, const TrafficMatrix& traffic);

enum class Optimizer { greedy, da };

inline const char* to_string(Optimizer o) { return o == Optimizer::greedy ? "greedy" : "da"; }

struct DirConfig {
  double lambda = 0.0;
  Optimizer optimizer = Optimizer::greedy;
  RouterSearch router_search = RouterSearch::full;
  int restarts = 25;
  std::uint64_t rng_seed = 1;
  int max_sweeps = 100;
  AnnealSchedule schedule;
  /// Conventional routing when absent.
  std::optional<RouterAssignment> initial_routers;
  /// When present, a single descent starts from these maps.
  std::optional<std::vector<WzMap>> initial_maps;
  /// N x M; uniform over requested pairs when empty.
  Eigen::MatrixXd weights;
  bool record_trace = false;
};

struct DirProblem {
  NetworkGraph graph;
  TrafficMatrix traffic;
  std::vector<SteinerCostTable> tables;

  DirProblem(NetworkGraph graph, TrafficMatrix traffic);
};

struct DirResult {
  DirSystem system;
  TradeoffPoint point;
  double lagrangian = 0.0;
  int best_restart = 0;
  std::vector<double> restart_lagrangians;
  /// D + lambda W after every individual update, per descent.
  std::vector<std::vector<double>> traces;
};

/// Greedy descent over WZ-maps, routes and codebooks until a sweep changes
/// nothing.
DirResult refine_dir(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                     std::vector<WzMap> wz_maps, RouterAssignment routers, const DirProblem& problem,
                     const DirConfig& config);

/// Greedy: best of restarts from random WZ-maps. DA: WZ-maps annealed at the
/// initial routes, hardened, then refined.
DirResult run_dir_design(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                         std::span<const int> rates, const DirProblem& problem, const DirConfig& config);

/// run_dir_design restricted to conventional routes, for each lambda.
std::vector<DirResult> conventional_baseline(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                                             std::span<const int> rates, const DirProblem& problem,
                                             std::span<const double> lambdas, const DirConfig& config);

/// Every bit to every sink; one design per call.
DirResult broadcast_baseline(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                             std::span<const int> rates, const DirProblem& problem, const DirConfig& config);

/// Source, intermediate and sink coordinates of a random deployment.
struct Deployment {
  std::vector<Eigen::Vector2d> sources;
  std::vector<Eigen::Vector2d> intermediates;
  std::vector<Eigen::Vector2d> sinks;
};

/// Sources and intermediates uniform in [0, side]^2, sinks at the four corners.
Deployment random_deployment(int sources, int intermediates, double side, std::uint64_t seed);

/// Complete graph over the deployment (sources, then intermediates, then
/// sinks) with squared Euclidean edge weights.
NetworkGraph complete_graph(const Deployment& deployment);

/// Sink j requests sources j, j+1, ..., j+per_sink-1 (mod N).
TrafficMatrix cyclic_traffic(int sources, int sinks, int per_sink);

/// Text formats. Graph: "u v w" edge lines; after a line "roles", lines
/// "node source i", "node sink j" or "node intermediate". '#' starts a
/// comment. Traffic: one row of 0/1 entries per source.
NetworkGraph parse_graph(const std::string& text);
NetworkGraph load_graph(const std::string& path);
TrafficMatrix parse_traffic(const std::string& text);
TrafficMatrix load_traffic(const std::string& path);
std::string format_graph(const NetworkGraph& graph);

}  // namespace lsdc
