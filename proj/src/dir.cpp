#include "lsdc/dir.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "lsdc/error.hpp"

namespace lsdc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

Eigen::MatrixXd resolve_weights(const Eigen::MatrixXd& weights, const TrafficMatrix& traffic) {
  if (weights.size() == 0) return default_dir_weights(traffic);
  if (weights.rows() != traffic.source_count() || weights.cols() != traffic.sink_count()) {
    throw UsageError("DIR weights must be N x M");
  }
  return weights;
}

std::vector<DecoderSpec> dir_decoders(const RouterAssignment& routers, const BitLayout& layout,
                                      const Eigen::MatrixXd& weights) {
  const auto n = static_cast<int>(weights.rows());
  const auto m = static_cast<int>(weights.cols());
  std::vector<DecoderSpec> out;
  for (int j = 0; j < m; ++j) {
    const BitSubset bits = routers.bits_at(j, layout);
    for (int i = 0; i < n; ++i) out.push_back({i, bits, weights(i, j)});
  }
  return out;
}

double route_cost(const RouterAssignment& routers, std::span<const SteinerCostTable> tables) {
  return communication_cost(routers, tables);
}

void check_routes(const RouterAssignment& routers, std::span<const int> rates, int sinks) {
  if (routers.routes.size() != rates.size()) throw UsageError("one route list per source required");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (static_cast<int>(routers.routes[i].size()) != rates[i]) throw UsageError("one route per bit required");
    for (SinkSet s : routers.routes[i]) {
      if (s >> sinks) throw UsageError("route names a sink that does not exist");
    }
  }
}

}  // namespace

NetworkGraph::NetworkGraph(int node_count, std::vector<Edge> edges, std::vector<int> source_nodes,
                           std::vector<int> sink_nodes)
    : node_count_(node_count),
      edges_(std::move(edges)),
      source_nodes_(std::move(source_nodes)),
      sink_nodes_(std::move(sink_nodes)) {
  if (node_count_ < 1) throw UsageError("graph needs at least one node");
  for (const auto& e : edges_) {
    if (e.u < 0 || e.u >= node_count_ || e.v < 0 || e.v >= node_count_) throw UsageError("edge endpoint out of range");
    if (!std::isfinite(e.weight) || e.weight < 0.0) throw UsageError("edge weights must be finite and nonnegative");
  }
  std::vector<int> seen(static_cast<std::size_t>(node_count_), 0);
  for (int v : source_nodes_) {
    if (v < 0 || v >= node_count_ || seen[v]++) throw UsageError("bad or repeated source node");
  }
  for (int v : sink_nodes_) {
    if (v < 0 || v >= node_count_ || seen[v]++) throw UsageError("bad or repeated sink node");
  }
}

NodeRole NetworkGraph::role(int node) const {
  if (std::find(source_nodes_.begin(), source_nodes_.end(), node) != source_nodes_.end()) return NodeRole::source;
  if (std::find(sink_nodes_.begin(), sink_nodes_.end(), node) != sink_nodes_.end()) return NodeRole::sink;
  return NodeRole::intermediate;
}

Eigen::MatrixXd NetworkGraph::distances() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(node_count_, node_count_, kInf);
  d.diagonal().setZero();
  for (const auto& e : edges_) {
    d(e.u, e.v) = std::min(d(e.u, e.v), e.weight);
    d(e.v, e.u) = std::min(d(e.v, e.u), e.weight);
  }
  for (int k = 0; k < node_count_; ++k) {
    for (int a = 0; a < node_count_; ++a) {
      for (int b = 0; b < node_count_; ++b) d(a, b) = std::min(d(a, b), d(a, k) + d(k, b));
    }
  }
  return d;
}

bool NetworkGraph::connected() const { return std::isfinite(distances().maxCoeff()); }

SinkSet TrafficMatrix::sinks_of(int source) const {
  SinkSet s = 0;
  for (int j = 0; j < sink_count(); ++j) {
    if (requests(source, j)) s |= SinkSet{1} << j;
  }
  return s;
}

void TrafficMatrix::validate() const {
  if (requests.rows() < 1 || requests.cols() < 1) throw UsageError("traffic matrix is empty");
  if (((requests.array() != 0) && (requests.array() != 1)).any()) throw UsageError("traffic entries must be 0 or 1");
  for (int i = 0; i < source_count(); ++i) {
    if (requests.row(i).sum() == 0) throw UsageError("source " + std::to_string(i) + " is requested by no sink");
  }
}

std::vector<SteinerCostTable> steiner_tables(const NetworkGraph& graph) {
  const int m = graph.sink_count();
  if (m > kMaxSinks) throw UsageError("exact Steiner costs support at most 12 sinks");
  const int v_count = graph.node_count();
  const Eigen::MatrixXd dist = graph.distances();
  const SinkSet all = (SinkSet{1} << m) - 1;

  // dp(S, v): cheapest tree spanning the sinks in S and node v.
  std::vector<std::vector<double>> dp(std::size_t{1} << m, std::vector<double>(v_count, kInf));
  for (int j = 0; j < m; ++j) {
    for (int v = 0; v < v_count; ++v) dp[SinkSet{1} << j][v] = dist(graph.sink_node(j), v);
  }
  std::vector<double> merged(v_count);
  for (SinkSet s = 1; s <= all; ++s) {
    if (std::popcount(s) < 2) continue;
    std::fill(merged.begin(), merged.end(), kInf);
    // Each unordered split once: the part holding the lowest sink.
    const SinkSet low = s & -s;
    for (SinkSet a = (s - 1) & s; a > 0; a = (a - 1) & s) {
      if (!(a & low)) continue;
      const auto& x = dp[a];
      const auto& y = dp[s ^ a];
      for (int u = 0; u < v_count; ++u) merged[u] = std::min(merged[u], x[u] + y[u]);
    }
    auto& out = dp[s];
    for (int v = 0; v < v_count; ++v) {
      double best = kInf;
      for (int u = 0; u < v_count; ++u) best = std::min(best, dist(v, u) + merged[u]);
      out[v] = best;
    }
  }

  std::vector<SteinerCostTable> tables(static_cast<std::size_t>(graph.source_count()));
  for (int i = 0; i < graph.source_count(); ++i) {
    auto& t = tables[i].cost;
    t.assign(std::size_t{1} << m, 0.0);
    for (SinkSet s = 1; s <= all; ++s) {
      t[s] = dp[s][graph.source_node(i)];
      if (!std::isfinite(t[s])) {
        throw InfeasibleError("source " + std::to_string(i) + " cannot reach every sink");
      }
    }
  }
  return tables;
}

SteinerCostTable steiner_table(const NetworkGraph& graph, int source) {
  if (source < 0 || source >= graph.source_count()) throw UsageError("source out of range");
  return steiner_tables(graph)[source];
}

RouterAssignment RouterAssignment::uniform(std::span<const int> rates, SinkSet sinks) {
  RouterAssignment r;
  for (int rate : rates) r.routes.emplace_back(static_cast<std::size_t>(rate), sinks);
  return r;
}

RouterAssignment RouterAssignment::conventional(const TrafficMatrix& traffic, std::span<const int> rates) {
  RouterAssignment r;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    r.routes.emplace_back(static_cast<std::size_t>(rates[i]), traffic.sinks_of(static_cast<int>(i)));
  }
  return r;
}

RouterAssignment RouterAssignment::broadcast(int sink_count, std::span<const int> rates) {
  return uniform(rates, (SinkSet{1} << sink_count) - 1);
}

BitSubset RouterAssignment::bits_at(int sink, const BitLayout& layout) const {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    for (std::size_t b = 0; b < routes[i].size(); ++b) {
      if ((routes[i][b] >> sink) & 1U) mask |= std::uint64_t{1} << (layout.offset(static_cast<int>(i)) + b);
    }
  }
  return BitSubset(mask);
}

double communication_cost(const RouterAssignment& routers, std::span<const SteinerCostTable> tables) {
  if (routers.routes.size() != tables.size()) throw UsageError("one Steiner table per source required");
  double w = 0.0;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (SinkSet s : routers.routes[i]) {
      if (s >= tables[i].cost.size()) throw UsageError("route names a sink outside the table");
      w += tables[i](s);
    }
  }
  return w;
}

Eigen::MatrixXd default_dir_weights(const TrafficMatrix& traffic) {
  traffic.validate();
  const Eigen::MatrixXd r = traffic.requests.cast<double>();
  return r / r.sum();
}

BitLayout DirSystem::layout() const {
  std::vector<int> rates;
  for (const auto& m : wz_maps) rates.push_back(m.rate);
  return BitLayout(std::move(rates));
}

std::vector<DecoderSpec> DirSystem::decoders() const { return dir_decoders(routers, layout(), weights); }

void DirSystem::validate() const {
  const int n = source_count();
  if (static_cast<int>(wz_maps.size()) != n) throw UsageError("one WZ-map per source required");
  for (int i = 0; i < n; ++i) {
    quantizers[i].validate();
    wz_maps[i].validate();
    if (wz_maps[i].region_count() != quantizers[i].region_count()) throw UsageError("WZ-map does not match quantizer");
  }
  if (weights.rows() != n || weights.cols() != sink_count) throw UsageError("DIR weights must be N x M");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw UsageError("DIR weights must be nonnegative and sum to 1");
  }
  std::vector<int> rates;
  for (const auto& m : wz_maps) rates.push_back(m.rate);
  check_routes(routers, rates, sink_count);
  const BitLayout lay = layout();
  if (static_cast<int>(codebooks.size()) != n * sink_count) throw UsageError("one codebook per (sink, source) required");
  for (int j = 0; j < sink_count; ++j) {
    const std::size_t cells = std::size_t{1} << routers.bits_at(j, lay).size();
    for (int i = 0; i < n; ++i) {
      if (codebooks[j * n + i].size() != cells) throw UsageError("codebook size does not match routed bits");
    }
  }
}

Eigen::VectorXd decode_at_sink(const BitVector& bits, const DirSystem& system, int sink) {
  const BitLayout lay = system.layout();
  const std::uint64_t cell = extract_bits(bits, system.routers.bits_at(sink, lay));
  const int n = system.source_count();
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = system.codebooks[sink * n + i][cell];
  return out;
}

double dir_distortion(const TrainingSet& data, const DirSystem& system) {
  system.validate();
  const BitLayout lay = system.layout();
  const auto packed = encode_all(data, system.quantizers, system.wz_maps, lay);
  const int n = system.source_count();
  double d = 0.0;
  for (int j = 0; j < system.sink_count; ++j) {
    const CellPacker packer(lay, system.routers.bits_at(j, lay));
    for (int i = 0; i < n; ++i) {
      const double w = system.weights(i, j);
      if (w == 0.0) continue;
      const auto& table = system.codebooks[j * n + i];
      const auto x = data.source(i);
      double sse = 0.0;
      for (Index t = 0; t < data.sample_count(); ++t) {
        const double e = x[t] - table[packer.cell_of_packed(packed[t])];
        sse += e * e;
      }
      d += w * sse / static_cast<double>(data.sample_count());
    }
  }
  return d;
}

SinkSet select_route(HardDesign& design, RouterAssignment& routers, int source, int bit, double lambda,
                     RouterSearch search, const SteinerCostTable& table, const TrafficMatrix& traffic) {
  if (lambda < 0.0) throw UsageError("lambda must be nonnegative");
  const BitLayout& layout = design.layout();
  const int n = layout.source_count();
  const int m = static_cast<int>(design.decoders().size()) / n;
  const SinkSet current = routers.routes[source][bit];
  if (search == RouterSearch::fixed) return current;
  const int position = layout.offset(source) + bit;

  // Sink decoders are independent given the bit, so a candidate's distortion
  // is a sum of per-sink terms with the bit present or absent.
  std::vector<double> with(m, 0.0), without(m, 0.0);
  for (int j = 0; j < m; ++j) {
    const BitSubset bits = design.decoders()[j * n].subset;
    for (int i = 0; i < n; ++i) {
      const double w = design.decoders()[j * n + i].weight;
      if (w == 0.0) continue;
      with[j] += w * design.centroid_mse(i, bits.with(position));
      without[j] += w * design.centroid_mse(i, bits.without(position));
    }
  }
  auto score = [&](SinkSet c) {
    double s = lambda * table(c);
    for (int j = 0; j < m; ++j) s += ((c >> j) & 1U) ? with[j] : without[j];
    return s;
  };

  std::vector<SinkSet> candidates;
  switch (search) {
    case RouterSearch::full:
      for (SinkSet c = 0; c < (SinkSet{1} << m); ++c) candidates.push_back(c);
      break;
    case RouterSearch::hamming1:
      for (int j = 0; j < m; ++j) candidates.push_back(current ^ (SinkSet{1} << j));
      break;
    case RouterSearch::conventional:
      candidates = {0, traffic.sinks_of(source)};
      break;
    case RouterSearch::fixed:
      break;
  }
  std::sort(candidates.begin(), candidates.end());
  SinkSet best = current;
  double best_score = score(current);
  const double tol = 1e-12 * std::abs(best_score);
  bool best_is_current = true;
  for (SinkSet c : candidates) {
    if (c == current) continue;
    const double s = score(c);
    const bool better = s < best_score - tol;
    const bool tie_smaller = !best_is_current && s <= best_score + tol && c < best;
    if (better || tie_smaller) {
      best = c;
      best_score = s;
      best_is_current = false;
    }
  }

  routers.routes[source][bit] = best;
  for (int j = 0; j < m; ++j) {
    const BitSubset bits = routers.bits_at(j, layout);
    for (int i = 0; i < n; ++i) design.set_subset(j * n + i, bits);
  }
  return best;
}

SinkSet update_router(int source, int bit, const DirSystem& system, const TrainingSet& data, double lambda,
                      RouterSearch search, std::span<const SteinerCostTable> tables, const TrafficMatrix& traffic) {
  system.validate();
  HardDesign design(data, system.quantizers, system.wz_maps, system.decoders());
  for (std::size_t d = 0; d < system.codebooks.size(); ++d) design.set_codebook(static_cast<int>(d), system.codebooks[d]);
  RouterAssignment routers = system.routers;
  return select_route(design, routers, source, bit, lambda, search, tables[source], traffic);
}

DirProblem::DirProblem(NetworkGraph g, TrafficMatrix t) : graph(std::move(g)), traffic(std::move(t)) {
  traffic.validate();
  if (traffic.source_count() != graph.source_count() || traffic.sink_count() != graph.sink_count()) {
    throw UsageError("traffic matrix does not match the graph's sources and sinks");
  }
  tables = steiner_tables(graph);
}

DirResult refine_dir(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                     std::vector<WzMap> wz_maps, RouterAssignment routers, const DirProblem& problem,
                     const DirConfig& config) {
  const int n = data.source_count();
  const int m = problem.traffic.sink_count();
  if (problem.traffic.source_count() != n) throw UsageError("traffic matrix does not match the data");
  const Eigen::MatrixXd weights = resolve_weights(config.weights, problem.traffic);
  std::vector<int> rates;
  for (const auto& w : wz_maps) rates.push_back(w.rate);
  check_routes(routers, rates, m);
  const BitLayout layout(rates);
  HardDesign design(data, quantizers, std::move(wz_maps), dir_decoders(routers, layout, weights));

  std::vector<double> trace;
  auto lagrangian_now = [&] {
    return design.distortion() + config.lambda * route_cost(routers, problem.tables);
  };
  auto mark = [&] {
    if (config.record_trace) trace.push_back(lagrangian_now());
  };
  mark();
  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    int changes = 0;
    for (int i = 0; i < n; ++i) {
      changes += design.update_wz_map(i);
      mark();
    }
    for (int i = 0; i < n; ++i) {
      for (int b = 0; b < rates[i]; ++b) {
        const SinkSet before = routers.routes[i][b];
        changes += select_route(design, routers, i, b, config.lambda, config.router_search, problem.tables[i],
                                problem.traffic) != before;
        mark();
      }
    }
    design.refresh_codebooks();
    mark();
    if (changes == 0) break;
  }

  DirResult r;
  r.system.quantizers = design.quantizers();
  r.system.wz_maps = design.wz_maps();
  r.system.routers = routers;
  r.system.codebooks = design.codebooks();
  r.system.weights = weights;
  r.system.sink_count = m;
  r.lagrangian = lagrangian_now();
  r.point.lambda = config.lambda;
  r.point.distortion = design.distortion();
  r.point.measure = route_cost(routers, problem.tables);
  r.point.kind = MeasureKind::cost;
  r.point.method = "dir";
  r.point.optimizer = to_string(config.optimizer);
  r.point.seed = config.rng_seed;
  r.restart_lagrangians.push_back(r.lagrangian);
  if (config.record_trace) r.traces.push_back(std::move(trace));
  return r;
}

DirResult run_dir_design(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                         std::span<const int> rates, const DirProblem& problem, const DirConfig& config) {
  const auto start_time = std::chrono::steady_clock::now();
  const int n = data.source_count();
  if (config.lambda < 0.0) throw UsageError("lambda must be nonnegative");
  if (config.restarts < 1) throw UsageError("restarts must be at least 1");
  if (static_cast<int>(rates.size()) != n || static_cast<int>(quantizers.size()) != n) {
    throw UsageError("one rate and one quantizer per source required");
  }
  const RouterAssignment routers =
      config.initial_routers ? *config.initial_routers : RouterAssignment::conventional(problem.traffic, rates);

  DirResult best;
  bool have = false;
  std::vector<double> all_lagrangians;
  std::vector<std::vector<double>> all_traces;
  auto keep = [&](DirResult r, int restart) {
    all_lagrangians.push_back(r.lagrangian);
    for (auto& t : r.traces) all_traces.push_back(std::move(t));
    r.traces.clear();
    if (!have || r.lagrangian < best.lagrangian) {
      best = std::move(r);
      best.best_restart = restart;
      have = true;
    }
  };

  if (config.initial_maps) {
    keep(refine_dir(data, quantizers, *config.initial_maps, routers, problem, config), 0);
  } else if (config.optimizer == Optimizer::da) {
    const BitLayout layout(std::vector<int>(rates.begin(), rates.end()));
    const Eigen::MatrixXd weights = resolve_weights(config.weights, problem.traffic);
    SoftDesign soft(data, quantizers, layout.rates(), dir_decoders(routers, layout, weights),
                    SoftEncoder::uniform(quantizers, rates));
    const AnnealOutcome outcome = anneal(soft, config.schedule, config.rng_seed);
    keep(refine_dir(data, quantizers, outcome.encoder.harden(), routers, problem, config), 0);
  } else {
    for (int r = 0; r < config.restarts; ++r) {
      std::seed_seq seq{static_cast<std::uint32_t>(config.rng_seed),
                        static_cast<std::uint32_t>(config.rng_seed >> 32), static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      std::vector<WzMap> maps(n);
      for (int i = 0; i < n; ++i) {
        std::uniform_int_distribution<int> label(0, (1 << rates[i]) - 1);
        maps[i].rate = rates[i];
        maps[i].labels.resize(quantizers[i].region_count());
        for (auto& l : maps[i].labels) l = label(rng);
      }
      keep(refine_dir(data, quantizers, std::move(maps), routers, problem, config), r);
    }
  }
  best.restart_lagrangians = std::move(all_lagrangians);
  best.traces = std::move(all_traces);
  best.point.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return best;
}

std::vector<DirResult> conventional_baseline(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                                             std::span<const int> rates, const DirProblem& problem,
                                             std::span<const double> lambdas, const DirConfig& config) {
  std::vector<DirResult> out;
  for (double lambda : lambdas) {
    DirConfig c = config;
    c.lambda = lambda;
    c.router_search = RouterSearch::conventional;
    c.initial_routers = RouterAssignment::conventional(problem.traffic, rates);
    DirResult r = run_dir_design(data, quantizers, rates, problem, c);
    r.point.method = "conventional";
    out.push_back(std::move(r));
  }
  return out;
}

DirResult broadcast_baseline(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                             std::span<const int> rates, const DirProblem& problem, const DirConfig& config) {
  DirConfig c = config;
  c.router_search = RouterSearch::fixed;
  c.initial_routers = RouterAssignment::broadcast(problem.traffic.sink_count(), rates);
  DirResult r = run_dir_design(data, quantizers, rates, problem, c);
  r.point.method = "broadcast";
  return r;
}

Deployment random_deployment(int sources, int intermediates, double side, std::uint64_t seed) {
  if (sources < 1 || intermediates < 0 || !(side > 0.0)) throw UsageError("bad deployment parameters");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  Deployment d;
  for (int i = 0; i < sources; ++i) d.sources.emplace_back(u(rng), u(rng));
  for (int i = 0; i < intermediates; ++i) d.intermediates.emplace_back(u(rng), u(rng));
  d.sinks = {{0.0, 0.0}, {side, 0.0}, {0.0, side}, {side, side}};
  return d;
}

NetworkGraph complete_graph(const Deployment& deployment) {
  std::vector<Eigen::Vector2d> pos = deployment.sources;
  pos.insert(pos.end(), deployment.intermediates.begin(), deployment.intermediates.end());
  pos.insert(pos.end(), deployment.sinks.begin(), deployment.sinks.end());
  const int v = static_cast<int>(pos.size());
  std::vector<Edge> edges;
  for (int a = 0; a < v; ++a) {
    for (int b = a + 1; b < v; ++b) edges.push_back({a, b, (pos[a] - pos[b]).squaredNorm()});
  }
  std::vector<int> sources, sinks;
  const int ns = static_cast<int>(deployment.sources.size());
  const int first_sink = ns + static_cast<int>(deployment.intermediates.size());
  for (int i = 0; i < ns; ++i) sources.push_back(i);
  for (int j = 0; j < static_cast<int>(deployment.sinks.size()); ++j) sinks.push_back(first_sink + j);
  return NetworkGraph(v, std::move(edges), std::move(sources), std::move(sinks));
}

TrafficMatrix cyclic_traffic(int sources, int sinks, int per_sink) {
  if (sources < 1 || sinks < 1 || per_sink < 1 || per_sink > sources) throw UsageError("bad traffic parameters");
  TrafficMatrix t;
  t.requests = Eigen::MatrixXi::Zero(sources, sinks);
  for (int j = 0; j < sinks; ++j) {
    for (int k = 0; k < per_sink; ++k) t.requests((j + k) % sources, j) = 1;
  }
  t.validate();
  return t;
}

NetworkGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool in_roles = false;
  std::vector<Edge> edges;
  std::vector<std::pair<int, int>> sources, sinks;  // (index, node)
  int max_node = -1;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream line(strip_comment(raw));
    std::vector<std::string> tok;
    for (std::string w; line >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& what) {
      return ParseError("graph line " + std::to_string(line_no) + ": " + what);
    };
    auto to_int = [&](const std::string& s) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(s, &used);
      } catch (const std::exception&) {
        throw fail("expected an integer, got '" + s + "'");
      }
      if (used != s.size() || v < 0) throw fail("expected a nonnegative integer, got '" + s + "'");
      return v;
    };
    if (tok.size() == 1 && (tok[0] == "roles" || tok[0] == "edges")) {
      in_roles = tok[0] == "roles";
      continue;
    }
    if (!in_roles) {
      if (tok.size() != 3) throw fail("expected 'u v w'");
      Edge e{to_int(tok[0]), to_int(tok[1]), 0.0};
      try {
        std::size_t used = 0;
        e.weight = std::stod(tok[2], &used);
        if (used != tok[2].size()) throw std::invalid_argument(tok[2]);
      } catch (const std::exception&) {
        throw fail("bad weight '" + tok[2] + "'");
      }
      if (!std::isfinite(e.weight) || e.weight < 0.0) throw fail("weight must be finite and nonnegative");
      max_node = std::max({max_node, e.u, e.v});
      edges.push_back(e);
    } else {
      const int node = to_int(tok[0]);
      max_node = std::max(max_node, node);
      if (tok.size() == 3 && tok[1] == "source") {
        sources.emplace_back(to_int(tok[2]), node);
      } else if (tok.size() == 3 && tok[1] == "sink") {
        sinks.emplace_back(to_int(tok[2]), node);
      } else if (tok.size() != 2 || tok[1] != "intermediate") {
        throw fail("expected 'node source i', 'node sink j' or 'node intermediate'");
      }
    }
  }
  auto ordered = [](std::vector<std::pair<int, int>> v, const char* what) {
    std::sort(v.begin(), v.end());
    std::vector<int> nodes;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k].first != static_cast<int>(k)) {
        throw ParseError(std::string(what) + " indices must be 0, 1, ... without gaps or repeats");
      }
      nodes.push_back(v[k].second);
    }
    return nodes;
  };
  auto src = ordered(sources, "source");
  auto snk = ordered(sinks, "sink");
  if (src.empty() || snk.empty()) throw ParseError("graph needs at least one source and one sink role");
  try {
    return NetworkGraph(max_node + 1, std::move(edges), std::move(src), std::move(snk));
  } catch (const UsageError& e) {
    throw ParseError(std::string("graph: ") + e.what());
  }
}

NetworkGraph load_graph(const std::string& path) { return parse_graph(read_file(path)); }

TrafficMatrix parse_traffic(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::vector<std::vector<int>> rows;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string s = strip_comment(raw);
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream line(s);
    std::vector<int> row;
    for (std::string w; line >> w;) {
      if (w != "0" && w != "1") throw ParseError("traffic line " + std::to_string(line_no) + ": entries must be 0 or 1");
      row.push_back(w == "1");
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("traffic line " + std::to_string(line_no) + ": rows differ in length");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("traffic matrix is empty");
  TrafficMatrix t;
  t.requests.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.requests(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  try {
    t.validate();
  } catch (const UsageError& e) {
    throw ParseError(std::string("traffic: ") + e.what());
  }
  return t;
}

TrafficMatrix load_traffic(const std::string& path) { return parse_traffic(read_file(path)); }

std::string format_graph(const NetworkGraph& graph) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& e : graph.edges()) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
  out << "roles\n";
  for (int v = 0; v < graph.node_count(); ++v) {
    switch (graph.role(v)) {
      case NodeRole::source: {
        int i = 0;
        while (graph.source_node(i) != v) ++i;
        out << v << " source " << i << '\n';
        break;
      }
      case NodeRole::sink: {
        int j = 0;
        while (graph.sink_node(j) != v) ++j;
        out << v << " sink " << j << '\n';
        break;
      }
      case NodeRole::intermediate:
        out << v << " intermediate\n";
        break;
    }
  }
  return out.str();
}

}  // namespace lsdc
