#include "lsdc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "lsdc/error.hpp"
#include "lsdc/quantizer.hpp"

namespace lsdc {
namespace {

namespace pt = boost::property_tree;
using nlohmann::json;

// ---- config parsing -------------------------------------------------------

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"source", {"kind", "count", "rho", "d0", "positions", "samples", "seed", "path", "normalize"}},
      {"split", {"train_fraction", "shuffle_seed"}},
      {"coder", {"rates", "regions", "weights"}},
      {"design",
       {"optimizer", "lambdas", "restarts", "selector_search", "selector_init", "own_bits_mandatory", "max_sweeps",
        "full_search_cap", "seed"}},
      {"anneal", {"t_init", "alpha", "t_min", "equilibrium_tol", "max_inner_iterations", "perturbation"}},
      {"baselines", {"run", "group_sizes"}},
      {"dir",
       {"graph", "traffic", "intermediates", "side", "deployment_seed", "requests_per_sink", "router_search"}},
      {"output", {"dir", "threads"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(field + ": expected a finite number, got '" + v + "'");
}

long long to_integer(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw ConfigError(field + ": expected an integer, got '" + v + "'");
}

std::uint64_t to_seed(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long s = std::stoull(v, &used);
      if (used == v.size()) return s;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(field + ": expected a nonnegative integer, got '" + v + "'");
}

bool to_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(field + ": expected true or false, got '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& field, const std::string& v, F&& convert) {
  std::vector<T> out;
  for (const auto& item : split_list(v, ',')) out.push_back(static_cast<T>(convert(field, item)));
  return out;
}

template <class E>
E to_enum(const std::string& field, const std::string& v, const std::map<std::string, E>& names) {
  const auto it = names.find(v);
  if (it != names.end()) return it->second;
  std::string allowed;
  for (const auto& [name, value] : names) allowed += (allowed.empty() ? "" : ", ") + name;
  throw ConfigError(field + ": expected one of " + allowed + ", got '" + v + "'");
}

std::vector<Eigen::Vector2d> to_positions(const std::string& field, const std::string& v) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& pair : split_list(v, ';')) {
    std::string s = pair;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<std::string> xy;
    for (std::string w; in >> w;) xy.push_back(w);
    if (xy.size() != 2) throw ConfigError(field + ": each position needs two coordinates, got '" + pair + "'");
    out.emplace_back(to_double(field, xy[0]), to_double(field, xy[1]));
  }
  return out;
}

const std::map<std::string, SelectorSearch> kSelectorSearch = {
    {"full", SelectorSearch::full}, {"hamming1", SelectorSearch::hamming1}};
const std::map<std::string, RouterSearch> kRouterSearch = {{"full", RouterSearch::full},
                                                           {"hamming1", RouterSearch::hamming1},
                                                           {"conventional", RouterSearch::conventional}};

// ---- experiment plumbing --------------------------------------------------

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Prepared {
  DataSplit data;
  std::vector<int> rates;
  std::vector<int> regions;
  std::vector<HighRateQuantizer> quantizers;
  Eigen::VectorXd weights;
  int sources = 0;
};

std::vector<int> expand(const std::vector<int>& v, int n, const char* field) {
  if (v.size() == 1) return std::vector<int>(static_cast<std::size_t>(n), v.front());
  if (static_cast<int>(v.size()) != n) {
    throw ConfigError(std::string(field) + ": expected 1 or " + std::to_string(n) + " entries, got " +
                      std::to_string(v.size()));
  }
  return v;
}

Prepared prepare(const ExperimentConfig& config, const SourceSpec& source) {
  Prepared p;
  const TrainingSet all = make_source(source);
  p.data = split(all, config.train_fraction, config.shuffle_seed);
  p.sources = all.source_count();
  p.rates = expand(config.rates, p.sources, "coder.rates");
  p.regions = expand(config.regions, p.sources, "coder.regions");
  if (config.weights.empty()) {
    p.weights = uniform_weights(p.sources);
  } else {
    if (static_cast<int>(config.weights.size()) != p.sources) {
      throw ConfigError("coder.weights: expected " + std::to_string(p.sources) + " entries");
    }
    p.weights = Eigen::Map<const Eigen::VectorXd>(config.weights.data(), p.sources);
  }
  p.quantizers = design_quantizers(p.data.train, p.regions);
  return p;
}

std::vector<TradeoffPoint> with_test(TradeoffPoint train, double test_distortion) {
  train.set = "train";
  TradeoffPoint test = train;
  test.set = "test";
  test.distortion = test_distortion;
  return {train, test};
}

bool use_greedy(const ExperimentConfig& c) { return c.optimizer != OptimizerChoice::da; }
bool use_da(const ExperimentConfig& c) { return c.optimizer != OptimizerChoice::greedy; }

bool wants(const ExperimentConfig& c, const std::string& baseline) {
  return std::find(c.baselines.begin(), c.baselines.end(), baseline) != c.baselines.end();
}

GreedyConfig greedy_config(const ExperimentConfig& c, const Prepared& p, double lambda) {
  GreedyConfig g;
  g.lambda = lambda;
  g.max_sweeps = c.max_sweeps;
  g.restarts = c.restarts;
  g.rng_seed = c.seed;
  g.selector_search = c.selector_search;
  g.selector_init = c.selector_init;
  g.own_bits_mandatory = c.own_bits_mandatory;
  g.full_search_cap = c.full_search_cap;
  g.weights = p.weights;
  return g;
}

DaConfig da_config(const ExperimentConfig& c, const Prepared& p, double lambda) {
  DaConfig d;
  d.lambda = lambda;
  d.schedule = c.schedule;
  d.selector_search = c.selector_search;
  d.own_bits_mandatory = c.own_bits_mandatory;
  d.rng_seed = c.seed;
  d.weights = p.weights;
  d.max_sweeps = c.max_sweeps;
  return d;
}

using Task = std::function<std::vector<TradeoffPoint>()>;

// Runs tasks on up to `threads` workers; results keep task order.
std::vector<TradeoffPoint> run_tasks(const std::vector<Task>& tasks, int threads) {
  std::vector<std::vector<TradeoffPoint>> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      try {
        results[k] = tasks[k]();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<TradeoffPoint> out;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (errors[k]) std::rethrow_exception(errors[k]);
    out.insert(out.end(), results[k].begin(), results[k].end());
  }
  return out;
}

void add_proposed(std::vector<Task>& tasks, const ExperimentConfig& c, const Prepared& p,
                  const std::vector<double>& lambdas) {
  for (double lambda : lambdas) {
    if (use_greedy(c)) {
      tasks.push_back([&c, &p, lambda] {
        const GreedyResult r = run_greedy(p.data.train, p.quantizers, p.rates, greedy_config(c, p, lambda));
        return with_test(r.point, distortion(p.data.test, r.system));
      });
    }
    if (use_da(c)) {
      tasks.push_back([&c, &p, lambda] {
        const DaResult r = run_da(p.data.train, p.quantizers, p.rates, da_config(c, p, lambda));
        return with_test(r.point, distortion(p.data.test, r.system));
      });
    }
  }
}

void add_baselines(std::vector<Task>& tasks, const ExperimentConfig& c, const Prepared& p) {
  const double lambda = c.lambdas.front();
  if (wants(c, "grouping")) {
    std::vector<int> sizes = c.group_sizes;
    if (sizes.empty()) {
      for (int s = 1; s <= p.sources; ++s) sizes.push_back(s);
    }
    for (int size : sizes) {
      const std::vector<int> partition = uniform_group_sizes(p.sources, size);
      if (use_greedy(c)) {
        tasks.push_back([&c, &p, partition, lambda] {
          const std::vector<std::vector<int>> parts = {partition};
          const auto g = grouping_baseline(p.data.train, p.quantizers, p.rates, parts, greedy_config(c, p, lambda));
          return with_test(g.front().design.point, distortion(p.data.test, g.front().design.system));
        });
      }
      if (use_da(c)) {
        tasks.push_back([&c, &p, partition, lambda] {
          DaConfig d = da_config(c, p, lambda);
          d.selector_search = SelectorSearch::fixed;
          d.initial_selector = group_selector(BitLayout(p.rates), correlation_groups(p.data.train, partition));
          DaResult r = run_da(p.data.train, p.quantizers, p.rates, d);
          r.point.method = "grouping";
          return with_test(r.point, distortion(p.data.test, r.system));
        });
      }
    }
  }
  if (wants(c, "lowrate")) {
    // Conventional full-decoder coding at one bit per source.
    auto low = [&p] {
      return BitSubsetSelector(static_cast<std::size_t>(p.sources), BitSubset::full(p.sources));
    };
    const std::vector<int> ones(static_cast<std::size_t>(p.sources), 1);
    if (use_greedy(c)) {
      tasks.push_back([&c, &p, low, ones, lambda] {
        GreedyConfig g = greedy_config(c, p, lambda);
        g.selector_search = SelectorSearch::fixed;
        g.initial_selector = low();
        GreedyResult r = run_greedy(p.data.train, p.quantizers, ones, g);
        r.point.method = "lowrate";
        return with_test(r.point, distortion(p.data.test, r.system));
      });
    }
    if (use_da(c)) {
      tasks.push_back([&c, &p, low, ones, lambda] {
        DaConfig d = da_config(c, p, lambda);
        d.selector_search = SelectorSearch::fixed;
        d.initial_selector = low();
        DaResult r = run_da(p.data.train, p.quantizers, ones, d);
        r.point.method = "lowrate";
        return with_test(r.point, distortion(p.data.test, r.system));
      });
    }
  }
}

std::vector<TradeoffPoint> run_dir_experiment(const ExperimentConfig& c) {
  SourceSpec source = c.source;
  std::optional<NetworkGraph> graph;
  int n = 0;
  if (c.dir.graph_path.empty()) {
    if (source.kind == SourceKind::gaussian_field) {
      n = source.positions.empty() ? source.source_count : static_cast<int>(source.positions.size());
    } else if (source.kind == SourceKind::gaussian_chain) {
      n = source.source_count;
    } else {
      n = make_source(source).source_count();
    }
    const Deployment dep = random_deployment(n, c.dir.intermediates, c.dir.side, c.dir.deployment_seed);
    if (source.kind == SourceKind::gaussian_field && source.positions.empty()) source.positions = dep.sources;
    graph = complete_graph(dep);
  } else {
    graph = load_graph(c.dir.graph_path);
  }
  const Prepared p = prepare(c, source);
  const TrafficMatrix traffic = c.dir.traffic_path.empty()
                                    ? cyclic_traffic(p.sources, graph->sink_count(), c.dir.requests_per_sink)
                                    : load_traffic(c.dir.traffic_path);
  const DirProblem problem(*graph, traffic);
  if (problem.traffic.source_count() != p.sources) throw ConfigError("dir: graph sources do not match the data");

  DirConfig base;
  base.restarts = c.restarts;
  base.rng_seed = c.seed;
  base.max_sweeps = c.max_sweeps;
  base.schedule = c.schedule;
  base.router_search = c.dir.router_search;

  std::vector<Optimizer> optimizers;
  if (use_greedy(c)) optimizers.push_back(Optimizer::greedy);
  if (use_da(c)) optimizers.push_back(Optimizer::da);

  std::vector<Task> tasks;
  for (double lambda : c.lambdas) {
    for (Optimizer o : optimizers) {
      tasks.push_back([&, lambda, o] {
        DirConfig cfg = base;
        cfg.optimizer = o;
        const std::vector<double> one = {lambda};
        const DirResult conv = conventional_baseline(p.data.train, p.quantizers, p.rates, problem, one, cfg).front();
        // DIR starts from the conventional solution, so it can only improve on it.
        cfg.lambda = lambda;
        cfg.initial_maps = conv.system.wz_maps;
        cfg.initial_routers = conv.system.routers;
        DirResult dir = run_dir_design(p.data.train, p.quantizers, p.rates, problem, cfg);
        dir.point.optimizer = to_string(o);
        dir.point.wall_seconds += conv.point.wall_seconds;
        auto rows = with_test(dir.point, dir_distortion(p.data.test, dir.system));
        if (wants(c, "conventional")) {
          const auto conv_rows = with_test(conv.point, dir_distortion(p.data.test, conv.system));
          rows.insert(rows.end(), conv_rows.begin(), conv_rows.end());
        }
        return rows;
      });
    }
  }
  if (wants(c, "broadcast")) {
    for (Optimizer o : optimizers) {
      tasks.push_back([&, o] {
        DirConfig cfg = base;
        cfg.optimizer = o;
        cfg.lambda = c.lambdas.front();
        const DirResult r = broadcast_baseline(p.data.train, p.quantizers, p.rates, problem, cfg);
        return with_test(r.point, dir_distortion(p.data.test, r.system));
      });
    }
  }
  return run_tasks(tasks, c.threads);
}

std::string series_key(const TradeoffPoint& p) { return p.method + "/" + p.optimizer + "/" + p.set; }

bool is_proposed(const TradeoffPoint& p) { return p.method == "proposed" || p.method == "dir"; }

}  // namespace

// ---- config -----------------------------------------------------------------

void ExperimentConfig::validate() const {
  // A field without positions takes them from the network deployment.
  const bool deployed = source.kind == SourceKind::gaussian_field && source.positions.empty();
  if (deployed) {
    if (source.source_count < 1) throw ConfigError("source.count must be at least 1");
    SourceSpec placed = source;
    placed.positions.assign(1, Eigen::Vector2d::Zero());
    placed.validate();
  } else {
    source.validate();
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split.train_fraction must lie in (0, 1)");
  if (rates.empty()) throw ConfigError("coder.rates must list at least one value");
  for (int r : rates) {
    if (r < 1 || r > 16) throw ConfigError("coder.rates entries must lie in [1, 16]");
  }
  if (regions.empty()) throw ConfigError("coder.regions must list at least one value");
  for (int q : regions) {
    if (q < 2) throw ConfigError("coder.regions entries must be at least 2");
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("coder.weights must be nonnegative");
  }
  if (!weights.empty()) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("coder.weights must sum to 1");
  }
  const int n = source.kind == SourceKind::gaussian_field && !deployed ? static_cast<int>(source.positions.size())
                                                                      : source.source_count;
  if (source.kind != SourceKind::csv && n > 0) {
    if (rates.size() != 1 && static_cast<int>(rates.size()) != n) {
      throw ConfigError("coder.rates: expected 1 or " + std::to_string(n) + " entries");
    }
    if (regions.size() != 1 && static_cast<int>(regions.size()) != n) {
      throw ConfigError("coder.regions: expected 1 or " + std::to_string(n) + " entries");
    }
    if (!weights.empty() && static_cast<int>(weights.size()) != n) {
      throw ConfigError("coder.weights: expected " + std::to_string(n) + " entries");
    }
    for (int g : group_sizes) {
      if (g < 1 || g > n) throw ConfigError("baselines.group_sizes entries must lie in [1, " + std::to_string(n) + "]");
    }
  }
  if (lambdas.empty()) throw ConfigError("design.lambdas must list at least one value");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] >= 0.0)) throw ConfigError("design.lambdas must be nonnegative");
    if (k > 0 && !(lambdas[k] > lambdas[k - 1])) throw ConfigError("design.lambdas must be strictly increasing");
  }
  if (restarts < 1) throw ConfigError("design.restarts must be at least 1");
  if (max_sweeps < 1) throw ConfigError("design.max_sweeps must be at least 1");
  if (full_search_cap < 1 || full_search_cap > 30) throw ConfigError("design.full_search_cap must lie in [1, 30]");
  if (schedule.t_init < 0.0) throw ConfigError("anneal.t_init must be nonnegative (0 = automatic)");
  if (schedule.t_min < 0.0) throw ConfigError("anneal.t_min must be nonnegative (0 = automatic)");
  if (schedule.t_init > 0.0 && schedule.t_min > 0.0 && schedule.t_min >= schedule.t_init) {
    throw ConfigError("anneal.t_min must be below anneal.t_init");
  }
  if (!(schedule.alpha > 0.0 && schedule.alpha < 1.0)) throw ConfigError("anneal.alpha must lie in (0, 1)");
  if (!(schedule.equilibrium_tol > 0.0)) throw ConfigError("anneal.equilibrium_tol must be positive");
  if (schedule.max_inner_iterations < 1) throw ConfigError("anneal.max_inner_iterations must be at least 1");
  if (schedule.perturbation < 0.0) throw ConfigError("anneal.perturbation must be nonnegative");
  static const std::set<std::string> known = {"grouping", "lowrate", "conventional", "broadcast"};
  for (const auto& b : baselines) {
    if (!known.count(b)) {
      throw ConfigError("baselines.run: unknown baseline '" + b + "' (grouping, lowrate, conventional, broadcast)");
    }
  }
  if (dir.intermediates < 0) throw ConfigError("dir.intermediates must be nonnegative");
  if (!(dir.side > 0.0)) throw ConfigError("dir.side must be positive");
  if (dir.requests_per_sink < 1) throw ConfigError("dir.requests_per_sink must be at least 1");
  if (threads < 1) throw ConfigError("output.threads must be at least 1");
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  // Root keys hold values; sections hold children.
  std::string format;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      if (name != "format") throw ConfigError("config: unknown top-level key '" + name + "'");
      format = trim(node.data());
      continue;
    }
    const auto it = known_keys().find(name);
    if (it == known_keys().end()) throw ConfigError("config: unknown section [" + name + "]");
    for (const auto& [key, value] : node) {
      if (!it->second.count(key)) throw ConfigError(name + "." + key + ": unknown key");
    }
  }
  if (format != kConfigFormat) {
    throw ConfigError(std::string("format: expected '") + kConfigFormat + "', got '" + format + "'");
  }

  ExperimentConfig c;
  auto get = [&](const std::string& field) -> std::optional<std::string> {
    const auto v = tree.get_optional<std::string>(pt::ptree::path_type(field, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  };
  auto with = [&](const std::string& field, auto&& apply) {
    if (auto v = get(field)) apply(field, *v);
  };

  with("source.kind", [&](const std::string& f, const std::string& v) {
    c.source.kind = to_enum<SourceKind>(
        f, v, {{"chain", SourceKind::gaussian_chain}, {"field", SourceKind::gaussian_field}, {"csv", SourceKind::csv}});
  });
  with("source.count", [&](auto& f, auto& v) { c.source.source_count = static_cast<int>(to_integer(f, v)); });
  with("source.rho", [&](auto& f, auto& v) { c.source.rho = to_double(f, v); });
  with("source.d0", [&](auto& f, auto& v) { c.source.d0 = to_double(f, v); });
  with("source.positions", [&](auto& f, auto& v) { c.source.positions = to_positions(f, v); });
  with("source.samples", [&](auto& f, auto& v) { c.source.sample_count = to_integer(f, v); });
  with("source.seed", [&](auto& f, auto& v) { c.source.rng_seed = to_seed(f, v); });
  with("source.path", [&](auto&, auto& v) { c.source.path = v; });
  with("source.normalize", [&](auto& f, auto& v) { c.source.normalize = to_bool(f, v); });

  with("split.train_fraction", [&](auto& f, auto& v) { c.train_fraction = to_double(f, v); });
  with("split.shuffle_seed", [&](auto& f, auto& v) {
    if (!v.empty()) c.shuffle_seed = to_seed(f, v);
  });

  with("coder.rates", [&](auto& f, auto& v) { c.rates = to_list<int>(f, v, to_integer); });
  with("coder.regions", [&](auto& f, auto& v) { c.regions = to_list<int>(f, v, to_integer); });
  with("coder.weights", [&](auto& f, auto& v) { c.weights = to_list<double>(f, v, to_double); });

  with("design.optimizer", [&](auto& f, auto& v) {
    c.optimizer = to_enum<OptimizerChoice>(
        f, v, {{"greedy", OptimizerChoice::greedy}, {"da", OptimizerChoice::da}, {"both", OptimizerChoice::both}});
  });
  with("design.lambdas", [&](auto& f, auto& v) { c.lambdas = to_list<double>(f, v, to_double); });
  with("design.restarts", [&](auto& f, auto& v) { c.restarts = static_cast<int>(to_integer(f, v)); });
  with("design.selector_search", [&](auto& f, auto& v) { c.selector_search = to_enum(f, v, kSelectorSearch); });
  with("design.selector_init", [&](auto& f, auto& v) {
    c.selector_init =
        to_enum<SelectorInit>(f, v, {{"own_bits", SelectorInit::own_bits}, {"random", SelectorInit::random}});
  });
  with("design.own_bits_mandatory", [&](auto& f, auto& v) { c.own_bits_mandatory = to_bool(f, v); });
  with("design.max_sweeps", [&](auto& f, auto& v) { c.max_sweeps = static_cast<int>(to_integer(f, v)); });
  with("design.full_search_cap", [&](auto& f, auto& v) { c.full_search_cap = static_cast<int>(to_integer(f, v)); });
  with("design.seed", [&](auto& f, auto& v) { c.seed = to_seed(f, v); });

  with("anneal.t_init", [&](auto& f, auto& v) { c.schedule.t_init = to_double(f, v); });
  with("anneal.alpha", [&](auto& f, auto& v) { c.schedule.alpha = to_double(f, v); });
  with("anneal.t_min", [&](auto& f, auto& v) { c.schedule.t_min = to_double(f, v); });
  with("anneal.equilibrium_tol", [&](auto& f, auto& v) { c.schedule.equilibrium_tol = to_double(f, v); });
  with("anneal.max_inner_iterations",
       [&](auto& f, auto& v) { c.schedule.max_inner_iterations = static_cast<int>(to_integer(f, v)); });
  with("anneal.perturbation", [&](auto& f, auto& v) { c.schedule.perturbation = to_double(f, v); });

  with("baselines.run", [&](auto&, auto& v) { c.baselines = split_list(v, ','); });
  with("baselines.group_sizes", [&](auto& f, auto& v) { c.group_sizes = to_list<int>(f, v, to_integer); });

  with("dir.graph", [&](auto&, auto& v) { c.dir.graph_path = v; });
  with("dir.traffic", [&](auto&, auto& v) { c.dir.traffic_path = v; });
  with("dir.intermediates", [&](auto& f, auto& v) { c.dir.intermediates = static_cast<int>(to_integer(f, v)); });
  with("dir.side", [&](auto& f, auto& v) { c.dir.side = to_double(f, v); });
  with("dir.deployment_seed", [&](auto& f, auto& v) { c.dir.deployment_seed = to_seed(f, v); });
  with("dir.requests_per_sink",
       [&](auto& f, auto& v) { c.dir.requests_per_sink = static_cast<int>(to_integer(f, v)); });
  with("dir.router_search", [&](auto& f, auto& v) { c.dir.router_search = to_enum(f, v, kRouterSearch); });

  with("output.dir", [&](auto&, auto& v) { c.output_dir = v; });
  with("output.threads", [&](auto& f, auto& v) { c.threads = static_cast<int>(to_integer(f, v)); });

  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  ExperimentConfig c = parse_config(ss.str());
  // Relative input paths are taken relative to the config file.
  const auto base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&c.source.path, &c.dir.graph_path, &c.dir.traffic_path}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  }
  return c;
}

// ---- running ----------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& config, Verb verb) {
  config.validate();
  ExperimentResult result;
  if (verb == Verb::gen) {
    const TrainingSet data = make_source(config.source);
    std::filesystem::create_directories(config.output_dir);
    const std::string path = (std::filesystem::path(config.output_dir) / "data.csv").string();
    write_csv(path, data);
    result.files.push_back(path);
    result.summary = "wrote " + std::to_string(data.sample_count()) + " samples of " +
                     std::to_string(data.source_count()) + " sources to " + path + "\n";
    return result;
  }
  if (verb == Verb::dir) {
    result.points = run_dir_experiment(config);
  } else {
    const Prepared p = prepare(config, config.source);
    std::vector<Task> tasks;
    if (verb == Verb::design) add_proposed(tasks, config, p, {config.lambdas.front()});
    if (verb == Verb::sweep) add_proposed(tasks, config, p, config.lambdas);
    if (verb == Verb::sweep || verb == Verb::baselines) add_baselines(tasks, config, p);
    result.points = run_tasks(tasks, config.threads);
  }

  std::ostringstream s;
  const auto flags = monotonicity_report(result.points);
  s << "monotonicity: " << flags.size() << " dominated point(s)\n";
  for (const auto& f : flags) {
    s << "  " << series_key(f.point) << " lambda=" << num(f.point.lambda) << " measure=" << num(f.point.measure)
      << " is beaten by measure=" << num(f.dominated_by.measure) << " (" << f.dominated_by.distortion_db()
      << " dB vs " << f.point.distortion_db() << " dB)\n";
  }
  s << dominance_summary(result.points);
  result.summary = s.str();
  return result;
}

std::vector<MonotonicityFlag> monotonicity_report(const std::vector<TradeoffPoint>& points) {
  std::map<std::string, std::vector<TradeoffPoint>> series;
  for (const auto& p : points) series[series_key(p)].push_back(p);
  std::vector<MonotonicityFlag> flags;
  for (auto& [key, pts] : series) {
    std::stable_sort(pts.begin(), pts.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
      return a.measure < b.measure || (a.measure == b.measure && a.distortion < b.distortion);
    });
    std::optional<TradeoffPoint> best;  // lowest distortion at strictly smaller measure
    for (std::size_t k = 0; k < pts.size();) {
      std::size_t end = k;
      while (end < pts.size() && pts[end].measure == pts[k].measure) ++end;
      for (std::size_t m = k; m < end; ++m) {
        if (best && pts[m].distortion > best->distortion) flags.push_back({pts[m], *best});
      }
      if (!best || pts[k].distortion < best->distortion) best = pts[k];
      k = end;
    }
  }
  return flags;
}

std::optional<double> step_envelope(const std::vector<TradeoffPoint>& points, double measure) {
  std::optional<double> best;
  for (const auto& p : points) {
    if (p.measure <= measure && (!best || p.distortion < *best)) best = p.distortion;
  }
  return best;
}

std::vector<EnvelopeGap> envelope_gaps(const std::vector<TradeoffPoint>& proposed,
                                       const std::vector<TradeoffPoint>& baseline) {
  std::set<double> measures;
  for (const auto& p : proposed) measures.insert(p.measure);
  for (const auto& p : baseline) measures.insert(p.measure);
  std::vector<EnvelopeGap> gaps;
  if (measures.empty()) return gaps;
  const double lo = *measures.begin();
  const double hi = *measures.rbegin();
  for (double m : measures) {
    const auto dp = step_envelope(proposed, m);
    const auto db = step_envelope(baseline, m);
    if (!dp || !db) continue;
    gaps.push_back({m, 10.0 * std::log10(*db / *dp), m > lo && m < hi});
  }
  return gaps;
}

std::string dominance_summary(const std::vector<TradeoffPoint>& points) {
  std::map<std::string, std::vector<TradeoffPoint>> proposed, baselines;
  for (const auto& p : points) {
    if (p.set != "test") continue;
    (is_proposed(p) ? proposed : baselines)[p.method + "/" + p.optimizer].push_back(p);
  }
  if (proposed.empty() || baselines.empty()) return "";
  std::ostringstream s;
  s << "envelope gain on the test set (positive = proposed better):\n";
  for (const auto& [bkey, bpts] : baselines) {
    for (const auto& [pkey, ppts] : proposed) {
      if (ppts.front().kind != bpts.front().kind) continue;
      const char* symbol = bpts.front().kind == MeasureKind::complexity ? "C" : "W";
      std::optional<EnvelopeGap> best;
      for (const auto& g : envelope_gaps(ppts, bpts)) {
        char line[256];
        std::snprintf(line, sizeof line, "  %s vs %s at %s<=%g: %+.3f dB%s\n", pkey.c_str(), bkey.c_str(), symbol,
                      g.measure, g.gain_db, g.interior ? "" : " (end point)");
        s << line;
        if (g.interior && (!best || g.gain_db > best->gain_db)) best = g;
      }
      if (best) {
        char line[256];
        std::snprintf(line, sizeof line, "  largest interior gain of %s over %s: %+.3f dB at %s=%g\n", pkey.c_str(),
                      bkey.c_str(), best->gain_db, symbol, best->measure);
        s << line;
      }
    }
  }
  return s.str();
}

std::string curves_csv(const std::vector<TradeoffPoint>& points) {
  std::ostringstream s;
  s << "method,optimizer,set,lambda,measure_kind,measure,distortion,distortion_db,lagrangian,seed\n";
  for (const auto& p : points) {
    s << p.method << ',' << p.optimizer << ',' << p.set << ',' << num(p.lambda) << ',' << to_string(p.kind) << ','
      << num(p.measure) << ',' << num(p.distortion) << ',' << num(p.distortion_db()) << ',' << num(p.lagrangian())
      << ',' << p.seed << '\n';
  }
  return s.str();
}

std::string curves_json(const std::vector<TradeoffPoint>& points) {
  json rows = json::array();
  for (const auto& p : points) {
    rows.push_back({{"method", p.method},
                    {"optimizer", p.optimizer},
                    {"set", p.set},
                    {"lambda", p.lambda},
                    {"measure_kind", to_string(p.kind)},
                    {"measure", p.measure},
                    {"distortion", p.distortion},
                    {"distortion_db", p.distortion_db()},
                    {"lagrangian", p.lagrangian()},
                    {"seed", p.seed}});
  }
  json flags = json::array();
  for (const auto& f : monotonicity_report(points)) {
    flags.push_back({{"series", series_key(f.point)},
                     {"lambda", f.point.lambda},
                     {"measure", f.point.measure},
                     {"distortion", f.point.distortion},
                     {"dominated_by_measure", f.dominated_by.measure},
                     {"dominated_by_distortion", f.dominated_by.distortion}});
  }
  const json doc = {{"schema", kCurvesSchema}, {"points", rows}, {"dominated", flags}};
  return doc.dump(2) + "\n";
}

std::vector<TradeoffPoint> parse_curves_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("curves: ") + e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != kCurvesSchema) {
    throw ParseError(std::string("curves: expected schema ") + kCurvesSchema);
  }
  std::vector<TradeoffPoint> out;
  try {
    for (const auto& r : doc.at("points")) {
      TradeoffPoint p;
      p.method = r.at("method").get<std::string>();
      p.optimizer = r.at("optimizer").get<std::string>();
      p.set = r.at("set").get<std::string>();
      p.lambda = r.at("lambda").get<double>();
      p.kind = r.at("measure_kind").get<std::string>() == "cost" ? MeasureKind::cost : MeasureKind::complexity;
      p.measure = r.at("measure").get<double>();
      p.distortion = r.at("distortion").get<double>();
      p.seed = r.at("seed").get<std::uint64_t>();
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("curves: ") + e.what());
  }
  return out;
}

std::string timings_csv(const std::vector<TradeoffPoint>& points) {
  std::ostringstream s;
  s << "method,optimizer,lambda,seed,wall_seconds\n";
  for (const auto& p : points) {
    if (p.set != "train") continue;
    s << p.method << ',' << p.optimizer << ',' << num(p.lambda) << ',' << p.seed << ',' << num(p.wall_seconds)
      << '\n';
  }
  return s.str();
}

void emit_curves(const std::vector<TradeoffPoint>& points, const std::string& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  auto write = [&](const std::string& name, const std::string& body) {
    const auto path = std::filesystem::path(directory) / name;
    std::ofstream f(path);
    f << body;
    if (!f) throw DataError("cannot write " + path.string());
  };
  write("curves.csv", curves_csv(points));
  write("curves.json", curves_json(points));
  write("timings.csv", timings_csv(points));
}

}  // namespace lsdc
