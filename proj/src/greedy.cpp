#include "lsdc/greedy.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "lsdc/error.hpp"

namespace lsdc {
namespace {

HardDesign design_from(const SourceSystem& system, const TrainingSet& data) {
  system.validate();
  HardDesign design(data, system.quantizers, system.wz_maps, selector_decoders(system.selector, system.weights));
  for (int i = 0; i < system.source_count(); ++i) design.set_codebook(i, system.codebooks.tables[i]);
  return design;
}

SourceSystem system_from(const HardDesign& design, const Eigen::VectorXd& weights) {
  SourceSystem s;
  s.quantizers = design.quantizers();
  s.wz_maps = design.wz_maps();
  for (const auto& d : design.decoders()) s.selector.push_back(d.subset);
  s.codebooks.tables = design.codebooks();
  s.weights = weights;
  return s;
}

double selector_complexity(const HardDesign& design) {
  double total = 0.0;
  for (const auto& d : design.decoders()) total += std::ldexp(1.0, d.subset.size());
  return total / static_cast<double>(design.decoders().size());
}

struct Candidate {
  BitSubset subset;
  double score;
};

// Keeps `best` unless `c` is strictly better; equal scores prefer the
// incumbent current subset, then the lexicographically smallest.
void consider(Candidate& best, const Candidate& c, BitSubset current) {
  const double tol = 1e-12 * std::abs(best.score);
  if (c.score < best.score - tol) {
    best = c;
  } else if (c.score <= best.score + tol && best.subset != current && c.subset != current &&
             lexicographically_less(c.subset, best.subset)) {
    best = c;
  }
}

Eigen::VectorXd resolve_weights(const Eigen::VectorXd& weights, int n) {
  if (weights.size() == 0) return uniform_weights(n);
  if (weights.size() != n) throw UsageError("weights must have one entry per source");
  return weights;
}

}  // namespace

BitSubset select_subset(HardDesign& design, int decoder, double lambda, SelectorSearch search,
                        bool own_bits_mandatory, int full_search_cap) {
  if (lambda < 0.0) throw UsageError("lambda must be nonnegative");
  const auto& spec = design.decoders()[decoder];
  const int source = spec.source;
  const BitSubset current = spec.subset;
  if (search == SelectorSearch::fixed) {
    design.refresh_codebook(decoder);
    return current;
  }
  const BitLayout& layout = design.layout();
  const int total = layout.total();
  const double per_cell = lambda / static_cast<double>(layout.source_count());
  const BitSubset required = own_bits_mandatory ? layout.own_bits(source) : BitSubset();
  auto score = [&](BitSubset e) {
    return spec.weight * design.centroid_mse(source, e) + per_cell * std::ldexp(1.0, e.size());
  };

  const BitSubset start = current | required;
  Candidate best{start, score(start)};
  if (search == SelectorSearch::full) {
    if (total > full_search_cap) {
      throw UsageError("full selector search refused: R_r = " + std::to_string(total) + " exceeds cap " +
                       std::to_string(full_search_cap));
    }
    const std::uint64_t free_bits = BitSubset::full(total).mask() & ~required.mask();
    // Enumerate every subset of the free positions.
    std::uint64_t sub = 0;
    do {
      const BitSubset e(sub | required.mask());
      if (e != start) consider(best, Candidate{e, score(e)}, start);
      sub = (sub - free_bits) & free_bits;
    } while (sub != 0);
  } else {
    for (int p = 0; p < total; ++p) {
      if (required.contains(p)) continue;
      const BitSubset e = start.toggled(p);
      consider(best, Candidate{e, score(e)}, start);
    }
  }
  design.set_subset(decoder, best.subset);
  return best.subset;
}

WzMap update_wz_map(int source, const SourceSystem& system, const TrainingSet& data) {
  HardDesign design = design_from(system, data);
  design.update_wz_map(source);
  return design.wz_maps()[source];
}

BitSubset update_selector_full(int source, const SourceSystem& system, const TrainingSet& data, double lambda,
                               bool own_bits_mandatory, int cap) {
  HardDesign design = design_from(system, data);
  return select_subset(design, source, lambda, SelectorSearch::full, own_bits_mandatory, cap);
}

BitSubset update_selector_hamming1(int source, const SourceSystem& system, const TrainingSet& data, double lambda,
                                   bool own_bits_mandatory) {
  HardDesign design = design_from(system, data);
  return select_subset(design, source, lambda, SelectorSearch::hamming1, own_bits_mandatory);
}

DecoderCodebook update_codebooks(const SourceSystem& system, const TrainingSet& data) {
  // The old codebooks may not fit the selector; only their shape is checked.
  SourceSystem shaped = system;
  for (int i = 0; i < shaped.source_count(); ++i) {
    shaped.codebooks.tables[i] = CellTable::constant(0.0);
    shaped.codebooks.tables[i].values.resize(std::size_t{1} << shaped.selector[i].size());
    shaped.codebooks.tables[i].populated.resize(shaped.codebooks.tables[i].values.size());
  }
  HardDesign design = design_from(shaped, data);
  design.refresh_codebooks();
  return DecoderCodebook{design.codebooks()};
}

GreedyRun refine_greedy(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                        std::vector<WzMap> wz_maps, BitSubsetSelector selector, const GreedyConfig& config) {
  const int n = data.source_count();
  const Eigen::VectorXd weights = resolve_weights(config.weights, n);
  if (static_cast<int>(selector.size()) != n) throw UsageError("one selector subset per source required");
  HardDesign design(data, quantizers, std::move(wz_maps), selector_decoders(selector, weights));

  GreedyRun run;
  auto lagrangian_now = [&] { return design.distortion() + config.lambda * selector_complexity(design); };
  auto mark = [&] {
    if (config.record_trace) run.trace.push_back(lagrangian_now());
  };
  mark();

  for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
    int changes = 0;
    for (int i = 0; i < n; ++i) {
      changes += design.update_wz_map(i);
      mark();
    }
    if (config.selector_search != SelectorSearch::fixed) {
      for (int i = 0; i < n; ++i) {
        const BitSubset before = design.decoders()[i].subset;
        const BitSubset after = select_subset(design, i, config.lambda, config.selector_search,
                                              config.own_bits_mandatory, config.full_search_cap);
        changes += after != before;
        mark();
      }
    }
    design.refresh_codebooks();
    mark();
    run.sweeps = sweep + 1;
    if (changes == 0) {
      run.converged = true;
      break;
    }
  }
  run.lagrangian = lagrangian_now();
  run.system = system_from(design, weights);
  return run;
}

GreedyResult run_greedy(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                        std::span<const int> rates, const GreedyConfig& config) {
  const auto start_time = std::chrono::steady_clock::now();
  const int n = data.source_count();
  if (config.restarts < 1) throw UsageError("restarts must be at least 1");
  if (config.lambda < 0.0) throw UsageError("lambda must be nonnegative");
  if (static_cast<int>(rates.size()) != n || static_cast<int>(quantizers.size()) != n) {
    throw UsageError("one rate and one quantizer per source required");
  }
  const BitLayout layout(std::vector<int>(rates.begin(), rates.end()));
  if (config.initial_selector && static_cast<int>(config.initial_selector->size()) != n) {
    throw UsageError("one selector subset per source required");
  }

  GreedyResult result;
  std::optional<GreedyRun> best;
  for (int r = 0; r < config.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.rng_seed), static_cast<std::uint32_t>(config.rng_seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::vector<WzMap> maps(n);
    for (int i = 0; i < n; ++i) {
      std::uniform_int_distribution<int> label(0, (1 << rates[i]) - 1);
      maps[i].rate = rates[i];
      maps[i].labels.resize(quantizers[i].region_count());
      for (auto& l : maps[i].labels) l = label(rng);
    }
    BitSubsetSelector initial;
    if (config.initial_selector) {
      initial = *config.initial_selector;
    } else if (config.lambda == 0.0 && layout.total() <= kFullStartBits) {
      // Without a complexity price every bit is worth reading.
      initial.assign(static_cast<std::size_t>(n), BitSubset::full(layout.total()));
    } else {
      std::uniform_int_distribution<std::uint64_t> mask(0, BitSubset::full(layout.total()).mask());
      for (int i = 0; i < n; ++i) {
        const BitSubset own = layout.own_bits(i);
        if (config.selector_init == SelectorInit::own_bits) {
          initial.push_back(own);
        } else {
          const BitSubset drawn(mask(rng));
          initial.push_back(config.own_bits_mandatory ? BitSubset(drawn.mask() | own.mask()) : drawn);
        }
      }
    }
    GreedyRun run = refine_greedy(data, quantizers, std::move(maps), std::move(initial), config);
    result.restart_lagrangians.push_back(run.lagrangian);
    if (config.record_trace) result.traces.push_back(std::move(run.trace));
    if (!best || run.lagrangian < best->lagrangian) {
      best = std::move(run);
      result.best_restart = r;
    }
  }

  result.system = std::move(best->system);
  result.point.lambda = config.lambda;
  result.point.distortion = distortion(data, result.system);
  result.point.measure = complexity(result.system.selector);
  result.point.kind = MeasureKind::complexity;
  result.point.method = "proposed";
  result.point.optimizer = "greedy";
  result.point.seed = config.rng_seed;
  result.point.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

std::vector<int> uniform_group_sizes(int source_count, int group_size) {
  if (group_size < 1) throw UsageError("group size must be positive");
  std::vector<int> sizes;
  for (int left = source_count; left > 0; left -= group_size) sizes.push_back(std::min(group_size, left));
  return sizes;
}

std::vector<std::vector<int>> correlation_groups(const TrainingSet& data, std::span<const int> group_sizes) {
  const int n = data.source_count();
  if (std::accumulate(group_sizes.begin(), group_sizes.end(), 0) != n) {
    throw UsageError("group sizes must partition the sources");
  }
  const Eigen::MatrixXd centered = data.samples().rowwise() - data.samples().colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  Eigen::MatrixXd corr = cov.cwiseQuotient(sd * sd.transpose()).cwiseAbs();

  std::vector<bool> taken(n, false);
  std::vector<std::vector<int>> groups;
  for (int size : group_sizes) {
    if (size < 1) throw UsageError("group sizes must be positive");
    std::vector<int> g;
    for (int i = 0; i < n; ++i) {
      if (!taken[i]) {
        g.push_back(i);
        taken[i] = true;
        break;
      }
    }
    while (static_cast<int>(g.size()) < size) {
      int pick = -1;
      double best = -1.0;
      for (int c = 0; c < n; ++c) {
        if (taken[c]) continue;
        double mean = 0.0;
        for (int m : g) mean += corr(c, m);
        mean /= static_cast<double>(g.size());
        if (mean > best) {
          best = mean;
          pick = c;
        }
      }
      g.push_back(pick);
      taken[pick] = true;
    }
    std::sort(g.begin(), g.end());
    groups.push_back(std::move(g));
  }
  return groups;
}

BitSubsetSelector group_selector(const BitLayout& layout, const std::vector<std::vector<int>>& groups) {
  BitSubsetSelector selector(static_cast<std::size_t>(layout.source_count()));
  for (const auto& group : groups) {
    BitSubset bits;
    for (int m : group) bits = bits | layout.own_bits(m);
    for (int m : group) selector[m] = bits;
  }
  return selector;
}

std::vector<GroupingResult> grouping_baseline(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                                              std::span<const int> rates,
                                              std::span<const std::vector<int>> partitions,
                                              const GreedyConfig& config) {
  const BitLayout layout(std::vector<int>(rates.begin(), rates.end()));
  std::vector<GroupingResult> out;
  for (const auto& sizes : partitions) {
    GroupingResult g;
    g.groups = correlation_groups(data, sizes);
    GreedyConfig cfg = config;
    cfg.selector_search = SelectorSearch::fixed;
    cfg.initial_selector = group_selector(layout, g.groups);
    g.design = run_greedy(data, quantizers, rates, cfg);
    g.design.point.method = "grouping";
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace lsdc
