#include "lsdc/anneal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "lsdc/error.hpp"

namespace lsdc {
namespace {

constexpr double kMinCellMass = 1e-12;

int rate_of_columns(Index columns) {
  int r = 0;
  while ((Index{1} << r) < columns) ++r;
  if ((Index{1} << r) != columns || r < 1) throw UsageError("soft encoder rows must have 2^R entries, R >= 1");
  return r;
}

std::vector<int> encoder_rates(const SoftEncoder& soft) {
  std::vector<int> rates;
  for (const auto& p : soft.probs) rates.push_back(rate_of_columns(p.cols()));
  return rates;
}

SoftDesign design_from(const TrainingSet& data, const SoftSystem& system) {
  const int n = data.source_count();
  if (static_cast<int>(system.quantizers.size()) != n || system.encoder.source_count() != n ||
      static_cast<int>(system.selector.size()) != n) {
    throw UsageError("soft system does not match the data");
  }
  const Eigen::VectorXd weights = system.weights.size() == 0 ? uniform_weights(n) : system.weights;
  SoftDesign design(data, system.quantizers, encoder_rates(system.encoder),
                    selector_decoders(system.selector, weights), system.encoder);
  if (!system.codebooks.tables.empty()) {
    if (static_cast<int>(system.codebooks.tables.size()) != n) throw UsageError("one codebook per source required");
    for (int i = 0; i < n; ++i) design.set_codebook(i, system.codebooks.tables[i]);
  }
  return design;
}

// In-place Kronecker product of the pattern marginals of `sources` for sample
// t; the first source ends up most significant. Built from the last source
// up so the inner loop runs over the long contiguous block.
std::size_t fill_distribution(std::span<const int> sources, const std::vector<RowMatrix>& marg,
                              const RegionIndex& regions, Index t, std::vector<double>& out) {
  out[0] = 1.0;
  std::size_t len = 1;
  for (auto it = sources.rbegin(); it != sources.rend(); ++it) {
    const int m = *it;
    const auto w = static_cast<std::size_t>(marg[m].cols());
    const double* row = marg[m].data() + static_cast<std::size_t>(regions.region(t, m)) * w;
    double* base = out.data();
    for (std::size_t b = w; b-- > 1;) {
      const double f = row[b];
      double* dst = base + b * len;
      for (std::size_t a = 0; a < len; ++a) dst[a] = f * base[a];
    }
    const double f0 = row[0];
    for (std::size_t a = 0; a < len; ++a) base[a] *= f0;
    len *= w;
  }
  return len;
}

struct Candidate {
  BitSubset subset;
  double score;
};

void consider(Candidate& best, const Candidate& c, BitSubset current) {
  const double tol = 1e-12 * std::abs(best.score);
  if (c.score < best.score - tol) {
    best = c;
  } else if (c.score <= best.score + tol && best.subset != current && c.subset != current &&
             lexicographically_less(c.subset, best.subset)) {
    best = c;
  }
}

}  // namespace

void SoftEncoder::validate() const {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    rate_of_columns(p.cols());
    if ((p.array() < 0.0).any() || !p.allFinite()) {
      throw UsageError("soft encoder " + std::to_string(i) + " has invalid probabilities");
    }
    if (((p.rowwise().sum().array() - 1.0).abs() > 1e-9).any()) {
      throw UsageError("soft encoder " + std::to_string(i) + " has a row not summing to 1");
    }
  }
}

SoftEncoder SoftEncoder::uniform(std::span<const HighRateQuantizer> quantizers, std::span<const int> rates) {
  if (quantizers.size() != rates.size()) throw UsageError("one rate per quantizer required");
  SoftEncoder s;
  for (std::size_t i = 0; i < quantizers.size(); ++i) {
    const int labels = 1 << rates[i];
    s.probs.push_back(RowMatrix::Constant(quantizers[i].region_count(), labels, 1.0 / labels));
  }
  return s;
}

SoftEncoder SoftEncoder::one_hot(std::span<const WzMap> maps) {
  SoftEncoder s;
  for (const auto& m : maps) {
    m.validate();
    RowMatrix p = RowMatrix::Zero(m.region_count(), m.label_count());
    for (int q = 0; q < m.region_count(); ++q) p(q, m.labels[q]) = 1.0;
    s.probs.push_back(std::move(p));
  }
  return s;
}

std::vector<WzMap> SoftEncoder::harden() const {
  std::vector<WzMap> maps;
  for (const auto& p : probs) {
    WzMap m;
    m.rate = rate_of_columns(p.cols());
    m.labels.resize(static_cast<std::size_t>(p.rows()));
    for (Index q = 0; q < p.rows(); ++q) {
      Index k = 0;
      p.row(q).maxCoeff(&k);  // first maximum
      m.labels[q] = static_cast<int>(k);
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

AnnealSchedule AnnealSchedule::resolved(const TrainingSet& data) const {
  AnnealSchedule s = *this;
  if (s.t_init == 0.0) {
    double max_var = 0.0;
    for (int i = 0; i < data.source_count(); ++i) {
      const auto x = data.source(i);
      max_var = std::max(max_var, (x.array() - x.mean()).square().mean());
    }
    s.t_init = 2.0 * max_var;
  }
  if (s.t_min == 0.0) s.t_min = 1e-4 * s.t_init;
  if (!(s.t_init > 0.0)) throw UsageError("annealing needs a positive initial temperature");
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw UsageError("cooling factor must lie in (0, 1)");
  if (!(s.t_min > 0.0 && s.t_min < s.t_init)) throw UsageError("need 0 < t_min < t_init");
  if (!(s.equilibrium_tol > 0.0) || s.max_inner_iterations < 1) throw UsageError("bad equilibrium settings");
  if (s.perturbation < 0.0) throw UsageError("perturbation must be nonnegative");
  return s;
}

RowMatrix gibbs_rows(const Eigen::Ref<const RowMatrix>& d, double temperature) {
  if (!(temperature > 0.0)) throw UsageError("temperature must be positive");
  RowMatrix p(d.rows(), d.cols());
  for (Index q = 0; q < d.rows(); ++q) {
    const double m = d.row(q).minCoeff();
    p.row(q) = (-(d.row(q).array() - m) / temperature).exp();
    p.row(q) /= p.row(q).sum();
  }
  return p;
}

SoftDesign::SoftDesign(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers, std::vector<int> rates,
                       std::vector<DecoderSpec> decoders, SoftEncoder encoder)
    : data_(&data),
      layout_(std::move(rates)),
      regions_(data, quantizers),
      decoders_(std::move(decoders)),
      encoder_(std::move(encoder)) {
  const int n = data.source_count();
  if (layout_.source_count() != n || encoder_.source_count() != n) {
    throw UsageError("soft design needs one rate and one encoder per source");
  }
  for (int i = 0; i < n; ++i) {
    if (encoder_.probs[i].rows() != quantizers[i].region_count() ||
        encoder_.probs[i].cols() != (Index{1} << layout_.rate(i))) {
      throw UsageError("soft encoder " + std::to_string(i) + " has the wrong shape");
    }
    means_.push_back(data.source(i).mean());
    sumsq_.push_back(data.source(i).squaredNorm());
  }
  encoder_.validate();
  for (const auto& d : decoders_) {
    if (d.source < 0 || d.source >= n) throw UsageError("decoder source out of range");
  }
  codebooks_.resize(decoders_.size());
  refresh_codebooks();
}

std::vector<SoftDesign::Group> SoftDesign::groups() const {
  std::vector<Group> out;
  for (std::size_t d = 0; d < decoders_.size(); ++d) {
    const auto& spec = decoders_[d];
    auto it = std::find_if(out.begin(), out.end(), [&](const Group& g) { return g.subset == spec.subset; });
    if (it == out.end()) {
      out.push_back(Group{spec.subset, {}, {}});
      it = out.end() - 1;
    }
    it->decoders.push_back(static_cast<int>(d));
    if (std::find(it->sources.begin(), it->sources.end(), spec.source) == it->sources.end()) {
      it->sources.push_back(spec.source);
    }
  }
  for (auto& g : out) std::sort(g.sources.begin(), g.sources.end());
  return out;
}

std::vector<RowMatrix> SoftDesign::marginals(const CellPacker& packer) const {
  std::vector<RowMatrix> marg(static_cast<std::size_t>(layout_.source_count()));
  for (int m : packer.sources()) {
    const auto& p = encoder_.probs[m];
    marg[m] = RowMatrix::Zero(p.rows(), Index{1} << packer.selected_bits(m));
    for (Index k = 0; k < p.cols(); ++k) {
      marg[m].col(packer.pattern(m, static_cast<int>(k))) += p.col(k);
    }
  }
  return marg;
}

void SoftDesign::accumulate(BitSubset subset, std::span<const int> sources, Eigen::VectorXd& mass,
                            RowMatrix& sums) const {
  const CellPacker packer(layout_, subset);
  const auto marg = marginals(packer);
  const auto cells = static_cast<Index>(packer.cell_count());
  mass = Eigen::VectorXd::Zero(cells);
  sums = RowMatrix::Zero(static_cast<Index>(sources.size()), cells);
  std::vector<double> buf(static_cast<std::size_t>(cells));
  const auto& x = data_->samples();
  for (Index t = 0; t < data_->sample_count(); ++t) {
    fill_distribution(packer.sources(), marg, regions_, t, buf);
    const Eigen::Map<const Eigen::RowVectorXd> b(buf.data(), cells);
    mass += b.transpose();
    for (std::size_t j = 0; j < sources.size(); ++j) sums.row(static_cast<Index>(j)) += x(t, sources[j]) * b;
  }
}

CellStats SoftDesign::soft_stats(int source, BitSubset subset) const {
  CellStats s;
  RowMatrix sums;
  const int src[] = {source};
  accumulate(subset, src, s.mass, sums);
  s.sum = sums.row(0).transpose();
  s.sumsq = sumsq_[source];
  return s;
}

std::vector<CellStats> SoftDesign::full_stats() const {
  std::vector<int> all(static_cast<std::size_t>(layout_.source_count()));
  for (int i = 0; i < layout_.source_count(); ++i) all[i] = i;
  Eigen::VectorXd mass;
  RowMatrix sums;
  accumulate(BitSubset::full(layout_.total()), all, mass, sums);
  std::vector<CellStats> out;
  for (int i = 0; i < layout_.source_count(); ++i) {
    out.push_back(CellStats{mass, sums.row(i).transpose(), sumsq_[i]});
  }
  return out;
}

double SoftDesign::distortion() const {
  double d = 0.0;
  for (const auto& g : groups()) {
    Eigen::VectorXd mass;
    RowMatrix sums;
    accumulate(g.subset, g.sources, mass, sums);
    for (int k : g.decoders) {
      const auto& spec = decoders_[k];
      const auto j = std::find(g.sources.begin(), g.sources.end(), spec.source) - g.sources.begin();
      const CellStats s{mass, sums.row(j).transpose(), sumsq_[spec.source]};
      d += spec.weight * s.sse(codebooks_[k]);
    }
  }
  return d / static_cast<double>(data_->sample_count());
}

double SoftDesign::refresh_codebooks() {
  double d = 0.0;
  for (const auto& g : groups()) {
    Eigen::VectorXd mass;
    RowMatrix sums;
    accumulate(g.subset, g.sources, mass, sums);
    for (int k : g.decoders) {
      const auto& spec = decoders_[k];
      const auto j = std::find(g.sources.begin(), g.sources.end(), spec.source) - g.sources.begin();
      const CellStats s{mass, sums.row(j).transpose(), sumsq_[spec.source]};
      codebooks_[k] = s.centroid(means_[spec.source], kMinCellMass);
      d += spec.weight * s.sse(codebooks_[k]);
    }
  }
  return d / static_cast<double>(data_->sample_count());
}

void SoftDesign::set_codebook(int decoder, CellTable table) {
  if (table.size() != (std::size_t{1} << decoders_[decoder].subset.size())) {
    throw UsageError("codebook size does not match decoder subset");
  }
  codebooks_[decoder] = std::move(table);
}

double SoftDesign::entropy() const {
  double h = 0.0;
  for (int i = 0; i < layout_.source_count(); ++i) {
    const auto& p = encoder_.probs[i];
    for (Index q = 0; q < p.rows(); ++q) {
      const auto n_q = static_cast<double>(regions_.members(i, static_cast<int>(q)).size());
      if (n_q == 0.0) continue;
      double row = 0.0;
      for (Index k = 0; k < p.cols(); ++k) {
        const double v = p(q, k);
        if (v > 0.0) row -= v * std::log(v);
      }
      h += n_q * row;
    }
  }
  return h / (static_cast<double>(layout_.source_count()) * static_cast<double>(data_->sample_count()));
}

RowMatrix SoftDesign::conditional_distortions(int source, bool with_constants) const {
  const int regions = regions_.region_count(source);
  const int labels = 1 << layout_.rate(source);
  RowMatrix scores = RowMatrix::Zero(regions, labels);
  const auto& x = data_->samples();

  for (const auto& g : groups()) {
    const CellPacker packer(layout_, g.subset);
    if (!with_constants && !packer.reads(source)) continue;
    bool any_weight = false;
    for (int k : g.decoders) any_weight |= decoders_[k].weight != 0.0;
    if (!any_weight) continue;

    const int own = packer.selected_bits(source);
    int below = 0;  // selected bits of later sources sit below this one's
    for (int m = source + 1; m < layout_.source_count(); ++m) below += packer.selected_bits(m);
    const std::uint64_t low_mask = (std::uint64_t{1} << below) - 1;
    std::vector<int> others;
    for (int m : packer.sources()) {
      if (m != source) others.push_back(m);
    }
    const auto reduced = static_cast<Index>(std::size_t{1} << (packer.width() - own));
    const auto marg = marginals(packer);

    const auto ns = g.sources.size();
    RowMatrix w_mass = RowMatrix::Zero(regions, reduced);
    std::vector<RowMatrix> w_sum(ns, RowMatrix::Zero(regions, reduced));
    RowMatrix w_sq = RowMatrix::Zero(regions, static_cast<Index>(ns));
    std::vector<double> buf(static_cast<std::size_t>(reduced));
    for (Index t = 0; t < data_->sample_count(); ++t) {
      fill_distribution(others, marg, regions_, t, buf);
      const Eigen::Map<const Eigen::RowVectorXd> b(buf.data(), reduced);
      const int q = regions_.region(t, source);
      w_mass.row(q) += b;
      for (std::size_t j = 0; j < ns; ++j) {
        const double v = x(t, g.sources[j]);
        w_sum[j].row(q) += v * b;
        w_sq(q, static_cast<Index>(j)) += v * v;
      }
    }

    std::vector<std::uint32_t> cell(static_cast<std::size_t>(reduced));
    for (int k = 0; k < labels; ++k) {
      const std::uint64_t pat = own > 0 ? packer.pattern(source, k) : 0;
      for (Index r = 0; r < reduced; ++r) {
        const auto ur = static_cast<std::uint64_t>(r);
        cell[r] = static_cast<std::uint32_t>(((ur >> below) << (below + own)) | (pat << below) | (ur & low_mask));
      }
      for (int q = 0; q < regions; ++q) {
        if (regions_.members(source, q).empty()) continue;
        for (int d : g.decoders) {
          const auto& spec = decoders_[d];
          if (spec.weight == 0.0) continue;
          const auto j = std::find(g.sources.begin(), g.sources.end(), spec.source) - g.sources.begin();
          const auto& values = codebooks_[d].values;
          const double* wm = w_mass.row(q).data();
          const double* ws = w_sum[j].row(q).data();
          double acc = with_constants ? w_sq(q, j) : 0.0;
          for (Index r = 0; r < reduced; ++r) {
            const double v = values[cell[r]];
            acc += v * (v * wm[r] - 2.0 * ws[r]);
          }
          scores(q, k) += spec.weight * acc;
        }
      }
    }
  }

  const double n = layout_.source_count();
  for (int q = 0; q < regions; ++q) {
    const auto n_q = static_cast<double>(regions_.members(source, q).size());
    if (n_q == 0.0) {
      scores.row(q).setZero();
    } else {
      scores.row(q) *= n / n_q;
    }
  }
  return scores;
}

void SoftDesign::gibbs_update(int source, double temperature) {
  encoder_.probs[source] = gibbs_rows(conditional_distortions(source, false), temperature);
}

void SoftDesign::set_subset(int decoder, BitSubset subset) {
  if (subset.span_end() > layout_.total()) throw UsageError("subset position out of range");
  decoders_[decoder].subset = subset;
  const int s = decoders_[decoder].source;
  codebooks_[decoder] = soft_stats(s, subset).centroid(means_[s], kMinCellMass);
}

void SoftDesign::set_encoder(SoftEncoder encoder) {
  if (encoder.source_count() != layout_.source_count()) throw UsageError("soft encoder has the wrong shape");
  for (int i = 0; i < layout_.source_count(); ++i) {
    if (encoder.probs[i].rows() != encoder_.probs[i].rows() || encoder.probs[i].cols() != encoder_.probs[i].cols()) {
      throw UsageError("soft encoder has the wrong shape");
    }
  }
  encoder.validate();
  encoder_ = std::move(encoder);
}

void SoftDesign::perturb(std::mt19937_64& rng, double amplitude) {
  std::uniform_real_distribution<double> noise(-amplitude, amplitude);
  for (auto& p : encoder_.probs) {
    for (Index q = 0; q < p.rows(); ++q) {
      for (Index k = 0; k < p.cols(); ++k) p(q, k) *= 1.0 + noise(rng);
      p.row(q) /= p.row(q).sum();
    }
  }
}

AnnealOutcome anneal(SoftDesign& design, const AnnealSchedule& schedule, std::uint64_t seed,
                     const AnnealSelectorStep& selector_step) {
  const AnnealSchedule s = schedule.resolved(design.data());
  std::mt19937_64 rng(seed);
  AnnealOutcome out;
  const int n = design.layout().source_count();
  for (double t = s.t_init; t >= s.t_min; t *= s.alpha) {
    if (s.perturbation > 0.0) design.perturb(rng, s.perturbation);
    // Codebooks must see the perturbation, or symmetric states stay symmetric.
    double j = design.refresh_codebooks() - t * design.entropy();
    for (int it = 0; it < s.max_inner_iterations; ++it) {
      for (int i = 0; i < n; ++i) design.gibbs_update(i, t);
      const double next = design.refresh_codebooks() - t * design.entropy();
      ++out.inner_iterations;
      out.max_free_energy_increase = std::max(out.max_free_energy_increase, next - j);
      const bool settled = std::abs(j - next) <= s.equilibrium_tol * std::abs(next);
      j = next;
      if (settled) break;
    }
    out.free_energy.push_back(j);
    if (selector_step) selector_step(design, t);
    ++out.temperature_steps;
  }
  out.encoder = design.encoder();
  out.decoders = design.decoders();
  return out;
}

BitSubset soft_select_subset(SoftDesign& design, int decoder, double lambda, BitSubset protected_bits,
                             const std::vector<CellStats>* full) {
  if (lambda < 0.0) throw UsageError("lambda must be nonnegative");
  const auto& spec = design.decoders()[decoder];
  const int source = spec.source;
  const BitLayout& layout = design.layout();
  const double per_cell = lambda / static_cast<double>(layout.source_count());
  const double count = static_cast<double>(design.data().sample_count());
  const double mean = design.data().source(source).mean();
  auto score = [&](BitSubset e) {
    const CellStats stats =
        full ? CellStats::marginalize((*full)[source], CellPacker(layout, e)) : design.soft_stats(source, e);
    return spec.weight * stats.centroid_sse(mean, kMinCellMass) / count + per_cell * std::ldexp(1.0, e.size());
  };
  const BitSubset start = spec.subset | protected_bits;
  Candidate best{start, score(start)};
  for (int p = 0; p < layout.total(); ++p) {
    if (protected_bits.contains(p)) continue;
    const BitSubset e = start.toggled(p);
    consider(best, Candidate{e, score(e)}, start);
  }
  design.set_subset(decoder, best.subset);
  return best.subset;
}

double soft_distortion(const TrainingSet& data, const SoftSystem& system) {
  return design_from(data, system).distortion();
}

double conditional_distortion(int source, int region, int label, const TrainingSet& data, const SoftSystem& system) {
  const SoftDesign design = design_from(data, system);
  if (source < 0 || source >= data.source_count()) throw UsageError("source out of range");
  const RowMatrix d = design.conditional_distortions(source, true);
  if (region < 0 || region >= d.rows() || label < 0 || label >= d.cols()) {
    throw UsageError("region or label out of range");
  }
  return d(region, label);
}

DecoderCodebook soft_codebook_update(const TrainingSet& data, const SoftSystem& system) {
  SoftDesign design = design_from(data, system);
  design.refresh_codebooks();
  return DecoderCodebook{design.codebooks()};
}

double entropy(const SoftEncoder& soft, const TrainingSet& data, std::span<const HighRateQuantizer> quantizers) {
  const RegionIndex regions(data, quantizers);
  double h = 0.0;
  for (int i = 0; i < soft.source_count(); ++i) {
    const auto& p = soft.probs[i];
    for (Index q = 0; q < p.rows(); ++q) {
      const auto n_q = static_cast<double>(regions.members(i, static_cast<int>(q)).size());
      for (Index k = 0; k < p.cols(); ++k) {
        const double v = p(q, k);
        if (v > 0.0) h -= n_q * v * std::log(v);
      }
    }
  }
  return h / (static_cast<double>(soft.source_count()) * static_cast<double>(data.sample_count()));
}

DaResult run_da(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers, std::span<const int> rates,
                const DaConfig& config) {
  const auto start_time = std::chrono::steady_clock::now();
  const int n = data.source_count();
  if (config.lambda < 0.0) throw UsageError("lambda must be nonnegative");
  if (static_cast<int>(rates.size()) != n || static_cast<int>(quantizers.size()) != n) {
    throw UsageError("one rate and one quantizer per source required");
  }
  const BitLayout layout(std::vector<int>(rates.begin(), rates.end()));
  const Eigen::VectorXd weights = config.weights.size() == 0 ? uniform_weights(n) : config.weights;
  if (weights.size() != n) throw UsageError("weights must have one entry per source");
  BitSubsetSelector selector;
  if (config.initial_selector) {
    selector = *config.initial_selector;
  } else if (config.lambda == 0.0 && layout.total() <= kFullStartBits) {
    // Without a complexity price every bit is worth reading.
    selector.assign(static_cast<std::size_t>(n), BitSubset::full(layout.total()));
  } else {
    for (int i = 0; i < n; ++i) selector.push_back(layout.own_bits(i));
  }
  if (static_cast<int>(selector.size()) != n) throw UsageError("one selector subset per source required");

  SoftDesign design(data, quantizers, layout.rates(), selector_decoders(selector, weights),
                    SoftEncoder::uniform(quantizers, rates));

  AnnealSelectorStep step;
  if (config.selector_search != SelectorSearch::fixed) {
    // Own bits stay selected while annealing: a source whose bits nobody reads
    // gets uniform Gibbs rows, which would keep it unread for good.
    step = [&](SoftDesign& d, double) {
      std::optional<std::vector<CellStats>> full;
      if (layout.total() <= 12) full = d.full_stats();
      for (int i = 0; i < n; ++i) {
        soft_select_subset(d, i, config.lambda, layout.own_bits(d.decoders()[i].source), full ? &*full : nullptr);
      }
    };
  }

  DaResult result;
  result.anneal = anneal(design, config.schedule, config.rng_seed, step);
  result.hardened = result.anneal.encoder.harden();
  for (const auto& d : result.anneal.decoders) result.annealed_selector.push_back(d.subset);

  GreedyConfig greedy;
  greedy.lambda = config.lambda;
  greedy.max_sweeps = config.max_sweeps;
  greedy.selector_search = config.selector_search;
  greedy.own_bits_mandatory = config.own_bits_mandatory;
  greedy.weights = weights;
  GreedyRun run = refine_greedy(data, quantizers, result.hardened, result.annealed_selector, greedy);

  result.system = std::move(run.system);
  result.lagrangian = run.lagrangian;
  result.point.lambda = config.lambda;
  result.point.distortion = distortion(data, result.system);
  result.point.measure = complexity(result.system.selector);
  result.point.kind = MeasureKind::complexity;
  result.point.method = "proposed";
  result.point.optimizer = "da";
  result.point.seed = config.rng_seed;
  result.point.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

}  // namespace lsdc
