#include "lsdc/design_state.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "lsdc/error.hpp"
#include "lsdc/quantizer.hpp"

namespace lsdc {

std::vector<DecoderSpec> selector_decoders(const BitSubsetSelector& selector, const Eigen::VectorXd& weights) {
  std::vector<DecoderSpec> out;
  out.reserve(selector.size());
  for (std::size_t i = 0; i < selector.size(); ++i) {
    out.push_back({static_cast<int>(i), selector[i], weights[static_cast<Index>(i)]});
  }
  return out;
}

namespace {

// Histogram statistics pay off while the full index space is not much larger
// than the training set.
bool histogram_worthwhile(int total_rate, Index samples) {
  return total_rate <= 16 && (Index{1} << total_rate) <= 2 * samples;
}

}  // namespace

RegionIndex::RegionIndex(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers)
    : regions_(quantize_all(data, quantizers)) {
  members_.resize(quantizers.size());
  for (std::size_t i = 0; i < quantizers.size(); ++i) {
    members_[i].resize(quantizers[i].region_count());
    for (Index t = 0; t < regions_.rows(); ++t) members_[i][regions_(t, i)].push_back(static_cast<int>(t));
  }
}

CellTable CellStats::centroid(double fallback, double min_mass) const {
  CellTable table;
  const auto cells = static_cast<std::size_t>(mass.size());
  table.values.assign(cells, fallback);
  table.populated.assign(cells, 0);
  table.fallback = fallback;
  for (std::size_t c = 0; c < cells; ++c) {
    if (mass[c] > min_mass) {
      table.values[c] = sum[c] / mass[c];
      table.populated[c] = 1;
    }
  }
  return table;
}

double CellStats::sse(const CellTable& table) const {
  double out = sumsq;
  for (Index c = 0; c < mass.size(); ++c) {
    const double v = table.values[c];
    out += v * (v * mass[c] - 2.0 * sum[c]);
  }
  return std::max(out, 0.0);
}

double CellStats::centroid_sse(double fallback, double min_mass) const {
  double out = sumsq;
  for (Index c = 0; c < mass.size(); ++c) {
    if (mass[c] > min_mass) {
      out -= sum[c] * sum[c] / mass[c];
    } else {
      out += fallback * (fallback * mass[c] - 2.0 * sum[c]);
    }
  }
  return std::max(out, 0.0);
}

CellStats CellStats::marginalize(const CellStats& fine, const CellPacker& target) {
  CellStats out;
  out.mass = Eigen::VectorXd::Zero(static_cast<Index>(target.cell_count()));
  out.sum = Eigen::VectorXd::Zero(static_cast<Index>(target.cell_count()));
  out.sumsq = fine.sumsq;
  for (Index f = 0; f < fine.mass.size(); ++f) {
    const auto c = target.cell_of_packed(static_cast<std::uint64_t>(f));
    out.mass[c] += fine.mass[f];
    out.sum[c] += fine.sum[f];
  }
  return out;
}

double weighted_distortion(std::span<const DecoderSpec> decoders, const Eigen::VectorXd& mse) {
  double d = 0.0;
  for (std::size_t k = 0; k < decoders.size(); ++k) d += decoders[k].weight * mse[static_cast<Index>(k)];
  return d;
}

HardDesign::HardDesign(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                       std::vector<WzMap> wz_maps, std::vector<DecoderSpec> decoders)
    : data_(&data),
      quantizers_(quantizers.begin(), quantizers.end()),
      regions_(data, quantizers),
      wz_maps_(std::move(wz_maps)),
      decoders_(std::move(decoders)) {
  const int n = data.source_count();
  if (static_cast<int>(wz_maps_.size()) != n) throw UsageError("one WZ-map per source required");
  std::vector<int> rates;
  for (int i = 0; i < n; ++i) {
    wz_maps_[i].validate();
    if (wz_maps_[i].region_count() != quantizers_[i].region_count()) {
      throw UsageError("WZ-map " + std::to_string(i) + " does not match its quantizer");
    }
    rates.push_back(wz_maps_[i].rate);
  }
  layout_ = BitLayout(std::move(rates));

  means_.resize(n);
  sumsq_.resize(n);
  for (int i = 0; i < n; ++i) {
    means_[i] = data.source(i).mean();
    sumsq_[i] = data.source(i).squaredNorm();
  }

  packed_.assign(static_cast<std::size_t>(data.sample_count()), 0);
  for (int i = 0; i < n; ++i) {
    const auto& labels = wz_maps_[i].labels;
    for (Index t = 0; t < data.sample_count(); ++t) {
      packed_[t] = (packed_[t] << layout_.rate(i)) | static_cast<std::uint64_t>(labels[regions_.region(t, i)]);
    }
  }
  use_histogram_ = histogram_worthwhile(layout_.total(), data.sample_count());
  rebuild_histogram();

  packers_.reserve(decoders_.size());
  codebooks_.resize(decoders_.size());
  for (std::size_t d = 0; d < decoders_.size(); ++d) {
    if (decoders_[d].source < 0 || decoders_[d].source >= n) throw UsageError("decoder source out of range");
    packers_.emplace_back(layout_, decoders_[d].subset);
    refresh_codebook(static_cast<int>(d));
  }
}

void HardDesign::rebuild_histogram() {
  if (!use_histogram_) return;
  const auto cells = Index{1} << layout_.total();
  const int n = layout_.source_count();
  hist_count_ = Eigen::VectorXd::Zero(cells);
  hist_sum_ = Eigen::MatrixXd::Zero(cells, n);
  const auto& x = data_->samples();
  for (Index t = 0; t < data_->sample_count(); ++t) {
    const auto c = static_cast<Index>(packed_[t]);
    hist_count_[c] += 1.0;
    hist_sum_.row(c) += x.row(t);
  }
  occupied_.clear();
  for (Index c = 0; c < cells; ++c) {
    if (hist_count_[c] > 0.0) occupied_.push_back(static_cast<std::uint64_t>(c));
  }
}

Eigen::VectorXd HardDesign::decoder_mse() const {
  Eigen::VectorXd mse(static_cast<Index>(decoders_.size()));
  const auto count = static_cast<double>(data_->sample_count());
  for (std::size_t d = 0; d < decoders_.size(); ++d) {
    const auto x = data_->source(decoders_[d].source);
    const auto& values = codebooks_[d].values;
    const auto& packer = packers_[d];
    double sse = 0.0;
    for (Index t = 0; t < data_->sample_count(); ++t) {
      const double e = x[t] - values[packer.cell_of_packed(packed_[t])];
      sse += e * e;
    }
    mse[static_cast<Index>(d)] = sse / count;
  }
  return mse;
}

double HardDesign::distortion() const { return weighted_distortion(decoders_, decoder_mse()); }

Eigen::MatrixXd HardDesign::wz_label_scores(int source) const {
  const int regions = regions_.region_count(source);
  const int labels = wz_maps_[source].label_count();
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(regions, labels);
  std::vector<double> per_label(labels);

  for (std::size_t d = 0; d < decoders_.size(); ++d) {
    const double w = decoders_[d].weight;
    if (w == 0.0) continue;
    const auto x = data_->source(decoders_[d].source);
    const auto& values = codebooks_[d].values;
    const auto& packer = packers_[d];
    const bool reads = packer.reads(source);
    std::uint32_t own_mask = 0;
    if (reads) {
      for (int k = 0; k < labels; ++k) own_mask |= packer.part(source, k);
    }
    for (int q = 0; q < regions; ++q) {
      const auto& members = regions_.members(source, q);
      if (members.empty()) continue;
      if (!reads) {
        double sse = 0.0;
        for (int t : members) {
          const double e = x[t] - values[packer.cell_of_packed(packed_[t])];
          sse += e * e;
        }
        scores.row(q).array() += w * sse;
        continue;
      }
      std::fill(per_label.begin(), per_label.end(), 0.0);
      for (int t : members) {
        const std::uint32_t base = packer.cell_of_packed(packed_[t]) & ~own_mask;
        const double xt = x[t];
        for (int k = 0; k < labels; ++k) {
          const double e = xt - values[base | packer.part(source, k)];
          per_label[k] += e * e;
        }
      }
      for (int k = 0; k < labels; ++k) scores(q, k) += w * per_label[k];
    }
  }
  return scores;
}

int HardDesign::update_wz_map(int source) {
  const Eigen::MatrixXd scores = wz_label_scores(source);
  WzMap& map = wz_maps_[source];
  int changed = 0;
  for (int q = 0; q < regions_.region_count(source); ++q) {
    if (regions_.members(source, q).empty()) continue;
    Index best = 0;
    scores.row(q).minCoeff(&best);
    const int current = map.labels[q];
    const double cur = scores(q, current);
    if (static_cast<int>(best) != current && scores(q, best) < cur - 1e-12 * cur) {
      map.labels[q] = static_cast<int>(best);
      ++changed;
    }
  }
  if (changed > 0) set_wz_map(source, map);
  return changed;
}

void HardDesign::set_wz_map(int source, WzMap map) {
  map.validate();
  if (map.rate != layout_.rate(source) || map.region_count() != regions_.region_count(source)) {
    throw UsageError("replacement WZ-map has the wrong shape");
  }
  wz_maps_[source] = std::move(map);
  const int shift = layout_.shift(source);
  const std::uint64_t clear = ~(layout_.label_mask(source) << shift);
  const auto& labels = wz_maps_[source].labels;
  for (Index t = 0; t < data_->sample_count(); ++t) {
    packed_[t] = (packed_[t] & clear) | (static_cast<std::uint64_t>(labels[regions_.region(t, source)]) << shift);
  }
  rebuild_histogram();
}

CellStats HardDesign::cell_stats(int source, BitSubset subset) const {
  const CellPacker packer(layout_, subset);
  CellStats s;
  s.mass = Eigen::VectorXd::Zero(static_cast<Index>(packer.cell_count()));
  s.sum = Eigen::VectorXd::Zero(static_cast<Index>(packer.cell_count()));
  s.sumsq = sumsq_[source];
  if (use_histogram_) {
    for (std::uint64_t full : occupied_) {
      const auto c = packer.cell_of_packed(full);
      s.mass[c] += hist_count_[static_cast<Index>(full)];
      s.sum[c] += hist_sum_(static_cast<Index>(full), source);
    }
  } else {
    const auto x = data_->source(source);
    for (Index t = 0; t < data_->sample_count(); ++t) {
      const auto c = packer.cell_of_packed(packed_[t]);
      s.mass[c] += 1.0;
      s.sum[c] += x[t];
    }
  }
  return s;
}

double HardDesign::centroid_mse(int source, BitSubset subset) const {
  return cell_stats(source, subset).centroid_sse(means_[source], 0.0) / static_cast<double>(data_->sample_count());
}

void HardDesign::set_subset(int decoder, BitSubset subset) {
  decoders_[decoder].subset = subset;
  packers_[decoder] = CellPacker(layout_, subset);
  refresh_codebook(decoder);
}

void HardDesign::set_codebook(int decoder, CellTable table) {
  if (table.size() != packers_[decoder].cell_count()) throw UsageError("codebook size does not match decoder subset");
  codebooks_[decoder] = std::move(table);
}

void HardDesign::refresh_codebook(int decoder) {
  const auto& spec = decoders_[decoder];
  codebooks_[decoder] = cell_stats(spec.source, spec.subset).centroid(means_[spec.source], 0.0);
}

void HardDesign::refresh_codebooks() {
  for (std::size_t d = 0; d < decoders_.size(); ++d) refresh_codebook(static_cast<int>(d));
}

}  // namespace lsdc
