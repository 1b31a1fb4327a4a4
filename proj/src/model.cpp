#include "lsdc/model.hpp"

#include <cmath>
#include <string>

#include "lsdc/error.hpp"
#include "lsdc/quantizer.hpp"

namespace lsdc {

TrainingSet::TrainingSet(Eigen::MatrixXd samples) : samples_(std::move(samples)) {
  if (samples_.rows() < 1 || samples_.cols() < 1) throw DataError("training set needs at least one sample and one source");
  if (!samples_.allFinite()) throw DataError("training set contains non-finite values");
}

void HighRateQuantizer::validate() const {
  if (codewords.size() < 2) throw UsageError("quantizer needs at least 2 regions");
  if (boundaries.size() + 1 != codewords.size()) throw UsageError("quantizer needs region_count - 1 boundaries");
  for (std::size_t j = 1; j < boundaries.size(); ++j) {
    if (!(boundaries[j - 1] < boundaries[j])) throw UsageError("quantizer boundaries must be strictly increasing");
  }
  for (std::size_t j = 1; j < codewords.size(); ++j) {
    if (!(codewords[j - 1] < codewords[j])) throw UsageError("quantizer codewords must be strictly increasing");
  }
}

void WzMap::validate() const {
  if (rate < 1) throw UsageError("WZ-map rate must be at least 1");
  for (int k : labels) {
    if (k < 0 || k >= label_count()) throw UsageError("WZ-map label out of range");
  }
}

WzMap WzMap::identity(int rate) {
  WzMap m;
  m.rate = rate;
  m.labels.resize(std::size_t{1} << rate);
  for (std::size_t j = 0; j < m.labels.size(); ++j) m.labels[j] = static_cast<int>(j);
  return m;
}

CellTable CellTable::constant(double value) {
  CellTable t;
  t.values = {value};
  t.populated = {1};
  t.fallback = value;
  return t;
}

BitLayout SourceSystem::layout() const {
  std::vector<int> rates;
  rates.reserve(wz_maps.size());
  for (const auto& w : wz_maps) rates.push_back(w.rate);
  return BitLayout(std::move(rates));
}

void SourceSystem::validate() const {
  const auto n = quantizers.size();
  if (n == 0) throw UsageError("system has no sources");
  if (wz_maps.size() != n || selector.size() != n || codebooks.tables.size() != n ||
      static_cast<std::size_t>(weights.size()) != n) {
    throw UsageError("system components disagree on the source count");
  }
  const BitLayout lay = layout();
  for (std::size_t i = 0; i < n; ++i) {
    quantizers[i].validate();
    wz_maps[i].validate();
    if (wz_maps[i].region_count() != quantizers[i].region_count()) {
      throw UsageError("WZ-map " + std::to_string(i) + " does not cover every quantizer region");
    }
    if (selector[i].span_end() > lay.total()) throw UsageError("selector position beyond total rate");
    if (codebooks.tables[i].size() != (std::size_t{1} << selector[i].size())) {
      throw UsageError("codebook " + std::to_string(i) + " size does not match its bit subset");
    }
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw UsageError("source weights must be nonnegative and sum to 1");
  }
}

Eigen::VectorXd uniform_weights(int source_count) {
  return Eigen::VectorXd::Constant(source_count, 1.0 / source_count);
}

BitVector encode(std::span<const double> x, const SourceSystem& system) {
  const BitLayout lay = system.layout();
  if (static_cast<int>(x.size()) != lay.source_count()) throw UsageError("sample length differs from source count");
  std::uint64_t packed = 0;
  for (int i = 0; i < lay.source_count(); ++i) {
    const int label = system.wz_maps[i].labels[quantize(x[i], system.quantizers[i])];
    packed = (packed << lay.rate(i)) | static_cast<std::uint64_t>(label);
  }
  return BitVector(packed, lay.total());
}

BitVector encode(const Eigen::Ref<const Eigen::VectorXd>& x, const SourceSystem& system) {
  return encode(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), system);
}

Eigen::VectorXd decode(const BitVector& bits, const SourceSystem& system) {
  Eigen::VectorXd out(system.source_count());
  for (int i = 0; i < system.source_count(); ++i) {
    out[i] = system.codebooks.tables[i][extract_bits(bits, system.selector[i])];
  }
  return out;
}

double complexity(const BitSubsetSelector& selector) {
  if (selector.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : selector) total += std::ldexp(1.0, s.size());
  return total / static_cast<double>(selector.size());
}

double naive_decoder_storage(int source_count, std::span<const int> rates) {
  int total = 0;
  for (int r : rates) total += r;
  return static_cast<double>(source_count) * std::ldexp(1.0, total);
}

Eigen::MatrixXi quantize_all(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers) {
  if (static_cast<int>(quantizers.size()) != data.source_count()) {
    throw UsageError("quantizer count differs from source count");
  }
  Eigen::MatrixXi regions(data.sample_count(), data.source_count());
  for (int i = 0; i < data.source_count(); ++i) {
    const auto col = data.source(i);
    for (Index t = 0; t < data.sample_count(); ++t) regions(t, i) = quantize(col[t], quantizers[i]);
  }
  return regions;
}

std::vector<std::uint64_t> encode_all(const TrainingSet& data, std::span<const HighRateQuantizer> quantizers,
                                      std::span<const WzMap> wz_maps, const BitLayout& layout) {
  const Eigen::MatrixXi regions = quantize_all(data, quantizers);
  std::vector<std::uint64_t> packed(static_cast<std::size_t>(data.sample_count()), 0);
  for (int i = 0; i < layout.source_count(); ++i) {
    const auto& labels = wz_maps[i].labels;
    for (Index t = 0; t < data.sample_count(); ++t) {
      packed[t] = (packed[t] << layout.rate(i)) | static_cast<std::uint64_t>(labels[regions(t, i)]);
    }
  }
  return packed;
}

DistortionReport evaluate(const TrainingSet& data, const SourceSystem& system) {
  if (data.source_count() != system.source_count()) throw UsageError("data and system disagree on source count");
  const BitLayout lay = system.layout();
  const auto packed = encode_all(data, system.quantizers, system.wz_maps, lay);

  DistortionReport report;
  report.per_source_mse = Eigen::VectorXd::Zero(system.source_count());
  for (int i = 0; i < system.source_count(); ++i) {
    const CellPacker packer(lay, system.selector[i]);
    const CellTable& table = system.codebooks.tables[i];
    const auto col = data.source(i);
    double sse = 0.0;
    for (Index t = 0; t < data.sample_count(); ++t) {
      const auto cell = packer.cell_of_packed(packed[t]);
      if (!table.populated[cell]) ++report.fallback_hits;
      const double e = col[t] - table.values[cell];
      sse += e * e;
    }
    report.per_source_mse[i] = sse / static_cast<double>(data.sample_count());
  }
  report.distortion = system.weights.dot(report.per_source_mse);
  return report;
}

double distortion(const TrainingSet& data, const SourceSystem& system) { return evaluate(data, system).distortion; }

double lagrangian(double distortion, double complexity, double lambda) {
  if (lambda < 0.0) throw UsageError("lambda must be nonnegative");
  return distortion + lambda * complexity;
}

}  // namespace lsdc
