#include "lsdc/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsdc/error.hpp"

namespace lsdc {
namespace {

struct Partition {
  std::vector<double> boundaries;
  std::vector<std::size_t> begin;  // cell j spans [begin[j], begin[j+1]) of the sorted samples
};

Partition nearest_partition(const std::vector<double>& sorted, const std::vector<double>& codewords) {
  Partition p;
  const std::size_t k = codewords.size();
  p.boundaries.resize(k - 1);
  p.begin.resize(k + 1);
  p.begin[0] = 0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    p.boundaries[j] = 0.5 * (codewords[j] + codewords[j + 1]);
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), p.boundaries[j]);
    p.begin[j + 1] = std::max(p.begin[j], static_cast<std::size_t>(it - sorted.begin()));
  }
  p.begin[k] = sorted.size();
  return p;
}

double partition_mse(const std::vector<double>& sorted, const Partition& p, const std::vector<double>& codewords) {
  double sse = 0.0;
  for (std::size_t j = 0; j < codewords.size(); ++j) {
    for (std::size_t t = p.begin[j]; t < p.begin[j + 1]; ++t) {
      const double e = sorted[t] - codewords[j];
      sse += e * e;
    }
  }
  return sse / static_cast<double>(sorted.size());
}

// Moves one empty cell's codeword onto the sample with the largest error.
// Returns false when no cell is empty.
bool reseed_empty_cell(const std::vector<double>& sorted, const Partition& p, std::vector<double>& codewords) {
  const std::size_t k = codewords.size();
  std::size_t empty = k;
  for (std::size_t j = 0; j < k; ++j) {
    if (p.begin[j] == p.begin[j + 1]) {
      empty = j;
      break;
    }
  }
  if (empty == k) return false;

  // Within a cell of sorted samples the farthest point is at one of the ends.
  double worst = -1.0;
  double worst_value = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (p.begin[j] == p.begin[j + 1]) continue;
    for (double v : {sorted[p.begin[j]], sorted[p.begin[j + 1] - 1]}) {
      const double d = std::abs(v - codewords[j]);
      if (d > worst) {
        worst = d;
        worst_value = v;
      }
    }
  }
  codewords[empty] = worst_value;
  std::sort(codewords.begin(), codewords.end());
  return true;
}

}  // namespace

LloydResult design_lloyd_max_traced(std::span<const double> samples, int regions, LloydOptions options) {
  if (regions < 2) throw UsageError("Lloyd-Max design needs at least 2 regions");
  if (samples.empty()) throw DataError("Lloyd-Max design needs samples");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t unique_values = 1;
  for (std::size_t t = 1; t < sorted.size(); ++t) unique_values += sorted[t] != sorted[t - 1];
  if (unique_values < 2) throw DataError("degenerate data: all samples identical");
  if (unique_values < static_cast<std::size_t>(regions)) {
    throw DataError("degenerate data: " + std::to_string(unique_values) + " distinct values for " +
                    std::to_string(regions) + " regions");
  }

  const std::size_t n = sorted.size();
  std::vector<double> codewords(regions);
  for (int j = 0; j < regions; ++j) {
    const auto at = static_cast<std::size_t>((j + 0.5) / regions * static_cast<double>(n));
    codewords[j] = sorted[std::min(at, n - 1)];
  }

  LloydResult result;
  Partition part = nearest_partition(sorted, codewords);
  result.distortion_trace.push_back(partition_mse(sorted, part, codewords));

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double before = result.distortion_trace.back();
    while (reseed_empty_cell(sorted, part, codewords)) part = nearest_partition(sorted, codewords);

    for (int j = 0; j < regions; ++j) {
      double sum = 0.0;
      for (std::size_t t = part.begin[j]; t < part.begin[j + 1]; ++t) sum += sorted[t];
      codewords[j] = sum / static_cast<double>(part.begin[j + 1] - part.begin[j]);
    }
    part = nearest_partition(sorted, codewords);
    const double after = partition_mse(sorted, part, codewords);
    result.distortion_trace.push_back(after);
    result.iterations = iter + 1;
    if (before - after <= options.tolerance * before) break;
  }
  while (reseed_empty_cell(sorted, part, codewords)) part = nearest_partition(sorted, codewords);

  result.quantizer.codewords = codewords;
  result.quantizer.boundaries = part.boundaries;
  try {
    result.quantizer.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("Lloyd-Max produced an invalid quantizer: ") + e.what());
  }
  return result;
}

HighRateQuantizer design_lloyd_max(std::span<const double> samples, int regions, LloydOptions options) {
  return design_lloyd_max_traced(samples, regions, options).quantizer;
}

std::vector<HighRateQuantizer> design_quantizers(const TrainingSet& data, std::span<const int> regions,
                                                 LloydOptions options) {
  if (static_cast<int>(regions.size()) != data.source_count()) throw UsageError("one region count per source");
  std::vector<HighRateQuantizer> out;
  out.reserve(regions.size());
  for (int i = 0; i < data.source_count(); ++i) {
    const Eigen::VectorXd col = data.source(i);
    out.push_back(design_lloyd_max(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                                   regions[i], options));
  }
  return out;
}

}  // namespace lsdc
