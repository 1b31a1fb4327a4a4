#pragma once

#include <span>
#include <vector>

#include "lsdc/model.hpp"

namespace lsdc {

struct LloydOptions {
  double tolerance = 1e-6;  // relative distortion change
  int max_iterations = 200;
};

struct LloydResult {
  HighRateQuantizer quantizer;
  /// Empirical MSE after each iteration, starting with the initial codebook.
  std::vector<double> distortion_trace;
  int iterations = 0;
};

/// Scalar Lloyd-Max design from training samples, initialized at the sample
/// quantiles (j + 1/2) / regions. Empty cells are re-seeded at the sample
/// farthest from its codeword. Throws UsageError for regions < 2 and
/// DataError when the samples have fewer distinct values than regions.
LloydResult design_lloyd_max_traced(std::span<const double> samples, int regions, LloydOptions options = {});
HighRateQuantizer design_lloyd_max(std::span<const double> samples, int regions, LloydOptions options = {});

/// Region containing x; a value equal to a boundary belongs to the right.
inline int quantize(double x, const HighRateQuantizer& q) {
  const auto& b = q.boundaries;
  // Branch-light binary search: count of boundaries <= x.
  int lo = 0;
  int n = static_cast<int>(b.size());
  while (n > 0) {
    const int half = n / 2;
    if (b[lo + half] <= x) {
      lo += half + 1;
      n -= half + 1;
    } else {
      n = half;
    }
  }
  return lo;
}

/// Designs one quantizer per source column.
std::vector<HighRateQuantizer> design_quantizers(const TrainingSet& data, std::span<const int> regions,
                                                 LloydOptions options = {});

}  // namespace lsdc
