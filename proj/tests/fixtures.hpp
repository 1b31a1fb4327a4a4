#pragma once

// Random instances and slow reference implementations shared by the tests.
// The references deliberately avoid the library's packing helpers.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lsdc/model.hpp"

namespace fixtures {

using lsdc::Index;

inline lsdc::TrainingSet normal_data(int n, Index count, std::uint64_t seed, double rho = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(count, n);
  for (Index t = 0; t < count; ++t) {
    double prev = g(rng);
    x(t, 0) = prev;
    for (int i = 1; i < n; ++i) {
      prev = rho * prev + std::sqrt(1.0 - rho * rho) * g(rng);
      x(t, i) = prev;
    }
  }
  return lsdc::TrainingSet(std::move(x));
}

/// Quantizer with sorted random boundaries and codewords between them.
inline lsdc::HighRateQuantizer random_quantizer(std::mt19937_64& rng, int regions) {
  std::normal_distribution<double> g;
  std::vector<double> b(static_cast<std::size_t>(regions - 1));
  for (auto& v : b) v = g(rng);
  std::sort(b.begin(), b.end());
  lsdc::HighRateQuantizer q;
  q.boundaries = b;
  for (int j = 0; j < regions; ++j) {
    const double lo = j == 0 ? b.front() - 1.0 : b[j - 1];
    const double hi = j == regions - 1 ? b.back() + 1.0 : b[j];
    q.codewords.push_back(0.5 * (lo + hi));
  }
  return q;
}

inline lsdc::WzMap random_map(std::mt19937_64& rng, int regions, int rate) {
  std::uniform_int_distribution<int> label(0, (1 << rate) - 1);
  lsdc::WzMap m;
  m.rate = rate;
  for (int j = 0; j < regions; ++j) m.labels.push_back(label(rng));
  return m;
}

inline lsdc::BitSubset random_subset(std::mt19937_64& rng, int total) {
  std::uniform_int_distribution<std::uint64_t> u(0, (std::uint64_t{1} << total) - 1);
  return lsdc::BitSubset(u(rng));
}

inline lsdc::CellTable random_table(std::mt19937_64& rng, int bits) {
  std::normal_distribution<double> g;
  lsdc::CellTable t;
  for (int c = 0; c < (1 << bits); ++c) {
    t.values.push_back(g(rng));
    t.populated.push_back(1);
  }
  return t;
}

/// Fully random single-sink system.
inline lsdc::SourceSystem random_system(std::mt19937_64& rng, const std::vector<int>& rates, int regions) {
  lsdc::SourceSystem s;
  const int n = static_cast<int>(rates.size());
  int total = 0;
  for (int r : rates) total += r;
  for (int i = 0; i < n; ++i) {
    s.quantizers.push_back(random_quantizer(rng, regions));
    s.wz_maps.push_back(random_map(rng, regions, rates[i]));
    s.selector.push_back(random_subset(rng, total));
    s.codebooks.tables.push_back(random_table(rng, s.selector.back().size()));
  }
  s.weights = lsdc::uniform_weights(n);
  return s;
}

/// Region by linear scan (left-closed intervals).
inline int region_linear(double x, const lsdc::HighRateQuantizer& q) {
  int r = 0;
  for (double b : q.boundaries) {
    if (x >= b) ++r;
  }
  return r;
}

/// Received bits of a sample, position 0 first, built bit by bit.
inline std::vector<int> bits_of(const Eigen::RowVectorXd& x, const lsdc::SourceSystem& s) {
  std::vector<int> bits;
  for (int i = 0; i < s.source_count(); ++i) {
    const int label = s.wz_maps[i].labels[region_linear(x[i], s.quantizers[i])];
    for (int b = s.wz_maps[i].rate - 1; b >= 0; --b) bits.push_back((label >> b) & 1);
  }
  return bits;
}

/// Cell index read through `positions` (any order): sorted ascending, first
/// position most significant.
inline std::uint64_t cell_of(const std::vector<int>& bits, std::vector<int> positions) {
  std::sort(positions.begin(), positions.end());
  std::uint64_t c = 0;
  for (int p : positions) c = (c << 1) | static_cast<std::uint64_t>(bits[p]);
  return c;
}

/// Weighted MSE by direct per-sample evaluation.
inline double distortion_oracle(const lsdc::TrainingSet& data, const lsdc::SourceSystem& s) {
  double d = 0.0;
  for (Index t = 0; t < data.sample_count(); ++t) {
    const Eigen::RowVectorXd x = data.samples().row(t);
    const auto bits = bits_of(x, s);
    for (int i = 0; i < s.source_count(); ++i) {
      const double xhat = s.codebooks.tables[i].values[cell_of(bits, s.selector[i].positions())];
      d += s.weights[i] * (x[i] - xhat) * (x[i] - xhat);
    }
  }
  return d / static_cast<double>(data.sample_count());
}

/// Centroid table for source i reading `positions`, by direct grouping.
inline std::vector<double> centroid_oracle(const lsdc::TrainingSet& data, const lsdc::SourceSystem& s, int i,
                                           const std::vector<int>& positions, double fallback) {
  const std::size_t cells = std::size_t{1} << positions.size();
  std::vector<double> sum(cells, 0.0), count(cells, 0.0);
  for (Index t = 0; t < data.sample_count(); ++t) {
    const Eigen::RowVectorXd x = data.samples().row(t);
    const auto c = cell_of(bits_of(x, s), positions);
    sum[c] += x[i];
    count[c] += 1.0;
  }
  std::vector<double> out(cells, fallback);
  for (std::size_t c = 0; c < cells; ++c) {
    if (count[c] > 0) out[c] = sum[c] / count[c];
  }
  return out;
}

inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace fixtures
