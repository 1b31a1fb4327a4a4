#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "lsdc/error.hpp"
#include "lsdc/quantizer.hpp"

using namespace lsdc;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("two-point data gives the two points") {
  std::vector<double> v;
  for (int k = 0; k < 50; ++k) {
    v.push_back(-1.0);
    v.push_back(1.0);
  }
  const HighRateQuantizer q = design_lloyd_max(v, 2);
  REQUIRE(q.region_count() == 2);
  CHECK(q.codewords[0] == doctest::Approx(-1.0));
  CHECK(q.codewords[1] == doctest::Approx(1.0));
  CHECK(q.boundaries[0] == doctest::Approx(0.0));
}

TEST_CASE("one-bit Gaussian quantizer approaches +-sqrt(2/pi)") {
  const HighRateQuantizer q = design_lloyd_max(normals(10000, 1), 2);
  const double ideal = std::sqrt(2.0 / M_PI);
  CHECK(std::abs(q.codewords[0] + ideal) <= 0.02 * ideal);
  CHECK(std::abs(q.codewords[1] - ideal) <= 0.02 * ideal);
}

TEST_CASE("32-region design on Gaussian data") {
  const auto v = normals(20000, 2);
  const LloydResult r = design_lloyd_max_traced(v, 32);
  const auto& q = r.quantizer;
  CHECK(q.region_count() == 32);
  CHECK(std::is_sorted(q.codewords.begin(), q.codewords.end()));
  CHECK(std::adjacent_find(q.codewords.begin(), q.codewords.end()) == q.codewords.end());
  for (std::size_t j = 0; j + 1 < q.codewords.size(); ++j) {
    CHECK(q.boundaries[j] == doctest::Approx(0.5 * (q.codewords[j] + q.codewords[j + 1])));
  }
  // Lloyd iterations never increase the empirical distortion.
  for (std::size_t k = 1; k < r.distortion_trace.size(); ++k) {
    CHECK(r.distortion_trace[k] <= r.distortion_trace[k - 1] * (1.0 + 1e-12));
  }
  // Every region is used.
  std::vector<int> hits(32, 0);
  for (double x : v) ++hits[quantize(x, q)];
  CHECK(std::count(hits.begin(), hits.end(), 0) == 0);
}

TEST_CASE("quantize uses left-closed intervals") {
  const HighRateQuantizer q{{0.0}, {-1.0, 1.0}};
  CHECK(quantize(-3.0, q) == 0);
  CHECK(quantize(0.0, q) == 1);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 2.0);
  const HighRateQuantizer big = fixtures::random_quantizer(rng, 17);
  double prev = -1e9;
  int prev_region = 0;
  std::vector<double> xs(2000);
  for (auto& x : xs) x = g(rng);
  xs.insert(xs.end(), big.boundaries.begin(), big.boundaries.end());
  std::sort(xs.begin(), xs.end());
  for (double x : xs) {
    const int r = quantize(x, big);
    CHECK(r == fixtures::region_linear(x, big));
    CHECK((x >= prev && r >= prev_region));
    prev = x;
    prev_region = r;
  }
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(design_lloyd_max(std::vector<double>(10, 3.0), 2), DataError);
  CHECK_THROWS_AS(design_lloyd_max(std::vector<double>{1.0, 2.0}, 3), DataError);
  CHECK_THROWS_AS(design_lloyd_max(normals(10, 3), 1), UsageError);
}

TEST_CASE("empty cells are re-seeded so every region keeps samples") {
  // Heavy cluster plus far outliers; quantile starts leave cells empty.
  std::vector<double> v(500, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 1e-3 * static_cast<double>(k % 7);
  v.push_back(100.0);
  v.push_back(-100.0);
  const HighRateQuantizer q = design_lloyd_max(v, 6);
  std::vector<int> hits(6, 0);
  for (double x : v) ++hits[quantize(x, q)];
  CHECK(std::count(hits.begin(), hits.end(), 0) == 0);
}
