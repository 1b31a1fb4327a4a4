#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace lsdc {

enum class MeasureKind { complexity, cost };

inline const char* to_string(MeasureKind k) { return k == MeasureKind::complexity ? "complexity" : "cost"; }

/// One operating point of a complexity- or cost-distortion curve.
struct TradeoffPoint {
  double lambda = 0.0;
  double distortion = 0.0;
  /// Decoder complexity C or communication cost W, per `kind`.
  double measure = 0.0;
  MeasureKind kind = MeasureKind::complexity;
  std::string method;     // "proposed", "grouping", "dir", "conventional", ...
  std::string optimizer;  // "greedy" or "da"
  std::string set = "train";
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  double lagrangian() const { return distortion + lambda * measure; }
  double distortion_db() const { return 10.0 * std::log10(distortion); }
};

}  // namespace lsdc
