#include "lsdc/bits.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "lsdc/error.hpp"

namespace lsdc {

BitSubset::BitSubset(std::initializer_list<int> positions)
    : BitSubset(std::span<const int>(positions.begin(), positions.size())) {}

BitSubset::BitSubset(std::span<const int> positions) {
  for (int p : positions) {
    if (p < 0 || p >= 64) throw UsageError("bit position out of range: " + std::to_string(p));
    mask_ |= std::uint64_t{1} << p;
  }
}

BitSubset BitSubset::full(int count) { return range(0, count); }

BitSubset BitSubset::range(int first, int count) {
  if (count <= 0) return BitSubset();
  std::uint64_t block = count >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << count) - 1;
  return BitSubset(block << first);
}

int BitSubset::size() const { return std::popcount(mask_); }

std::vector<int> BitSubset::positions() const {
  std::vector<int> out;
  out.reserve(size());
  for (std::uint64_t m = mask_; m != 0; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

int BitSubset::span_end() const { return mask_ == 0 ? 0 : 64 - std::countl_zero(mask_); }

bool lexicographically_less(BitSubset a, BitSubset b) {
  const auto pa = a.positions();
  const auto pb = b.positions();
  return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
}

BitVector::BitVector(std::uint64_t packed, int length) : packed_(packed), length_(length) {
  if (length < 0 || length > kMaxTotalRate) throw UsageError("bit vector length out of range");
  if (length < 64 && (packed >> length) != 0) throw UsageError("packed value wider than bit vector");
}

BitVector BitVector::from_bits(std::initializer_list<int> bits) {
  std::uint64_t packed = 0;
  for (int b : bits) packed = (packed << 1) | (b ? 1U : 0U);
  return BitVector(packed, static_cast<int>(bits.size()));
}

std::uint64_t extract_bits(const BitVector& bits, BitSubset subset) {
  if (subset.span_end() > bits.length()) {
    throw UsageError("bit subset position " + std::to_string(subset.span_end() - 1) +
                     " outside received vector of " + std::to_string(bits.length()) + " bits");
  }
  std::uint64_t out = 0;
  for (int p : subset.positions()) out = (out << 1) | (bits[p] ? 1U : 0U);
  return out;
}

BitLayout::BitLayout(std::vector<int> rates) : rates_(std::move(rates)) {
  offsets_.reserve(rates_.size());
  for (int r : rates_) {
    if (r < 1) throw UsageError("every source rate must be at least 1 bit");
    offsets_.push_back(total_);
    total_ += r;
  }
  if (total_ > kMaxTotalRate) throw UsageError("total rate exceeds " + std::to_string(kMaxTotalRate) + " bits");
}

int BitLayout::source_of(int position) const {
  for (int i = 0; i < source_count(); ++i) {
    if (position < offsets_[i] + rates_[i]) return i;
  }
  throw UsageError("bit position beyond total rate");
}

BitSubset BitLayout::own_bits(int source) const { return BitSubset::range(offsets_[source], rates_[source]); }

std::uint64_t BitLayout::pack(std::span<const int> labels) const {
  std::uint64_t out = 0;
  for (int i = 0; i < source_count(); ++i) out = (out << rates_[i]) | static_cast<std::uint64_t>(labels[i]);
  return out;
}

CellPacker::CellPacker(const BitLayout& layout, BitSubset subset) : subset_(subset) {
  if (subset.span_end() > layout.total()) throw UsageError("bit subset exceeds total rate");
  width_ = subset.size();
  if (width_ > 30) throw UsageError("decoder bit subset too wide for a lookup table");

  const int n = layout.source_count();
  selected_bits_.assign(n, 0);
  pattern_shift_.assign(n, 0);
  parts_.assign(n, {});
  label_shift_.resize(n);
  label_mask_.resize(n);

  // Bits after source m's block in the cell index determine its shift.
  int remaining = width_;
  for (int m = 0; m < n; ++m) {
    label_shift_[m] = layout.shift(m);
    label_mask_[m] = layout.label_mask(m);
    const BitSubset mine = subset & layout.own_bits(m);
    const int bits = mine.size();
    selected_bits_[m] = bits;
    remaining -= bits;
    pattern_shift_[m] = remaining;
    if (bits == 0) continue;
    sources_.push_back(m);

    const int rate = layout.rate(m);
    const auto local = mine.positions();
    auto& table = parts_[m];
    table.resize(std::size_t{1} << rate);
    for (int label = 0; label < (1 << rate); ++label) {
      std::uint32_t pattern = 0;
      for (int p : local) {
        const int r = p - layout.offset(m);
        pattern = (pattern << 1) | ((label >> (rate - 1 - r)) & 1U);
      }
      table[label] = pattern << remaining;
    }
  }
}

std::uint32_t CellPacker::cell_of_packed(std::uint64_t packed) const {
  std::uint32_t c = 0;
  for (int m : sources_) c |= parts_[m][(packed >> label_shift_[m]) & label_mask_[m]];
  return c;
}

}  // namespace lsdc
