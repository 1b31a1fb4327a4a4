#pragma once

// Bit-level conventions shared by every module.
//
// The received index tuple of all sources is a string of R_r bits. Global
// position 0 is the most significant bit of source 0's index, followed by the
// rest of source 0's bits, then source 1, and so on. Internally the string is
// stored as an unsigned integer whose most significant used bit is position 0,
// so the integer is simply the concatenation of the per-source indices.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace lsdc {

/// Largest supported total rate R_r in bits.
inline constexpr int kMaxTotalRate = 62;

/// Set of global bit positions, stored as a mask where bit p marks position p.
class BitSubset {
 public:
  constexpr BitSubset() = default;
  constexpr explicit BitSubset(std::uint64_t mask) : mask_(mask) {}
  BitSubset(std::initializer_list<int> positions);
  explicit BitSubset(std::span<const int> positions);

  /// Positions [0, count).
  static BitSubset full(int count);
  /// Positions [first, first + count).
  static BitSubset range(int first, int count);

  constexpr std::uint64_t mask() const { return mask_; }
  int size() const;
  bool empty() const { return mask_ == 0; }
  bool contains(int position) const { return (mask_ >> position) & 1U; }

  BitSubset with(int position) const { return BitSubset(mask_ | (std::uint64_t{1} << position)); }
  BitSubset without(int position) const { return BitSubset(mask_ & ~(std::uint64_t{1} << position)); }
  BitSubset toggled(int position) const { return BitSubset(mask_ ^ (std::uint64_t{1} << position)); }
  bool includes(BitSubset other) const { return (mask_ & other.mask_) == other.mask_; }

  /// Sorted ascending.
  std::vector<int> positions() const;
  /// Largest position + 1, or 0 when empty.
  int span_end() const;

  friend constexpr bool operator==(BitSubset, BitSubset) = default;
  friend BitSubset operator|(BitSubset a, BitSubset b) { return BitSubset(a.mask_ | b.mask_); }
  friend BitSubset operator&(BitSubset a, BitSubset b) { return BitSubset(a.mask_ & b.mask_); }

 private:
  std::uint64_t mask_ = 0;
};

/// Lexicographic order on the ascending position lists; used for tie-breaks.
bool lexicographically_less(BitSubset a, BitSubset b);

/// Received bit string of fixed length.
class BitVector {
 public:
  BitVector() = default;
  BitVector(std::uint64_t packed, int length);
  /// Builds from explicit bits, position 0 first.
  static BitVector from_bits(std::initializer_list<int> bits);

  int length() const { return length_; }
  /// Concatenated integer form; position 0 is the most significant used bit.
  std::uint64_t packed() const { return packed_; }
  bool operator[](int position) const { return (packed_ >> (length_ - 1 - position)) & 1U; }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::uint64_t packed_ = 0;
  int length_ = 0;
};

/// Packs the bits of `bits` at the positions in `subset`: ascending positions,
/// the smallest position becomes the most significant bit. Empty subset -> 0.
/// Throws UsageError when a position is outside the vector.
std::uint64_t extract_bits(const BitVector& bits, BitSubset subset);

/// Per-source rates and their block offsets in the global bit string.
class BitLayout {
 public:
  BitLayout() = default;
  explicit BitLayout(std::vector<int> rates);

  int source_count() const { return static_cast<int>(rates_.size()); }
  int total() const { return total_; }
  int rate(int source) const { return rates_[source]; }
  int offset(int source) const { return offsets_[source]; }
  const std::vector<int>& rates() const { return rates_; }

  /// Source whose block contains global position p.
  int source_of(int position) const;
  /// Positions emitted by encoder `source`.
  BitSubset own_bits(int source) const;
  /// Right shift that brings `source`'s index to the low bits of a packed word.
  int shift(int source) const { return total_ - offsets_[source] - rates_[source]; }
  std::uint64_t label_mask(int source) const { return (std::uint64_t{1} << rates_[source]) - 1; }

  /// Concatenates per-source labels into the packed integer form.
  std::uint64_t pack(std::span<const int> labels) const;
  int label_of(std::uint64_t packed, int source) const {
    return static_cast<int>((packed >> shift(source)) & label_mask(source));
  }

 private:
  std::vector<int> rates_;
  std::vector<int> offsets_;
  int total_ = 0;
};

/// Maps label tuples to the cell index a decoder with a given bit subset
/// reads. Because positions are grouped by source, the cell index is the OR of
/// one precomputed contribution per source.
class CellPacker {
 public:
  CellPacker() = default;
  CellPacker(const BitLayout& layout, BitSubset subset);

  BitSubset subset() const { return subset_; }
  std::size_t cell_count() const { return std::size_t{1} << width_; }
  int width() const { return width_; }

  /// Sources contributing at least one selected bit, ascending.
  const std::vector<int>& sources() const { return sources_; }
  bool reads(int source) const { return selected_bits_[source] > 0; }
  int selected_bits(int source) const { return selected_bits_[source]; }
  /// Shift of `source`'s pattern inside the cell index.
  int pattern_shift(int source) const { return pattern_shift_[source]; }

  /// Contribution of `source` emitting `label`.
  std::uint32_t part(int source, int label) const { return parts_[source][label]; }
  /// Selected bits of `label`, packed (without the shift).
  std::uint32_t pattern(int source, int label) const {
    return parts_[source][label] >> pattern_shift_[source];
  }

  std::uint32_t cell_of_packed(std::uint64_t packed) const;

  template <typename LabelAt>
  std::uint32_t cell(LabelAt&& label_at) const {
    std::uint32_t c = 0;
    for (int m : sources_) c |= parts_[m][label_at(m)];
    return c;
  }

 private:
  BitSubset subset_;
  std::vector<int> label_shift_;
  std::vector<std::uint64_t> label_mask_;
  int width_ = 0;
  std::vector<int> sources_;
  std::vector<int> selected_bits_;
  std::vector<int> pattern_shift_;
  std::vector<std::vector<std::uint32_t>> parts_;
};

}  // namespace lsdc
