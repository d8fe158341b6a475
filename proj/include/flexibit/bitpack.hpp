// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/dynamic_bitset.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "flexibit/format.hpp"

namespace flexibit {

using BitVector = boost::dynamic_bitset<std::uint64_t>;

/// Back-to-back packed elements. Element k occupies bits
/// [start_bit + k*P, start_bit + (k+1)*P), MSB of the element first.
struct PackedBuffer {
  BitVector bits;
  std::size_t elem_count = 0;
  FormatSpec fmt;
  std::size_t start_bit = 0;

  static PackedBuffer from_words(std::span<const std::uint64_t> words, const FormatSpec& fmt,
                                 std::size_t start_bit = 0);

  std::size_t precision() const { return static_cast<std::size_t>(fmt.total_bits()); }
  std::size_t packed_bits() const { return elem_count * precision(); }
  std::uint64_t element(std::size_t k) const;
  std::vector<std::uint64_t> words() const;

  friend bool operator==(const PackedBuffer&, const PackedBuffer&) = default;
};

/// Host layout: one element per container, left-aligned, low
/// (container_bits - P) bits zero.
struct PaddedStream {
  std::vector<std::uint64_t> words;  // raw container values
  int container_bits = 8;
  FormatSpec fmt;

  static PaddedStream from_elements(std::span<const std::uint64_t> elements, const FormatSpec& fmt,
                                    int container_bits = 8);
  std::uint64_t element(std::size_t k) const;
  std::vector<std::uint64_t> elements() const;
  std::size_t padded_bits() const { return words.size() * static_cast<std::size_t>(container_bits); }

  friend bool operator==(const PaddedStream&, const PaddedStream&) = default;
};

struct BufferMetadata {
  std::size_t start_addr = 0;  // bit offset
  int precision = 0;
  std::size_t elem_count = 0;
};

/// Output index of useful input bit i, or nullopt for a padding bit:
/// j = start_idx + i - floor(i / container) * (container - precision).
std::optional<std::size_t> packed_index(std::size_t i, std::size_t start_idx, int container_bits,
                                        int precision);

/// Crossbar packing engine fed through a fixed-width off-chip interface.
/// Each transfer carries whole containers; start_idx advances by
/// precision * containers_per_transfer after every transfer.
class BitPackingUnit {
 public:
  BitPackingUnit(const FormatSpec& fmt, int container_bits, std::size_t start_idx,
                 int interface_bits = 64);

  int containers_per_transfer() const { return containers_per_transfer_; }
  std::size_t start_idx() const { return start_idx_; }
  std::size_t transfers() const { return transfers_; }

  /// Maps one transfer's containers into `out`, growing it as needed.
  void transfer(std::span<const std::uint64_t> containers, BitVector& out);

 private:
  FormatSpec fmt_;
  int container_bits_;
  int containers_per_transfer_;
  std::size_t start_idx_;
  std::size_t transfers_ = 0;
};

PackedBuffer pack(const PaddedStream& stream, std::size_t start_idx = 0);
PaddedStream unpack(const PackedBuffer& buf, int container_bits = 8);
BufferMetadata metadata(const PackedBuffer& buf);

/// FXBP file: "FXBP", version u8, kind u8, exp_bits u8, man_bits u8,
/// elem_count u64 LE, start_bit u16 LE, then the packed bits MSB-first per
/// byte, zero-padded to a whole byte at the end.
inline constexpr std::size_t kFxbpHeaderBytes = 18;
void write_fxbp(std::ostream& os, const PackedBuffer& buf);
PackedBuffer read_fxbp(std::istream& is);

/// Padded host files hold one big-endian container of ceil(container/8)
/// bytes per element.
void write_padded(std::ostream& os, const PaddedStream& stream);
PaddedStream read_padded(std::istream& is, const FormatSpec& fmt, int container_bits);

}  // namespace flexibit
