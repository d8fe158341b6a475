// SPDX-License-Identifier: Apache-2.0
#include "flexibit/bitpack.hpp"

#include <array>
#include <istream>
#include <ostream>

#include "flexibit/errors.hpp"

namespace flexibit {

namespace {

void check_container(const FormatSpec& fmt, int container_bits) {
  if (container_bits < fmt.total_bits()) {
    throw FormatError("container of " + std::to_string(container_bits) + " bits cannot hold " +
                      to_string(fmt));
  }
  if (container_bits > 64) throw FormatError("containers wider than 64 bits are not supported");
}

std::uint64_t mask(int bits) { return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1; }

}  // namespace

PackedBuffer PackedBuffer::from_words(std::span<const std::uint64_t> words, const FormatSpec& fmt,
                                      std::size_t start_bit) {
  PackedBuffer b;
  b.fmt = fmt;
  b.start_bit = start_bit;
  b.elem_count = words.size();
  const std::size_t p = b.precision();
  b.bits.resize(start_bit + words.size() * p);
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (p < 64 && (words[k] >> p) != 0) throw FormatError("element does not fit " + to_string(fmt));
    for (std::size_t t = 0; t < p; ++t) {
      b.bits[start_bit + k * p + t] = ((words[k] >> (p - 1 - t)) & 1) != 0;
    }
  }
  return b;
}

std::uint64_t PackedBuffer::element(std::size_t k) const {
  const std::size_t p = precision();
  std::uint64_t w = 0;
  for (std::size_t t = 0; t < p; ++t) w = (w << 1) | (bits[start_bit + k * p + t] ? 1u : 0u);
  return w;
}

std::vector<std::uint64_t> PackedBuffer::words() const {
  std::vector<std::uint64_t> out(elem_count);
  for (std::size_t k = 0; k < elem_count; ++k) out[k] = element(k);
  return out;
}

PaddedStream PaddedStream::from_elements(std::span<const std::uint64_t> elements, const FormatSpec& fmt,
                                         int container_bits) {
  check_container(fmt, container_bits);
  PaddedStream s;
  s.fmt = fmt;
  s.container_bits = container_bits;
  const int pad = container_bits - fmt.total_bits();
  s.words.reserve(elements.size());
  for (auto e : elements) s.words.push_back((e & mask(fmt.total_bits())) << pad);
  return s;
}

std::uint64_t PaddedStream::element(std::size_t k) const {
  return words[k] >> (container_bits - fmt.total_bits());
}

std::vector<std::uint64_t> PaddedStream::elements() const {
  std::vector<std::uint64_t> out(words.size());
  for (std::size_t k = 0; k < words.size(); ++k) out[k] = element(k);
  return out;
}

std::optional<std::size_t> packed_index(std::size_t i, std::size_t start_idx, int container_bits,
                                        int precision) {
  const auto c = static_cast<std::size_t>(container_bits);
  const auto p = static_cast<std::size_t>(precision);
  if (i % c >= p) return std::nullopt;
  return start_idx + i - (i / c) * (c - p);
}

BitPackingUnit::BitPackingUnit(const FormatSpec& fmt, int container_bits, std::size_t start_idx,
                               int interface_bits)
    : fmt_(fmt), container_bits_(container_bits), start_idx_(start_idx) {
  check_container(fmt, container_bits);
  if (interface_bits < container_bits) throw FormatError("interface narrower than one container");
  containers_per_transfer_ = interface_bits / container_bits;
}

void BitPackingUnit::transfer(std::span<const std::uint64_t> containers, BitVector& out) {
  if (containers.size() > static_cast<std::size_t>(containers_per_transfer_)) {
    throw FormatError("transfer carries more containers than the interface width allows");
  }
  const int p = fmt_.total_bits();
  const std::size_t needed = start_idx_ + containers.size() * static_cast<std::size_t>(p);
  if (out.size() < needed) out.resize(needed);
  const std::size_t input_bits = containers.size() * static_cast<std::size_t>(container_bits_);
  for (std::size_t i = 0; i < input_bits; ++i) {
    auto j = packed_index(i, start_idx_, container_bits_, p);
    if (!j) continue;  // padding bits are masked
    const std::uint64_t word = containers[i / container_bits_];
    const int pos = container_bits_ - 1 - static_cast<int>(i % container_bits_);
    out[*j] = ((word >> pos) & 1) != 0;
  }
  start_idx_ += containers.size() * static_cast<std::size_t>(p);
  ++transfers_;
}

PackedBuffer pack(const PaddedStream& stream, std::size_t start_idx) {
  check_container(stream.fmt, stream.container_bits);
  PackedBuffer b;
  b.fmt = stream.fmt;
  b.start_bit = start_idx;
  b.bits.resize(start_idx);
  BitPackingUnit bpu(stream.fmt, stream.container_bits, start_idx);
  const auto per = static_cast<std::size_t>(bpu.containers_per_transfer());
  std::span<const std::uint64_t> all(stream.words);
  for (std::size_t k = 0; k < all.size(); k += per) {
    bpu.transfer(all.subspan(k, std::min(per, all.size() - k)), b.bits);
  }
  b.elem_count = stream.words.size();
  return b;
}

PaddedStream unpack(const PackedBuffer& buf, int container_bits) {
  check_container(buf.fmt, container_bits);
  PaddedStream s;
  s.fmt = buf.fmt;
  s.container_bits = container_bits;
  s.words.assign(buf.elem_count, 0);
  const std::size_t c = static_cast<std::size_t>(container_bits);
  // Inverse crossbar: every useful input position i receives packed bit j(i).
  for (std::size_t i = 0; i < buf.elem_count * c; ++i) {
    auto j = packed_index(i, buf.start_bit, container_bits, buf.fmt.total_bits());
    if (!j || !buf.bits[*j]) continue;
    s.words[i / c] |= std::uint64_t{1} << (c - 1 - i % c);
  }
  return s;
}

BufferMetadata metadata(const PackedBuffer& buf) {
  return {buf.start_bit, buf.fmt.total_bits(), buf.elem_count};
}

namespace {

std::uint8_t kind_byte(const FormatSpec& f) {
  if (f.is_float()) return 0;
  return f.is_signed ? 1 : 2;
}

template <typename T>
void put_le(std::ostream& os, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_fxbp(std::ostream& os, const PackedBuffer& buf) {
  if (buf.start_bit > 0xFFFF) throw FormatError("start_bit does not fit the 16-bit header field");
  os.write("FXBP", 4);
  os.put(1);
  os.put(static_cast<char>(kind_byte(buf.fmt)));
  os.put(static_cast<char>(buf.fmt.exp_bits));
  os.put(static_cast<char>(buf.fmt.man_bits));
  put_le<std::uint64_t>(os, buf.elem_count);
  put_le<std::uint16_t>(os, static_cast<std::uint16_t>(buf.start_bit));
  const std::size_t nbits = buf.start_bit + buf.packed_bits();
  for (std::size_t byte = 0; byte * 8 < nbits; ++byte) {
    std::uint8_t v = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      std::size_t i = byte * 8 + b;
      if (i < nbits && buf.bits[i]) v |= static_cast<std::uint8_t>(0x80u >> b);
    }
    os.put(static_cast<char>(v));
  }
}

PackedBuffer read_fxbp(std::istream& is) {
  std::array<std::uint8_t, kFxbpHeaderBytes> h{};
  is.read(reinterpret_cast<char*>(h.data()), h.size());
  if (is.gcount() != static_cast<std::streamsize>(h.size())) throw FormatError("truncated FXBP header");
  if (h[0] != 'F' || h[1] != 'X' || h[2] != 'B' || h[3] != 'P') throw FormatError("bad FXBP magic");
  if (h[4] != 1) throw FormatError("unsupported FXBP version " + std::to_string(h[4]));
  FormatSpec fmt;
  switch (h[5]) {
    case 0: fmt = FormatSpec::fp(h[6], h[7]); break;
    case 1: fmt = FormatSpec::integer(h[7] + 1, true); break;
    case 2: fmt = FormatSpec::integer(h[7], false); break;
    default: throw FormatError("unknown FXBP kind " + std::to_string(h[5]));
  }
  if (h[5] != 0 && h[6] != 0) throw FormatError("integer FXBP payload with exponent bits");
  PackedBuffer b;
  b.fmt = fmt;
  b.elem_count = get_le<std::uint64_t>(h.data() + 8);
  b.start_bit = get_le<std::uint16_t>(h.data() + 16);
  const std::size_t nbits = b.start_bit + b.packed_bits();
  b.bits.resize(nbits);
  for (std::size_t byte = 0; byte * 8 < nbits; ++byte) {
    int c = is.get();
    if (c == std::char_traits<char>::eof()) throw FormatError("truncated FXBP payload");
    for (std::size_t bit = 0; bit < 8; ++bit) {
      std::size_t i = byte * 8 + bit;
      if (i < nbits) b.bits[i] = (static_cast<unsigned>(c) & (0x80u >> bit)) != 0;
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after FXBP payload");
  return b;
}

void write_padded(std::ostream& os, const PaddedStream& stream) {
  const int bytes = (stream.container_bits + 7) / 8;
  const int shift = bytes * 8 - stream.container_bits;
  for (auto w : stream.words) {
    std::uint64_t v = w << shift;
    for (int b = bytes - 1; b >= 0; --b) os.put(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
}

PaddedStream read_padded(std::istream& is, const FormatSpec& fmt, int container_bits) {
  check_container(fmt, container_bits);
  const int bytes = (container_bits + 7) / 8;
  const int shift = bytes * 8 - container_bits;
  const int pad = container_bits - fmt.total_bits();
  PaddedStream s;
  s.fmt = fmt;
  s.container_bits = container_bits;
  std::vector<char> chunk(static_cast<std::size_t>(bytes));
  while (is.read(chunk.data(), bytes)) {
    std::uint64_t v = 0;
    for (char c : chunk) v = (v << 8) | static_cast<std::uint8_t>(c);
    v >>= shift;
    s.words.push_back(v & (mask(fmt.total_bits()) << pad));
  }
  if (is.gcount() != 0) throw FormatError("padded file length is not a whole number of containers");
  return s;
}

}  // namespace flexibit
