#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace optisig {

// Bits are stored one per byte, value 0 or 1, index 0 first.
using Bits = std::vector<std::uint8_t>;
using Bytes = std::vector<std::uint8_t>;

inline int hamming(const Bits& a, const Bits& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("hamming: length mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

// MSB-first packing; trailing bits of the last byte are zero-padded.
inline Bytes pack_bits(const Bits& bits) {
  Bytes out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return out;
}

inline Bits unpack_bits(const Bytes& bytes, std::size_t nbits) {
  if (nbits > bytes.size() * 8) throw std::invalid_argument("unpack_bits: not enough bytes");
  Bits out(nbits);
  for (std::size_t i = 0; i < nbits; ++i)
    out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
  return out;
}

inline void append_uint(Bits& bits, std::uint64_t value, int width) {
  for (int i = width - 1; i >= 0; --i) bits.push_back((value >> i) & 1u);
}

inline std::uint64_t read_uint(const Bits& bits, std::size_t pos, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 1) | bits[pos + i];
  return v;
}

inline Bits slice(const Bits& bits, std::size_t pos, std::size_t len) {
  if (pos + len > bits.size()) throw std::invalid_argument("slice: out of range");
  return Bits(bits.begin() + pos, bits.begin() + pos + len);
}

inline std::string to_hex(const Bytes& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

inline Bytes from_hex(const std::string& hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument(std::string("from_hex: bad character '") + c + "'");
  };
  if (hex.size() % 2) throw std::invalid_argument("from_hex: odd length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

}  // namespace optisig
