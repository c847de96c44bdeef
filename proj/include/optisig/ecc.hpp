#pragma once

#include <optional>
#include <vector>

#include "optisig/bits.hpp"

namespace optisig {

// Window coding budget:
//   353 signature bits + 7 pad -> 45 bytes
//   RS(64,45) over GF(2^8)     -> 64 bytes = 512 bits, corrects <= 9 byte errors
//   + 4 pad bits               -> 516 bits
//   rate-1/2 convolutional (K=7, 171/133 octal, 6 zero tail bits) -> 1044 bits
inline constexpr int kRsN = 64;
inline constexpr int kRsK = 45;
inline constexpr int kRsCorrectable = (kRsN - kRsK) / 2;  // 9
inline constexpr int kConvInputBits = kRsN * 8 + 4;       // 516
inline constexpr int kConvTailBits = 6;
inline constexpr int kCodedBits = 2 * (kConvInputBits + kConvTailBits);  // 1044

// Soft values in [-1, +1]; sign is the hard decision (positive = 0), magnitude
// the confidence.
using SoftBits = std::vector<double>;

Bytes rs_encode(const Bytes& payload);                  // 45 -> 64 bytes
std::optional<Bytes> rs_decode(const Bytes& codeword);  // 64 -> 45 bytes or failure

// K=7 (171, 133) encoder, zero-state start, 6 zero tail bits appended.
Bits conv_encode(const Bits& bits);  // 516 -> 1044

// Maximum-likelihood decode under a correlation metric; the path is forced to
// terminate in the zero state. Always returns 516 bits.
Bits viterbi_soft(const SoftBits& soft);

Bits encode_window(const Bits& signature_bits);  // 353 -> 1044

struct WindowDecode {
  std::optional<Bits> signature_bits;  // 353 bits when RS succeeded
  Bits post_viterbi;                   // 512 codeword bits as seen after Viterbi
};
WindowDecode decode_window(const SoftBits& soft);

}  // namespace optisig
