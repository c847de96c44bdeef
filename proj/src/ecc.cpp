#include "optisig/ecc.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace optisig {

// ---------------------------------------------------------------------------
// GF(2^8) arithmetic, primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11d)
// ---------------------------------------------------------------------------

namespace {

struct GfTables {
  std::array<std::uint8_t, 512> exp{};
  std::array<int, 256> log{};

  GfTables() {
    int x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= 0x11d;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    log[0] = -1;
  }

  std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
    if (!a || !b) return 0;
    return exp[log[a] + log[b]];
  }
  std::uint8_t div(std::uint8_t a, std::uint8_t b) const {
    if (!a) return 0;
    return exp[(log[a] - log[b] + 255) % 255];
  }
  std::uint8_t pow(int e) const { return exp[((e % 255) + 255) % 255]; }
};

const GfTables& gf() {
  static const GfTables tables;
  return tables;
}

constexpr int kNumRoots = kRsN - kRsK;  // 19 parity bytes
constexpr int kFcr = 1;                 // generator roots alpha^1 .. alpha^19

// Generator polynomial, ascending powers, degree kNumRoots.
const std::vector<std::uint8_t>& rs_generator() {
  static const std::vector<std::uint8_t> gen = [] {
    std::vector<std::uint8_t> g{1};
    for (int i = 0; i < kNumRoots; ++i) {
      std::uint8_t root = gf().pow(kFcr + i);
      std::vector<std::uint8_t> next(g.size() + 1, 0);
      for (std::size_t j = 0; j < g.size(); ++j) {
        next[j] ^= gf().mul(g[j], root);
        next[j + 1] ^= g[j];
      }
      g = std::move(next);
    }
    return g;
  }();
  return gen;
}

// Polynomial eval at x, coefficients ascending.
std::uint8_t poly_eval(const std::vector<std::uint8_t>& p, std::uint8_t x) {
  std::uint8_t acc = 0;
  for (std::size_t i = p.size(); i-- > 0;) acc = static_cast<std::uint8_t>(gf().mul(acc, x) ^ p[i]);
  return acc;
}

}  // namespace

Bytes rs_encode(const Bytes& payload) {
  if (payload.size() != kRsK)
    throw std::invalid_argument("rs_encode: payload must be " + std::to_string(kRsK) + " bytes");
  // Systematic encoding: codeword = payload || parity, where parity is the
  // remainder of payload * x^kNumRoots divided by the generator. The code is a
  // shortened RS(255, 236); virtual leading zeros do not disturb the LFSR.
  const auto& gen = rs_generator();
  std::array<std::uint8_t, kNumRoots> reg{};
  for (int i = 0; i < kRsK; ++i) {
    std::uint8_t feedback = static_cast<std::uint8_t>(payload[i] ^ reg[kNumRoots - 1]);
    for (int j = kNumRoots - 1; j > 0; --j)
      reg[j] = static_cast<std::uint8_t>(reg[j - 1] ^ gf().mul(feedback, gen[j]));
    reg[0] = gf().mul(feedback, gen[0]);
  }
  Bytes codeword(payload);
  codeword.resize(kRsN);
  for (int i = 0; i < kNumRoots; ++i) codeword[kRsK + i] = reg[kNumRoots - 1 - i];
  return codeword;
}

std::optional<Bytes> rs_decode(const Bytes& codeword) {
  if (codeword.size() != kRsN)
    throw std::invalid_argument("rs_decode: codeword must be " + std::to_string(kRsN) + " bytes");

  // Received polynomial r(x): byte i is the coefficient of x^(kRsN-1-i).
  // Syndromes S_m = r(alpha^(kFcr+m)), m = 0..kNumRoots-1.
  std::array<std::uint8_t, kNumRoots> synd{};
  bool clean = true;
  for (int m = 0; m < kNumRoots; ++m) {
    std::uint8_t x = gf().pow(kFcr + m);
    std::uint8_t acc = 0;
    for (int i = 0; i < kRsN; ++i) acc = static_cast<std::uint8_t>(gf().mul(acc, x) ^ codeword[i]);
    synd[m] = acc;
    clean = clean && acc == 0;
  }
  if (clean) return Bytes(codeword.begin(), codeword.begin() + kRsK);

  // Berlekamp-Massey: error locator Lambda(x), ascending coefficients.
  std::vector<std::uint8_t> lambda{1}, prev{1};
  int L = 0, m_shift = 1;
  std::uint8_t b = 1;
  for (int n = 0; n < kNumRoots; ++n) {
    std::uint8_t delta = synd[n];
    for (int i = 1; i <= L; ++i)
      if (i < static_cast<int>(lambda.size()))
        delta ^= gf().mul(lambda[i], synd[n - i]);
    if (delta == 0) {
      ++m_shift;
    } else if (2 * L <= n) {
      std::vector<std::uint8_t> tmp = lambda;
      std::uint8_t coef = gf().div(delta, b);
      if (lambda.size() < prev.size() + m_shift) lambda.resize(prev.size() + m_shift, 0);
      for (std::size_t i = 0; i < prev.size(); ++i)
        lambda[i + m_shift] ^= gf().mul(coef, prev[i]);
      L = n + 1 - L;
      prev = std::move(tmp);
      b = delta;
      m_shift = 1;
    } else {
      std::uint8_t coef = gf().div(delta, b);
      if (lambda.size() < prev.size() + m_shift) lambda.resize(prev.size() + m_shift, 0);
      for (std::size_t i = 0; i < prev.size(); ++i)
        lambda[i + m_shift] ^= gf().mul(coef, prev[i]);
      ++m_shift;
    }
  }
  while (!lambda.empty() && lambda.back() == 0) lambda.pop_back();
  const int n_err = static_cast<int>(lambda.size()) - 1;
  if (n_err <= 0 || n_err != L || n_err > kRsCorrectable) return std::nullopt;

  // Chien search over the 255 field positions; errors must land inside the
  // shortened codeword (positions 0..kRsN-1 counted from the last byte).
  std::vector<int> err_pos;
  for (int pos = 0; pos < 255; ++pos) {
    // Byte at index i has position exponent (kRsN - 1 - i); root X^-1 = alpha^-pos.
    if (poly_eval(lambda, gf().pow(-pos)) == 0) err_pos.push_back(pos);
  }
  if (static_cast<int>(err_pos.size()) != n_err) return std::nullopt;
  for (int pos : err_pos)
    if (pos >= kRsN) return std::nullopt;  // error in the virtual shortened prefix

  // Forney: Omega(x) = S(x) * Lambda(x) mod x^kNumRoots,
  // e_pos = Omega(X^-1) / Lambda'(X^-1) with X = alpha^pos (fcr = 1).
  std::vector<std::uint8_t> omega(kNumRoots, 0);
  for (int i = 0; i < kNumRoots; ++i) {
    std::uint8_t acc = 0;
    for (int j = 0; j <= i; ++j)
      if (j < static_cast<int>(lambda.size())) acc ^= gf().mul(synd[i - j], lambda[j]);
    omega[i] = acc;
  }
  Bytes corrected = codeword;
  for (int pos : err_pos) {
    std::uint8_t x_inv = gf().pow(-pos);
    std::uint8_t num = poly_eval(omega, x_inv);
    // Lambda'(x): odd-degree terms only in GF(2^m).
    std::uint8_t den = 0;
    for (std::size_t i = 1; i < lambda.size(); i += 2) {
      std::uint8_t term = lambda[i];
      // term * x_inv^(i-1)
      for (std::size_t j = 0; j + 1 < i; ++j) term = gf().mul(term, x_inv);
      den ^= term;
    }
    if (den == 0) return std::nullopt;
    std::uint8_t magnitude = gf().div(num, den);
    corrected[kRsN - 1 - pos] ^= magnitude;
  }

  // Re-check the syndromes on the corrected word.
  for (int m = 0; m < kNumRoots; ++m) {
    std::uint8_t x = gf().pow(kFcr + m);
    std::uint8_t acc = 0;
    for (int i = 0; i < kRsN; ++i) acc = static_cast<std::uint8_t>(gf().mul(acc, x) ^ corrected[i]);
    if (acc != 0) return std::nullopt;
  }
  return Bytes(corrected.begin(), corrected.begin() + kRsK);
}

// ---------------------------------------------------------------------------
// Convolutional code, K = 7, generators 171/133 (octal), rate 1/2
// ---------------------------------------------------------------------------

namespace {

constexpr unsigned kPolyA = 0171;
constexpr unsigned kPolyB = 0133;
constexpr int kStates = 64;

inline int parity(unsigned v) { return __builtin_popcount(v) & 1; }

// Output pair for (input bit, state); state holds the previous 6 input bits,
// most recent in bit 5.
inline void branch_bits(int bit, int state, int& out_a, int& out_b) {
  unsigned window = (static_cast<unsigned>(bit) << 6) | static_cast<unsigned>(state);
  out_a = parity(window & kPolyA);
  out_b = parity(window & kPolyB);
}

inline int next_state(int bit, int state) { return ((state >> 1) | (bit << 5)); }

}  // namespace

Bits conv_encode(const Bits& bits) {
  if (static_cast<int>(bits.size()) != kConvInputBits)
    throw std::invalid_argument("conv_encode: expected " + std::to_string(kConvInputBits) +
                                " bits, got " + std::to_string(bits.size()));
  Bits out;
  out.reserve(kCodedBits);
  int state = 0;
  auto push = [&](int bit) {
    int a, b;
    branch_bits(bit, state, a, b);
    out.push_back(static_cast<std::uint8_t>(a));
    out.push_back(static_cast<std::uint8_t>(b));
    state = next_state(bit, state);
  };
  for (auto bit : bits) push(bit);
  for (int i = 0; i < kConvTailBits; ++i) push(0);
  return out;
}

Bits viterbi_soft(const SoftBits& soft) {
  if (static_cast<int>(soft.size()) != kCodedBits)
    throw std::invalid_argument("viterbi_soft: expected " + std::to_string(kCodedBits) +
                                " soft values, got " + std::to_string(soft.size()));
  constexpr int kSteps = kConvInputBits + kConvTailBits;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  // Branch correlation: soft values are +1 for a confident 0 and -1 for a
  // confident 1, so the metric adds soft * (+1 if the branch emits 0 else -1).
  static const auto branch_table = [] {
    std::array<std::array<std::pair<int, int>, 2>, kStates> t{};
    for (int s = 0; s < kStates; ++s)
      for (int bit = 0; bit < 2; ++bit) {
        int a, b;
        branch_bits(bit, s, a, b);
        t[s][bit] = {a, b};
      }
    return t;
  }();

  std::vector<double> metric(kStates, kNegInf), next_metric(kStates);
  metric[0] = 0.0;
  // predecessor[t][next_state] = surviving previous state; the input bit that
  // caused the transition is bit 5 of next_state.
  std::vector<std::array<std::uint8_t, kStates>> predecessor(kSteps);

  for (int t = 0; t < kSteps; ++t) {
    const double sa = soft[2 * t];
    const double sb = soft[2 * t + 1];
    std::fill(next_metric.begin(), next_metric.end(), kNegInf);
    const int max_bit = (t < kConvInputBits) ? 1 : 0;  // tail forces zeros
    for (int s = 0; s < kStates; ++s) {
      if (metric[s] == kNegInf) continue;
      for (int bit = 0; bit <= max_bit; ++bit) {
        auto [a, b] = branch_table[s][bit];
        double m = metric[s] + (a ? -sa : sa) + (b ? -sb : sb);
        int ns = next_state(bit, s);
        if (m > next_metric[ns]) {
          next_metric[ns] = m;
          predecessor[t][ns] = static_cast<std::uint8_t>(s);
        }
      }
    }
    metric.swap(next_metric);
  }

  Bits decoded(kSteps);
  int state = 0;  // zero-terminated path
  for (int t = kSteps - 1; t >= 0; --t) {
    decoded[t] = static_cast<std::uint8_t>((state >> 5) & 1);
    state = predecessor[t][state];
  }
  decoded.resize(kConvInputBits);  // drop the flush bits
  return decoded;
}

Bits encode_window(const Bits& signature_bits) {
  if (static_cast<int>(signature_bits.size()) != 353)
    throw std::invalid_argument("encode_window: expected 353 bits");
  Bits padded = signature_bits;
  padded.resize(360, 0);
  Bytes payload = pack_bits(padded);  // 45 bytes
  Bytes codeword = rs_encode(payload);
  Bits conv_in = unpack_bits(codeword, kRsN * 8);
  conv_in.resize(kConvInputBits, 0);
  return conv_encode(conv_in);
}

WindowDecode decode_window(const SoftBits& soft) {
  Bits decoded = viterbi_soft(soft);
  WindowDecode result;
  result.post_viterbi = Bits(decoded.begin(), decoded.begin() + kRsN * 8);
  Bytes codeword = pack_bits(result.post_viterbi);
  auto payload = rs_decode(codeword);
  if (payload) result.signature_bits = unpack_bits(*payload, 353);
  return result;
}

}  // namespace optisig
