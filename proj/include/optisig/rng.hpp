#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace optisig {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// n-th derived stream seed; used to fan one master seed out to independent consumers.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t n) {
  std::uint64_t s = master ^ (0x6a09e667f3bcc908ULL + n * 0x9e3779b97f4a7c15ULL);
  splitmix64(s);
  return splitmix64(s);
}

// Stateless hash of a (seed, a, b) triple; backs order-independent per-frame noise.
inline std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = seed;
  s ^= 0xff51afd7ed558ccdULL + a;
  splitmix64(s);
  s ^= b * 0xc4ceb9fe1a85ec53ULL + 0x9e3779b97f4a7c15ULL;
  return splitmix64(s);
}

// Gaussian stream with an explicit Box-Muller transform on top of MT19937-64.
// std::normal_distribution is implementation-defined, so parties that must
// agree bit-for-bit (hyperplane derivation, synthetic tracks) go through this.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // (0, 1]
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace optisig
