#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "optisig/bits.hpp"

namespace optisig {

// Random-hyperplane hasher for cosine similarity. Each of the k hash bits is
// the sign of the input's projection onto a Gaussian hyperplane normal, so the
// expected Hamming distance between two hashes is k * angle / pi.
//
// Hyperplanes are derived deterministically from (input_dim, k, seed):
// MT19937-64 seeded with `seed`, Box-Muller gaussians, filled row-major
// (hyperplane 0 entry 0, entry 1, ... then hyperplane 1). Two parties holding
// the same seed reproduce the hasher bit-for-bit.
class Hasher {
 public:
  Hasher(int input_dim, int k, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int k() const { return k_; }
  std::uint64_t seed() const { return seed_; }

  // Row i of the hyperplane matrix.
  std::span<const double> hyperplane(int i) const {
    return {planes_.data() + static_cast<std::size_t>(i) * input_dim_,
            static_cast<std::size_t>(input_dim_)};
  }

  // Bit i = 1 iff dot(hyperplane_i, v) >= 0 (ties count as 1).
  // Throws DegenerateInput for an all-zero vector and std::invalid_argument on
  // a dimension mismatch.
  Bits hash(std::span<const double> v) const;

 private:
  int input_dim_;
  int k_;
  std::uint64_t seed_;
  std::vector<double> planes_;  // k rows of input_dim, row-major
};

inline Hasher make_hasher(int input_dim, int k, std::uint64_t seed) {
  return Hasher(input_dim, k, seed);
}

// Subtracts the arithmetic mean from every entry. Pearson correlation of two
// raw vectors equals the cosine similarity of their zero-meaned versions.
std::vector<double> zero_mean(std::span<const double> v);

// Expected Hamming distance k * theta / pi between hashes of vectors at angle
// theta. theta must lie in [0, pi].
double expected_distance(int k, double theta);

// Probability that thresholding k-bit hash distances at k*theta_th/pi makes
// the same accept/reject call as thresholding the underlying angle at theta_th,
// jointly over one vector pair per angle across [0, pi]:
//
//   P(k) = exp( int_0^theta_th ln Pr[D <= d_th] dtheta )
//        * exp( int_theta_th^pi ln Pr[D >  d_th] dtheta ),   D ~ Bin(k, theta/pi)
//
// The real-valued cutoff d_th = k*theta_th/pi is applied as a randomized
// threshold: linear interpolation between the binomial CDF at floor(d_th) and
// floor(d_th)+1 (equivalently, a distance of exactly floor(d_th)+1 is accepted
// with probability frac(d_th)). A hard floor() cutoff would make P(k) sawtooth
// in k; the interpolated form is monotone and is what the Monte Carlo oracle
// simulates. Each integral uses composite Simpson with 2048 panels and
// log-domain accumulation of the binomial terms.
double agreement_probability(int k, double theta_th);

}  // namespace optisig
