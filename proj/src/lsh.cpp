#include "optisig/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "optisig/errors.hpp"
#include "optisig/rng.hpp"

namespace optisig {

Hasher::Hasher(int input_dim, int k, std::uint64_t seed)
    : input_dim_(input_dim), k_(k), seed_(seed) {
  if (input_dim < 1) throw std::invalid_argument("Hasher: input_dim must be >= 1");
  if (k < 1) throw std::invalid_argument("Hasher: k must be >= 1");
  planes_.resize(static_cast<std::size_t>(k) * input_dim);
  GaussianRng rng(seed);
  for (auto& p : planes_) p = rng.gaussian();
}

Bits Hasher::hash(std::span<const double> v) const {
  if (static_cast<int>(v.size()) != input_dim_)
    throw std::invalid_argument("Hasher::hash: expected dim " + std::to_string(input_dim_) +
                                ", got " + std::to_string(v.size()));
  bool all_zero = true;
  for (double x : v)
    if (x != 0.0) {
      all_zero = false;
      break;
    }
  if (all_zero) throw DegenerateInput("Hasher::hash: all-zero input vector has no direction");

  Bits out(k_);
  const double* plane = planes_.data();
  for (int i = 0; i < k_; ++i, plane += input_dim_) {
    double dot = 0.0;
    for (int j = 0; j < input_dim_; ++j) dot += plane[j] * v[j];
    out[i] = dot >= 0.0 ? 1 : 0;
  }
  return out;
}

std::vector<double> zero_mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("zero_mean: empty vector");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - mean;
  return out;
}

double expected_distance(int k, double theta) {
  if (k < 1) throw std::invalid_argument("expected_distance: k must be >= 1");
  if (theta < 0.0 || theta > M_PI)
    throw std::invalid_argument("expected_distance: theta outside [0, pi]");
  return k * theta / M_PI;
}

namespace {

// log of sum_{n=lo..hi} C(k,n) p^n (1-p)^(k-n), accumulated in the log domain.
// log_binom holds log C(k,n) for n = 0..k.
double log_binom_tail(const std::vector<double>& log_binom, int k, double p, int lo, int hi) {
  lo = std::max(lo, 0);
  hi = std::min(hi, k);
  if (lo > hi) return -std::numeric_limits<double>::infinity();
  const double lp = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  const double l1p = p < 1.0 ? std::log1p(-p) : -std::numeric_limits<double>::infinity();
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(hi - lo + 1);
  for (int n = lo; n <= hi; ++n) {
    double t = log_binom[n];
    t += (n == 0) ? 0.0 : n * lp;            // 0 * log(0) := 0
    t += (n == k) ? 0.0 : (k - n) * l1p;
    terms[n - lo] = t;
    max_term = std::max(max_term, t);
  }
  if (!std::isfinite(max_term)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

// ln Pr[D <= d_th] with the randomized (linearly interpolated) threshold.
double log_cdf_le(const std::vector<double>& log_binom, int k, double p, int d_lo, double frac) {
  double lo = log_binom_tail(log_binom, k, p, 0, d_lo);
  if (frac <= 0.0 || d_lo >= k) return lo;
  double nxt = log_binom_tail(log_binom, k, p, d_lo + 1, d_lo + 1);
  // log( exp(lo) + frac * exp(nxt) )
  double m = std::max(lo, nxt);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(lo - m) + frac * std::exp(nxt - m));
}

double log_cdf_gt(const std::vector<double>& log_binom, int k, double p, int d_lo, double frac) {
  double hi = log_binom_tail(log_binom, k, p, d_lo + 2, k);
  double boundary = d_lo + 1 <= k ? log_binom_tail(log_binom, k, p, d_lo + 1, d_lo + 1)
                                  : -std::numeric_limits<double>::infinity();
  // Pr[D > d_th] = (1 - frac) * Pr[D = d_lo + 1] + Pr[D >= d_lo + 2]
  double w = 1.0 - frac;
  double m = std::max(hi, boundary);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(hi - m) + w * std::exp(boundary - m));
}

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  // panels must be even for composite Simpson
  const int n = panels;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

double agreement_probability(int k, double theta_th) {
  if (k < 1) throw std::invalid_argument("agreement_probability: k must be >= 1");
  if (theta_th <= 0.0 || theta_th >= M_PI)
    throw std::invalid_argument("agreement_probability: theta_th outside (0, pi)");

  std::vector<double> log_binom(k + 1);
  log_binom[0] = 0.0;
  for (int n = 1; n <= k; ++n)
    log_binom[n] = log_binom[n - 1] + std::log(double(k - n + 1)) - std::log(double(n));

  const double d_th = k * theta_th / M_PI;
  const int d_lo = static_cast<int>(std::floor(d_th));
  const double frac = d_th - d_lo;

  auto inner_le = [&](double theta) { return log_cdf_le(log_binom, k, theta / M_PI, d_lo, frac); };
  auto inner_gt = [&](double theta) { return log_cdf_gt(log_binom, k, theta / M_PI, d_lo, frac); };

  constexpr int kPanels = 2048;
  double i1 = simpson(inner_le, 0.0, theta_th, kPanels);
  double i2 = simpson(inner_gt, theta_th, M_PI, kPanels);
  double p = std::exp(i1 + i2);
  if (!std::isfinite(p) || p < 0.0 || p > 1.0)
    throw NumericFailure("agreement_probability: quadrature did not converge (k=" +
                         std::to_string(k) + ")");
  return p;
}

}  // namespace optisig
