#pragma once

// Small statistics toolbox for the evaluation suites: Wilson score
// intervals, the exact McNemar (paired sign) test, medians and percentiles.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace asyncnav {

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
  double point = 0.0;
};

// 95% by default (z = 1.959964).
inline WilsonInterval wilson_interval(int successes, int trials, double z = 1.959963984540054) {
  if (trials <= 0) return {};
  const double n = trials;
  const double p = successes / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half), p};
}

// Two-sided exact binomial tail: P(X <= min(b,c) or X >= max(b,c)) for
// X ~ Binomial(b + c, 1/2). Discordant pair counts b, c.
inline double mcnemar_exact_p(int b, int c) {
  const int n = b + c;
  if (n == 0) return 1.0;
  const int k = std::min(b, c);
  // log C(n, i) accumulated iteratively
  double p_tail = 0.0;
  double log_choose = 0.0;  // log C(n, 0)
  const double log_half_n = n * std::log(0.5);
  for (int i = 0; i <= n; ++i) {
    if (i <= k || i >= n - k) p_tail += std::exp(log_choose + log_half_n);
    log_choose += std::log(static_cast<double>(n - i)) - std::log(static_cast<double>(i + 1));
  }
  return std::min(1.0, p_tail);
}

// One-sided exact sign test: probability of >= wins successes out of n
// fair coin flips. Used for "significantly worse" checks on paired seeds.
inline double sign_test_one_sided_p(int wins, int n) {
  if (n <= 0) return 1.0;
  double p_tail = 0.0;
  double log_choose = 0.0;
  const double log_half_n = n * std::log(0.5);
  for (int i = 0; i <= n; ++i) {
    if (i >= wins) p_tail += std::exp(log_choose + log_half_n);
    log_choose += std::log(static_cast<double>(n - i)) - std::log(static_cast<double>(i + 1));
  }
  return std::min(1.0, p_tail);
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

// Nearest-rank percentile (p in [0, 100]).
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("percentile: empty input");
  const double rank = p / 100.0 * static_cast<double>(v.size() - 1);
  const size_t idx = static_cast<size_t>(std::llround(rank));
  std::nth_element(v.begin(), v.begin() + idx, v.end());
  return v[idx];
}

}  // namespace asyncnav
