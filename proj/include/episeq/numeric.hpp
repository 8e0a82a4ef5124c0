#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace episeq {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) without leaving log space.
inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v)
    if (x > m) m = x;
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Exponentiates log weights into a normalized probability vector.
// Returns the log of the normalizing sum.
inline double normalize_log_weights(std::span<const double> log_w,
                                    std::vector<double>& out) {
  double lse = log_sum_exp(log_w);
  out.resize(log_w.size());
  for (std::size_t i = 0; i < log_w.size(); ++i)
    out[i] = std::exp(log_w[i] - lse);
  return lse;
}

}  // namespace episeq
