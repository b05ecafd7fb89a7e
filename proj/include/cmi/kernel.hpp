#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cmi/errors.hpp"

namespace cmi {

struct KernelConfig {
  int order_p = 2;      // kernel order (even), 2 for the index approach
  double scale_c = 1.0; // bandwidth scale
  double rate_r = 0.2;  // bandwidth exponent: h = c * n^{-r}

  void validate() const {
    if (order_p != 2 && order_p != 4 && order_p != 6)
      throw invalid_config("kernel order must be one of {2,4,6}");
    if (scale_c <= 0.0) throw invalid_config("kernel scale must be positive");
    if (rate_r <= 0.0 || rate_r >= 1.0) throw invalid_config("kernel rate must lie in (0,1)");
  }
};

inline double biweight(double u) {
  if (std::abs(u) > 1.0) return 0.0;
  const double t = 1.0 - u * u;
  return 0.9375 * t * t;
}

namespace detail {

// ∫_{-1}^{1} u^{2t} (1-u^2)^2 du, exact
inline double bw_moment(int t) {
  return 2.0 * (1.0 / (2 * t + 1) - 2.0 / (2 * t + 3) + 1.0 / (2 * t + 5));
}

// Coefficients q of k_p(u) = (sum_a q_a u^{2a}) (1-u^2)^2 on |u|<=1, chosen
// so that ∫k = 1 and even moments 2..p-2 vanish (odd ones vanish by
// symmetry).  Solved from the exact moment system rather than transcribed.
inline std::vector<double> higher_order_coeffs(int p) {
  const int m = p / 2;  // number of conditions and unknowns
  std::vector<double> A(static_cast<std::size_t>(m) * m), rhs(m, 0.0);
  rhs[0] = 1.0;
  for (int r = 0; r < m; ++r)
    for (int a = 0; a < m; ++a) A[static_cast<std::size_t>(r) * m + a] = bw_moment(r + a);
  // Gaussian elimination with partial pivoting on the tiny system
  std::vector<int> piv(m);
  for (int i = 0; i < m; ++i) piv[i] = i;
  for (int col = 0; col < m; ++col) {
    int best = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(A[static_cast<std::size_t>(r) * m + col]) >
          std::abs(A[static_cast<std::size_t>(best) * m + col]))
        best = r;
    if (best != col) {
      for (int c = 0; c < m; ++c)
        std::swap(A[static_cast<std::size_t>(col) * m + c], A[static_cast<std::size_t>(best) * m + c]);
      std::swap(rhs[col], rhs[best]);
    }
    const double d = A[static_cast<std::size_t>(col) * m + col];
    for (int r = col + 1; r < m; ++r) {
      const double f = A[static_cast<std::size_t>(r) * m + col] / d;
      for (int c = col; c < m; ++c)
        A[static_cast<std::size_t>(r) * m + c] -= f * A[static_cast<std::size_t>(col) * m + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> q(m);
  for (int r = m - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < m; ++c) s -= A[static_cast<std::size_t>(r) * m + c] * q[c];
    q[r] = s / A[static_cast<std::size_t>(r) * m + r];
  }
  return q;
}

}  // namespace detail

// pth order biweight kernel (Hansen-style polynomial-times-biweight family)
inline double higher_order_biweight(int p, double u) {
  if (p == 2) return biweight(u);
  if (p != 4 && p != 6) throw invalid_config("higher_order_biweight: p must be in {2,4,6}");
  if (std::abs(u) > 1.0) return 0.0;
  static const std::vector<double> q4 = detail::higher_order_coeffs(4);
  static const std::vector<double> q6 = detail::higher_order_coeffs(6);
  const std::vector<double>& q = (p == 4) ? q4 : q6;
  const double u2 = u * u;
  double poly = 0.0;
  for (std::size_t a = q.size(); a-- > 0;) poly = poly * u2 + q[a];
  const double t = 1.0 - u2;
  return poly * t * t;
}

inline double bandwidth(long n, const KernelConfig& cfg) {
  if (n < 1) throw invalid_config("bandwidth: n must be positive");
  return cfg.scale_c * std::pow(static_cast<double>(n), -cfg.rate_r);
}

// sample standard deviation, divisor n-1
inline double sample_std(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw invalid_data("sample_std: need at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  if (ss <= 0.0) throw degenerate_scale("sample_std: zero variance");
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace cmi
