#pragma once

#include <span>
#include <vector>

#include "cmi/kernel.hpp"
#include "cmi/sign_model.hpp"

namespace cmi {

// One evaluation point v = (x, gamma, c) of the index grid.
struct EvalPoint {
  std::vector<double> x;
  ParamPoint gamma;
  Contrast c;
};

// Product of two scaled biweights at the standardized index differences,
// i.e. K_n(xi, v, b) in the scaled form used by the index approach.
inline double index_kernel_weight(std::span<const double> xi, const EvalPoint& v,
                                  const ParamPoint& b, const SignModel& model, double h,
                                  double s_b, double s_gamma) {
  const double db = model.g(v.x, v.c, b) - model.g(xi, v.c, b);
  const double dg = model.g(v.x, v.c, v.gamma) - model.g(xi, v.c, v.gamma);
  return biweight(db / (s_b * h)) * biweight(dg / (s_gamma * h));
}

// d-fold product of pth-order biweights at standardized coordinate
// differences (the full-covariate approach).
inline double full_kernel_weight(std::span<const double> xi, std::span<const double> x, double h,
                                 std::span<const double> scales, int p) {
  double w = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    w *= higher_order_biweight(p, (x[k] - xi[k]) / (scales[k] * h));
    if (w == 0.0) return 0.0;
  }
  return w;
}

}  // namespace cmi
