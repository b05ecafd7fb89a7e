#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmi/errors.hpp"
#include "cmi/rng.hpp"

namespace cmi {

// A comparison index: nothing for binary, a category for ordered choice, a
// choice/period pair (s,t), or a (category, period pair) triple.
struct Contrast {
  enum class Kind { none, category, pair, triple };
  Kind kind = Kind::none;
  int k = 0;  // category (ordered / panel ordered)
  int s = 0;  // first element of a pair, 1-based
  int t = 0;  // second element, s < t

  friend bool operator==(const Contrast&, const Contrast&) = default;
};

using ParamPoint = std::vector<double>;

// Parameter space Gamma: first coefficient pinned to +-1, remaining
// coordinates boxed, with an optional strictly increasing threshold block
// occupying the trailing `threshold_count` coordinates.
struct ParamSpace {
  int dim = 0;
  double first_sign = 1.0;  // value of b1 (+1 or -1)
  std::vector<std::pair<double, double>> box;  // bounds for coords 2..dim
  int threshold_count = 0;

  void validate() const {
    if (dim < 1) throw invalid_config("ParamSpace: dim must be >= 1");
    if (first_sign != 1.0 && first_sign != -1.0)
      throw invalid_config("ParamSpace: first coefficient must be +-1");
    if (static_cast<int>(box.size()) != dim - 1)
      throw invalid_config("ParamSpace: box must cover coords 2..dim");
    for (const auto& [lo, hi] : box)
      if (!(lo <= hi)) throw invalid_config("ParamSpace: empty box interval");
    if (threshold_count < 0 || threshold_count > dim - 1)
      throw invalid_config("ParamSpace: bad threshold block size");
  }

  bool contains(const ParamPoint& b) const {
    if (static_cast<int>(b.size()) != dim) return false;
    if (b[0] != first_sign) return false;
    for (int j = 1; j < dim; ++j)
      if (b[j] < box[j - 1].first || b[j] > box[j - 1].second) return false;
    return thresholds_monotone(b);
  }

  bool thresholds_monotone(const ParamPoint& b) const {
    for (int j = dim - threshold_count + 1; j < dim; ++j)
      if (!(b[j - 1] < b[j])) return false;
    return true;
  }
};

// n observations; covariates row-major n x x_dim, outcomes n x y_len.
struct Dataset {
  long n = 0;
  int x_dim = 0;
  int y_len = 1;
  std::vector<double> X;
  std::vector<double> Y;

  std::span<const double> x_row(long i) const {
    return {X.data() + i * x_dim, static_cast<std::size_t>(x_dim)};
  }
  std::span<const double> y_row(long i) const {
    return {Y.data() + i * y_len, static_cast<std::size_t>(y_len)};
  }

  void validate() const {
    if (n < 1) throw invalid_data("Dataset: empty");
    if (X.size() != static_cast<std::size_t>(n) * x_dim ||
        Y.size() != static_cast<std::size_t>(n) * y_len)
      throw invalid_data("Dataset: inconsistent shapes");
    for (double v : X)
      if (!std::isfinite(v)) throw invalid_data("Dataset: non-finite covariate");
    for (double v : Y)
      if (!std::isfinite(v)) throw invalid_data("Dataset: non-finite outcome");
  }
};

// The (G, H, C, Gamma) quadruple of a sign-restricted model.  Immutable
// after construction; safe to share across workers.
struct SignModel {
  std::string kind;
  std::function<double(std::span<const double> x, const Contrast& c, std::span<const double> b)> g;
  std::function<double(std::span<const double> y, const Contrast& c)> h;
  std::vector<Contrast> contrasts;
  ParamSpace param_space;
  int covariate_dim = 0;  // expected length of a covariate row
  int outcome_len = 1;    // expected length of an outcome record
  double tau = 0.5;

  void check_data(const Dataset& data) const {
    data.validate();
    if (data.x_dim != covariate_dim)
      throw invalid_data("dataset covariate width does not match the model");
    if (data.y_len != outcome_len)
      throw invalid_data("dataset outcome shape does not match the model");
  }
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline ParamSpace unit_box_space(int dim, int thresholds = 0) {
  ParamSpace sp;
  sp.dim = dim;
  sp.first_sign = 1.0;
  sp.box.assign(dim - 1, {-1.0, 1.0});
  sp.threshold_count = thresholds;
  return sp;
}

}  // namespace detail

// Binary choice under tau-quantile independence: G = x'b, H = y - tau.
inline SignModel make_binary_model(double tau, int d) {
  if (!(tau > 0.0 && tau < 1.0)) throw invalid_config("binary model: tau must lie in (0,1)");
  if (d < 2) throw invalid_config("binary model: need d >= 2");
  SignModel m;
  m.kind = "binary";
  m.tau = tau;
  m.covariate_dim = d;
  m.outcome_len = 1;
  m.g = [](std::span<const double> x, const Contrast&, std::span<const double> b) {
    return detail::dot(x, b);
  };
  m.h = [tau](std::span<const double> y, const Contrast&) { return y[0] - tau; };
  m.contrasts = {Contrast{}};
  m.param_space = detail::unit_box_space(d);
  return m;
}

// Ordered response with K+1 choices; b = (theta, lambda_1..lambda_K),
// G(x,c,b) = <(-x', l_c')', b>, H(y,c) = 1{y <= c} - tau.
inline SignModel make_ordered_model(int K, int q_dim, double tau) {
  if (K < 1) throw invalid_config("ordered model: need K >= 1");
  if (q_dim < 1) throw invalid_config("ordered model: need q_dim >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw invalid_config("ordered model: tau must lie in (0,1)");
  SignModel m;
  m.kind = "ordered";
  m.tau = tau;
  m.covariate_dim = q_dim;
  m.outcome_len = 1;
  const int dim = q_dim + K;
  m.g = [q_dim, dim](std::span<const double> x, const Contrast& c, std::span<const double> b) {
    if (static_cast<int>(b.size()) != dim) throw invalid_config("ordered model: bad parameter length");
    for (int j = q_dim + 1; j < dim; ++j)
      if (!(b[j - 1] < b[j])) throw invalid_data("ordered model: thresholds not increasing");
    double acc = b[q_dim + c.k - 1];  // l_c picks the c-th threshold
    for (int j = 0; j < q_dim; ++j) acc -= x[j] * b[j];
    return acc;
  };
  m.h = [tau](std::span<const double> y, const Contrast& c) {
    return (y[0] <= c.k ? 1.0 : 0.0) - tau;
  };
  for (int k = 1; k <= K; ++k) m.contrasts.push_back({Contrast::Kind::category, k, 0, 0});
  m.param_space = detail::unit_box_space(dim, K);
  return m;
}

// Multinomial choice with K alternatives and choicewise covariate blocks of
// length q; contrasts are pairs (s,t), s < t.
inline SignModel make_multinomial_model(int K, int q) {
  if (K < 2) throw invalid_config("multinomial model: need K >= 2");
  if (q < 1) throw invalid_config("multinomial model: need q >= 1");
  SignModel m;
  m.kind = "multinomial";
  m.covariate_dim = K * q;
  m.outcome_len = 1;
  m.g = [q](std::span<const double> x, const Contrast& c, std::span<const double> b) {
    double acc = 0.0;
    const double* xs = x.data() + (c.s - 1) * q;
    const double* xt = x.data() + (c.t - 1) * q;
    for (int j = 0; j < q; ++j) acc += (xs[j] - xt[j]) * b[j];
    return acc;
  };
  m.h = [K](std::span<const double> y, const Contrast& c) {
    const int yi = static_cast<int>(y[0]);
    if (yi < 1 || yi > K) throw invalid_data("multinomial model: choice out of range");
    return (yi == c.s ? 1.0 : 0.0) - (yi == c.t ? 1.0 : 0.0);
  };
  for (int s = 1; s <= K; ++s)
    for (int t = s + 1; t <= K; ++t) m.contrasts.push_back({Contrast::Kind::pair, 0, s, t});
  m.param_space = detail::unit_box_space(q);
  return m;
}

// Binary panel with fixed effects (Manski 1987): G = (x_s - x_t)'b,
// H = y_s - y_t.  The fixed effect never appears; H differences it out.
inline SignModel make_panel_binary_model(int T, int q) {
  if (T < 2) throw invalid_config("panel binary model: need T >= 2");
  if (q < 1) throw invalid_config("panel binary model: need q >= 1");
  SignModel m;
  m.kind = "panel_binary";
  m.covariate_dim = T * q;
  m.outcome_len = T;
  m.g = [q](std::span<const double> x, const Contrast& c, std::span<const double> b) {
    double acc = 0.0;
    const double* xs = x.data() + (c.s - 1) * q;
    const double* xt = x.data() + (c.t - 1) * q;
    for (int j = 0; j < q; ++j) acc += (xs[j] - xt[j]) * b[j];
    return acc;
  };
  m.h = [T](std::span<const double> y, const Contrast& c) {
    if (static_cast<int>(y.size()) != T) throw invalid_data("panel binary model: bad outcome length");
    return y[c.s - 1] - y[c.t - 1];
  };
  for (int s = 1; s <= T; ++s)
    for (int t = s + 1; t <= T; ++t) m.contrasts.push_back({Contrast::Kind::pair, 0, s, t});
  m.param_space = detail::unit_box_space(q);
  return m;
}

// Ordered panel with fixed effects.  Note G uses (x_t - x_s), the reverse of
// the binary panel ordering; both are kept exactly as specified.
inline SignModel make_panel_ordered_model(int K, int T, int q) {
  if (K < 1) throw invalid_config("panel ordered model: need K >= 1");
  if (T < 2) throw invalid_config("panel ordered model: need T >= 2");
  if (q < 1) throw invalid_config("panel ordered model: need q >= 1");
  SignModel m;
  m.kind = "panel_ordered";
  m.covariate_dim = T * q;
  m.outcome_len = T;
  m.g = [q](std::span<const double> x, const Contrast& c, std::span<const double> b) {
    double acc = 0.0;
    const double* xs = x.data() + (c.s - 1) * q;
    const double* xt = x.data() + (c.t - 1) * q;
    for (int j = 0; j < q; ++j) acc += (xt[j] - xs[j]) * b[j];
    return acc;
  };
  m.h = [T](std::span<const double> y, const Contrast& c) {
    if (static_cast<int>(y.size()) != T) throw invalid_data("panel ordered model: bad outcome length");
    return (y[c.s - 1] <= c.k ? 1.0 : 0.0) - (y[c.t - 1] <= c.k ? 1.0 : 0.0);
  };
  for (int k = 1; k <= K; ++k)
    for (int s = 1; s <= T; ++s)
      for (int t = s + 1; t <= T; ++t) m.contrasts.push_back({Contrast::Kind::triple, k, s, t});
  m.param_space = detail::unit_box_space(q);
  return m;
}

// Uniform draw from Gamma: b1 pinned, remaining coordinates uniform on the
// box, threshold block rejection-resampled until strictly increasing.
inline ParamPoint sample_param(const ParamSpace& space, Rng& rng) {
  space.validate();
  ParamPoint b(space.dim);
  b[0] = space.first_sign;
  for (int j = 1; j < space.dim; ++j) b[j] = rng.uniform(space.box[j - 1].first, space.box[j - 1].second);
  if (space.threshold_count > 1) {
    const int lo = space.dim - space.threshold_count;
    while (!space.thresholds_monotone(b)) {
      for (int j = lo; j < space.dim; ++j)
        b[j] = rng.uniform(space.box[j - 1].first, space.box[j - 1].second);
    }
  }
  return b;
}

}  // namespace cmi
