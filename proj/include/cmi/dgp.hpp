#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cmi/errors.hpp"
#include "cmi/quadrature.hpp"
#include "cmi/rng.hpp"
#include "cmi/sign_model.hpp"

namespace cmi {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// ---- Monte Carlo design ----------------------------------------------------
// X_1 = sgn(X_2) U with U ~ U[0,1]; X_2..X_d iid U[-1,1];
// eps = sqrt(1 + sum_k X_k^2) xi, xi standard normal; Y = 1{X'beta >= eps}
// with beta = (1, 0, ..., 0).

inline ParamPoint section5_beta(int d) {
  ParamPoint beta(d, 0.0);
  beta[0] = 1.0;
  return beta;
}

inline void section5_draw_x(int d, Rng& rng, std::span<double> out) {
  for (int k = 1; k < d; ++k) out[k] = rng.uniform(-1.0, 1.0);
  const double u = rng.uniform();
  out[0] = (out[1] >= 0.0 ? u : -u);
}

// P(Y=1|X=x) = Phi(x'beta / sqrt(1 + sum_k x_k^2))
inline double choice_prob_section5(std::span<const double> x, const ParamPoint& beta) {
  double xb = 0.0, s2 = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xb += x[k] * beta[k];
    s2 += x[k] * x[k];
  }
  return normal_cdf(xb / std::sqrt(s2));
}

inline Dataset simulate_section5(long n, int d, Rng& rng) {
  if (n < 1) throw invalid_config("simulate_section5: n must be positive");
  if (d < 2) throw invalid_config("simulate_section5: need d >= 2");
  Dataset data;
  data.n = n;
  data.x_dim = d;
  data.y_len = 1;
  data.X.resize(static_cast<std::size_t>(n) * d);
  data.Y.resize(n);
  const ParamPoint beta = section5_beta(d);
  for (long i = 0; i < n; ++i) {
    std::span<double> x{data.X.data() + i * d, static_cast<std::size_t>(d)};
    section5_draw_x(d, rng, x);
    double xb = 0.0, s2 = 1.0;
    for (int k = 0; k < d; ++k) {
      xb += x[k] * beta[k];
      s2 += x[k] * x[k];
    }
    const double eps = std::sqrt(s2) * rng.normal();
    data.Y[i] = (xb >= eps) ? 1.0 : 0.0;
  }
  return data;
}

// Identified set of the design: b_2 >= 0 and b_k = 0 for k >= 3.
inline bool membership_theta(const ParamPoint& b, int d) {
  if (static_cast<int>(b.size()) != d) throw invalid_config("membership_theta: wrong length");
  if (b[1] < 0.0) return false;
  for (int k = 2; k < d; ++k)
    if (b[k] != 0.0) return false;
  return true;
}

// ---- Counterexample designs ------------------------------------------------
// F_xi is linear with slope c on (-1,1], with exponential tails chosen to be
// continuous, strictly increasing, and invertible in closed form.

inline void check_appendixA_slope(double tau, double slope_c) {
  if (!(tau > 0.0 && tau < 1.0)) throw invalid_config("appendixA: tau must lie in (0,1)");
  if (!(slope_c > 0.0 && slope_c < std::min(tau, 1.0 - tau)))
    throw invalid_config("appendixA: slope must lie in (0, min{tau,1-tau})");
}

inline double appendixA_Fxi(double t, double tau, double slope_c) {
  check_appendixA_slope(tau, slope_c);
  if (t <= -1.0) return (tau - slope_c) * std::exp(t + 1.0);
  if (t <= 1.0) return tau + slope_c * t;
  return 1.0 - (1.0 - tau - slope_c) * std::exp(-(t - 1.0));
}

inline double appendixA_Fxi_inv(double p, double tau, double slope_c) {
  check_appendixA_slope(tau, slope_c);
  if (p <= tau - slope_c) return std::log(p / (tau - slope_c)) - 1.0;
  if (p <= tau + slope_c) return (p - tau) / slope_c;
  return 1.0 + std::log((1.0 - tau - slope_c) / (1.0 - p));
}

// P(Y=1 | X'b = s) for the index b = (1,0[,...]): the integral
// (1/2) int_{-1}^{1} F_xi((1+u^2)^{-1/2}(s+u)) du by Gauss-Legendre.
inline double appendixA_cond_prob(double s, double tau, double slope_c, int nodes = 128) {
  check_appendixA_slope(tau, slope_c);
  const QuadRule rule = gauss_legendre(nodes);
  const auto f = [&](double u) {
    return appendixA_Fxi((s + u) / std::sqrt(1.0 + u * u), tau, slope_c);
  };
  // the cdf has kinks where (s+u)/sqrt(1+u^2) = +-1, i.e. u = (1-s^2)/(2s);
  // split there so each piece is smooth
  std::vector<double> cuts{-1.0, 1.0};
  if (s != 0.0) {
    const double u = (1.0 - s * s) / (2.0 * s);
    if (u > -1.0 && u < 1.0) cuts.insert(cuts.begin() + 1, u);
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    acc += integrate(rule, cuts[k], cuts[k + 1], f);
  return 0.5 * acc;
}

inline void appendixA_draw_x(int variant, Rng& rng, std::span<double> out) {
  if (variant == 1) {
    out[0] = rng.uniform();
    out[1] = rng.uniform(-1.0, 1.0);
  } else if (variant == 2) {
    out[0] = rng.uniform(-1.0, 1.0);
    out[1] = rng.uniform(-1.0, 1.0);
    out[2] = (out[0] + out[1] >= 0.0) ? rng.uniform(1.0, 2.0) : rng.uniform(-2.0, -1.0);
  } else {
    throw invalid_config("appendixA: variant must be 1 or 2");
  }
}

inline ParamPoint appendixA_beta(int variant) {
  return variant == 1 ? ParamPoint{1.0, 1.0} : ParamPoint{1.0, 1.0, 0.0};
}

inline Dataset simulate_appendixA(int variant, long n, double tau, double slope_c, Rng& rng) {
  check_appendixA_slope(tau, slope_c);
  if (n < 1) throw invalid_config("simulate_appendixA: n must be positive");
  const int d = (variant == 1) ? 2 : 3;
  Dataset data;
  data.n = n;
  data.x_dim = d;
  data.y_len = 1;
  data.X.resize(static_cast<std::size_t>(n) * d);
  data.Y.resize(n);
  const ParamPoint beta = appendixA_beta(variant);
  for (long i = 0; i < n; ++i) {
    std::span<double> x{data.X.data() + i * d, static_cast<std::size_t>(d)};
    appendixA_draw_x(variant, rng, x);
    const double xb = std::inner_product(x.begin(), x.end(), beta.begin(), 0.0);
    const double xi = appendixA_Fxi_inv(rng.uniform(), tau, slope_c);
    const double eps = std::sqrt(1.0 + x[1] * x[1]) * xi;
    data.Y[i] = (xb >= eps) ? 1.0 : 0.0;
  }
  return data;
}

// ---- Population oracles ----------------------------------------------------

// A population model: covariate law, true parameter, and the analytic choice
// probability P(Y=1|X=x).
struct PopulationDgp {
  int d = 0;
  double tau = 0.5;
  ParamPoint beta;
  std::function<void(Rng&, std::span<double>)> draw_x;
  std::function<double(std::span<const double>)> choice_prob;
  ParamSpace param_space;
};

inline PopulationDgp section5_population(int d) {
  PopulationDgp p;
  p.d = d;
  p.tau = 0.5;
  p.beta = section5_beta(d);
  p.draw_x = [d](Rng& rng, std::span<double> out) { section5_draw_x(d, rng, out); };
  p.choice_prob = [beta = p.beta](std::span<const double> x) {
    return choice_prob_section5(x, beta);
  };
  p.param_space = detail::unit_box_space(d);
  return p;
}

inline PopulationDgp appendixA_population(int variant, double tau, double slope_c) {
  check_appendixA_slope(tau, slope_c);
  PopulationDgp p;
  p.d = (variant == 1) ? 2 : 3;
  p.tau = tau;
  p.beta = appendixA_beta(variant);
  p.draw_x = [variant](Rng& rng, std::span<double> out) { appendixA_draw_x(variant, rng, out); };
  p.choice_prob = [beta = p.beta, tau, slope_c](std::span<const double> x) {
    const double xb = std::inner_product(x.begin(), x.end(), beta.begin(), 0.0);
    return appendixA_Fxi(xb / std::sqrt(1.0 + x[1] * x[1]), tau, slope_c);
  };
  p.param_space = detail::unit_box_space(p.d);
  return p;
}

enum class SetKind { theta, theta_tilde, theta_lower, theta_upper };

struct MembershipOptions {
  int n_gamma = 50;                    // gamma draws for theta_tilde/theta_lower
  std::vector<ParamPoint> gammas;      // explicit witnesses (checked in addition)
  long min_bin_count = 200;
  double violation_tol = 1e-3;         // "almost surely" operationalized
  double z_score = 4.0;                // noise guard on binned means
};

struct MembershipVerdict {
  enum class Status { in_set, out_of_set, inconclusive };
  Status status = Status::inconclusive;
  double violation = 0.0;  // worst-case violation margin (probability or bin mean)

  bool in_set() const { return status == Status::in_set; }
};

namespace detail {

// equal-count bin boundaries: returns per-item bin ids for `nb` quantile bins
inline std::vector<int> quantile_bins(std::span<const double> v, int nb,
                                      const std::vector<int>& order) {
  std::vector<int> bin(v.size());
  const std::size_t n = order.size();
  for (std::size_t r = 0; r < n; ++r)
    bin[order[r]] = static_cast<int>(r * static_cast<std::size_t>(nb) / n);
  return bin;
}

inline std::vector<int> sort_order(std::span<const double> v) {
  std::vector<int> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return v[a] < v[b]; });
  return order;
}

}  // namespace detail

// Monte Carlo membership verdicts for the population sets.  theta uses the
// sign-agreement form directly; the conditional-moment sets bin a large
// simulated sample on the index values and average the analytic choice
// probabilities within bins.
inline MembershipVerdict membership_theta_mc(const PopulationDgp& dgp, const ParamPoint& b,
                                             SetKind kind, long budget, Rng rng,
                                             MembershipOptions opt = {}) {
  if (budget < 100000) throw invalid_config("membership_theta_mc: budget must be >= 1e5");
  if (static_cast<int>(b.size()) != dgp.d)
    throw invalid_config("membership_theta_mc: parameter length mismatch");
  const int d = dgp.d;

  MembershipVerdict out;
  if (kind == SetKind::theta) {
    long bad = 0;
    std::vector<double> x(d);
    for (long i = 0; i < budget; ++i) {
      dgp.draw_x(rng, x);
      double xb = 0.0, xbeta = 0.0;
      for (int k = 0; k < d; ++k) {
        xb += x[k] * b[k];
        xbeta += x[k] * dgp.beta[k];
      }
      if (xb * xbeta < 0.0) ++bad;
    }
    out.violation = static_cast<double>(bad) / static_cast<double>(budget);
    out.status = out.violation <= opt.violation_tol ? MembershipVerdict::Status::in_set
                                                    : MembershipVerdict::Status::out_of_set;
    return out;
  }

  // sample once, reuse across gamma draws
  std::vector<double> X(static_cast<std::size_t>(budget) * d);
  std::vector<double> prob(budget), zb(budget), gh(budget);
  for (long i = 0; i < budget; ++i) {
    std::span<double> x{X.data() + i * d, static_cast<std::size_t>(d)};
    dgp.draw_x(rng, x);
    prob[i] = dgp.choice_prob(x);
    double xb = 0.0;
    for (int k = 0; k < d; ++k) xb += x[k] * b[k];
    zb[i] = xb;
    gh[i] = xb * (prob[i] - dgp.tau);  // E[G H | X = x]
  }
  const std::vector<int> order_b = detail::sort_order(zb);

  std::vector<ParamPoint> gammas = opt.gammas;
  {
    Rng grng = rng.substream({0xa11ce});
    for (int g = 0; g < opt.n_gamma; ++g) gammas.push_back(sample_param(dgp.param_space, grng));
  }

  double worst = std::numeric_limits<double>::infinity();
  bool violated = false;

  auto flag_bin_mean = [&](double mean, double se) {
    worst = std::min(worst, mean);
    if (mean < -(opt.z_score * se + 1e-4)) violated = true;
  };

  if (kind == SetKind::theta_upper) {
    const int nb = std::max<int>(1, static_cast<int>(budget / opt.min_bin_count));
    const int nbc = std::min(nb, 200);
    std::vector<int> bin = detail::quantile_bins(zb, nbc, order_b);
    std::vector<double> s(nbc, 0.0), s2(nbc, 0.0);
    std::vector<long> cnt(nbc, 0);
    for (long i = 0; i < budget; ++i) {
      s[bin[i]] += gh[i];
      s2[bin[i]] += gh[i] * gh[i];
      ++cnt[bin[i]];
    }
    for (int k = 0; k < nbc; ++k) {
      if (cnt[k] < opt.min_bin_count) continue;
      const double mean = s[k] / cnt[k];
      const double var = std::max(0.0, s2[k] / cnt[k] - mean * mean);
      flag_bin_mean(mean, std::sqrt(var / cnt[k]));
    }
  } else {
    // per-gamma checks
    const int total_bins = static_cast<int>(budget / opt.min_bin_count);
    std::vector<double> zg(budget);
    for (const ParamPoint& gamma : gammas) {
      for (long i = 0; i < budget; ++i) {
        double xg = 0.0;
        for (int k = 0; k < d; ++k) xg += X[i * d + k] * gamma[k];
        zg[i] = xg;
      }
      if (kind == SetKind::theta_tilde) {
        // product bins: quantile bins on X'b, then on X'gamma within each
        const int nb1 = std::min(40, std::max(1, static_cast<int>(std::sqrt(total_bins))));
        const int nb2 = nb1;
        std::vector<int> bin1 = detail::quantile_bins(zb, nb1, order_b);
        // order by (bin1, zg)
        std::vector<int> order(budget);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int c) {
          if (bin1[a] != bin1[c]) return bin1[a] < bin1[c];
          return zg[a] < zg[c];
        });
        // within each bin1 slice, split into nb2 equal-count cells
        std::size_t lo = 0;
        while (lo < order.size()) {
          std::size_t hi = lo;
          while (hi < order.size() && bin1[order[hi]] == bin1[order[lo]]) ++hi;
          const std::size_t cnt1 = hi - lo;
          for (int c = 0; c < nb2; ++c) {
            const std::size_t a = lo + cnt1 * c / nb2;
            const std::size_t bnd = lo + cnt1 * (c + 1) / nb2;
            if (bnd - a < static_cast<std::size_t>(opt.min_bin_count)) continue;
            double s = 0.0, s2 = 0.0;
            for (std::size_t r = a; r < bnd; ++r) {
              s += gh[order[r]];
              s2 += gh[order[r]] * gh[order[r]];
            }
            const double m = static_cast<double>(bnd - a);
            const double mean = s / m;
            const double var = std::max(0.0, s2 / m - mean * mean);
            flag_bin_mean(mean, std::sqrt(var / m));
          }
          lo = hi;
        }
      } else {  // theta_lower: condition on X'gamma only
        const int nbc = std::min(200, std::max(1, total_bins));
        std::vector<int> bing = detail::quantile_bins(zg, nbc, detail::sort_order(zg));
        std::vector<double> ps(nbc, 0.0), ps2(nbc, 0.0);
        std::vector<long> cnt(nbc, 0);
        for (long i = 0; i < budget; ++i) {
          ps[bing[i]] += prob[i];
          ps2[bing[i]] += prob[i] * prob[i];
          ++cnt[bing[i]];
        }
        // per-observation product X'b (pbar - tau) must be >= 0 a.s.
        long bad = 0;
        for (long i = 0; i < budget; ++i) {
          const int k = bing[i];
          if (cnt[k] < opt.min_bin_count) continue;
          const double mean = ps[k] / cnt[k];
          const double var = std::max(0.0, ps2[k] / cnt[k] - mean * mean);
          const double se = std::sqrt(var / cnt[k]);
          if (std::abs(mean - dgp.tau) <= opt.z_score * se + 1e-4) continue;  // sign ambiguous
          if (zb[i] * (mean - dgp.tau) < -1e-6) ++bad;
        }
        const double frac = static_cast<double>(bad) / static_cast<double>(budget);
        worst = std::min(worst, -frac);
        if (frac > opt.violation_tol) violated = true;
      }
    }
  }

  if (!std::isfinite(worst)) {
    out.status = MembershipVerdict::Status::inconclusive;
    return out;
  }
  out.violation = worst;
  out.status =
      violated ? MembershipVerdict::Status::out_of_set : MembershipVerdict::Status::in_set;
  return out;
}

}  // namespace cmi
