#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cmi/moment.hpp"
#include "cmi/rng.hpp"

namespace cmi {

struct ClrConfig {
  double alpha = 0.05;
  int B = 1000;        // multiplier repetitions
  int grid_size = 400;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 0.5)) throw invalid_config("clr: alpha must lie in (0, 0.5]");
    if (B < 100) throw invalid_config("clr: need B >= 100");
    if (grid_size < 1) throw invalid_config("clr: grid_size must be positive");
  }
};

struct TestOutcome {
  double statistic = 0.0;        // T(b)
  double crit_full_grid = 0.0;   // q_{gamma_n}(b, V)
  std::vector<int> contact_set;  // indices into the retained grid
  bool contact_fallback = false; // empty contact set -> full grid used
  double critical_value = 0.0;   // q_alpha(b, contact set)
  bool reject = false;
  int dropped_points = 0;
};

inline double clr_selection_level(long n) { return 0.1 / std::log(static_cast<double>(n)); }

// T(b) = inf over retained grid points of mhat/sigmahat
inline double statistic(const MomentProfile& profile) {
  if (profile.grid.empty()) throw degenerate_profile("statistic: empty profile");
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < profile.size(); ++i)
    t = std::min(t, profile.mhat[i] / profile.sigmahat[i]);
  return t;
}

// B x |grid| matrix of studentized multiplier sums (before the inf): row s,
// column v holds sum_i eta_i(s) u_i G_i K_iv / (n h^2 sigma_v), using the
// coefficients cached in the profile.
inline Eigen::MatrixXd multiplier_matrix(const MomentProfile& profile, int B, Rng rng) {
  const Eigen::Index n = profile.mult_coef.rows();
  Eigen::MatrixXd eta(B, n);
  for (Eigen::Index s = 0; s < B; ++s)
    for (Eigen::Index i = 0; i < n; ++i) eta(s, i) = rng.normal();
  return eta * profile.mult_coef;
}

// ceil(p*N)-th smallest value
inline double empirical_quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw invalid_data("empirical_quantile: empty sample");
  const std::size_t N = samples.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(N)));
  k = std::clamp<std::size_t>(k, 1, N);
  std::nth_element(samples.begin(), samples.begin() + (k - 1), samples.end());
  return samples[k - 1];
}

// V_n(b): grid points with mhat <= -2 q_gamma sigmahat
inline std::vector<int> contact_set(const MomentProfile& profile, double q_gamma) {
  std::vector<int> sel;
  for (std::size_t i = 0; i < profile.size(); ++i)
    if (profile.mhat[i] <= -2.0 * q_gamma * profile.sigmahat[i]) sel.push_back(static_cast<int>(i));
  return sel;
}

namespace detail {

inline std::vector<double> row_minima(const Eigen::MatrixXd& m) {
  std::vector<double> out(m.rows());
  for (Eigen::Index s = 0; s < m.rows(); ++s) out[s] = m.row(s).minCoeff();
  return out;
}

inline std::vector<double> row_minima(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
  std::vector<double> out(m.rows(), std::numeric_limits<double>::infinity());
  for (Eigen::Index s = 0; s < m.rows(); ++s)
    for (int c : cols) out[s] = std::min(out[s], m(s, c));
  return out;
}

// Shared tail of the test: statistic, one multiplier matrix reused for both
// quantile stages, contact-set selection, decision.
inline TestOutcome clr_decide(const MomentProfile& profile, long n, const ClrConfig& ccfg,
                              Rng rng) {
  TestOutcome out;
  out.dropped_points = profile.dropped;
  out.statistic = statistic(profile);
  const Eigen::MatrixXd sim = multiplier_matrix(profile, ccfg.B, rng);
  out.crit_full_grid = empirical_quantile(row_minima(sim), clr_selection_level(n));
  out.contact_set = contact_set(profile, out.crit_full_grid);
  if (out.contact_set.empty()) {
    // conservative fallback: the full grid gives the smaller critical value
    out.contact_fallback = true;
    out.contact_set.resize(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) out.contact_set[i] = static_cast<int>(i);
  }
  out.critical_value = empirical_quantile(row_minima(sim, out.contact_set), ccfg.alpha);
  out.reject = out.statistic < out.critical_value;
  return out;
}

}  // namespace detail

// Index-approach CLR test for a single parameter value b.
inline TestOutcome clr_test(const Dataset& data, const SignModel& model, const ParamPoint& b,
                            const std::vector<EvalPoint>& grid, const KernelConfig& kcfg,
                            const ClrConfig& ccfg, Rng rng) {
  kcfg.validate();
  ccfg.validate();
  MomentProfile profile = profile_index(data, model, b, grid, kcfg);
  return detail::clr_decide(profile, data.n, ccfg, rng);
}

// Full-approach CLR test over a grid of covariate points.
inline TestOutcome clr_test_full(const Dataset& data, const ParamPoint& b,
                                 const std::vector<std::vector<double>>& xgrid,
                                 const KernelConfig& kcfg, const ClrConfig& ccfg, Rng rng) {
  kcfg.validate();
  ccfg.validate();
  MomentProfile profile = profile_full(data, b, xgrid, kcfg);
  return detail::clr_decide(profile, data.n, ccfg, rng);
}

}  // namespace cmi
