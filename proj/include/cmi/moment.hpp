#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "cmi/errors.hpp"
#include "cmi/kernel_weights.hpp"

namespace cmi {

namespace detail {

// compensated accumulator
struct KahanSum {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

struct ContrastLess {
  bool operator()(const Contrast& a, const Contrast& b) const {
    return std::tie(a.kind, a.k, a.s, a.t) < std::tie(b.kind, b.k, b.s, b.t);
  }
};

}  // namespace detail

// Studentized moment profile over a grid: mhat/sigmahat per retained point,
// residual sets shared across points with the same (gamma, c), and the
// cached multiplier coefficients A(i,v) = u_i G_i K_iv / (n h^pow sigma_v)
// consumed by the critical-value simulation.
struct MomentProfile {
  std::vector<EvalPoint> grid;
  std::vector<double> mhat;
  std::vector<double> sigmahat;
  std::vector<std::vector<double>> residuals;  // one set per distinct (gamma,c)
  std::vector<int> resid_index;                // per retained point
  Eigen::MatrixXd mult_coef;                   // n x |retained grid|
  int dropped = 0;
  int denom_fallbacks = 0;  // full approach: NW denominators <= 0

  std::size_t size() const { return grid.size(); }
};

// Residuals of the Nadaraya-Watson regression of H(Y,c) on the two indices
// (X'b, X'gamma), evaluated at each observation's own index pair.  The sum
// over j includes j = i.
inline std::vector<double> nw_fit(const Dataset& data, const SignModel& model, const ParamPoint& b,
                                  const ParamPoint& gamma, const Contrast& c,
                                  const KernelConfig& cfg) {
  model.check_data(data);
  const long n = data.n;
  const double h = bandwidth(n, cfg);
  std::vector<double> ib(n), ig(n), hv(n);
  for (long i = 0; i < n; ++i) {
    ib[i] = model.g(data.x_row(i), c, b);
    ig[i] = model.g(data.x_row(i), c, gamma);
    hv[i] = model.h(data.y_row(i), c);
  }
  const double sb = n > 1 ? sample_std(ib) : 1.0;
  const double sg = n > 1 ? sample_std(ig) : 1.0;
  std::vector<double> u(n);
  for (long i = 0; i < n; ++i) {
    detail::KahanSum num, den;
    for (long j = 0; j < n; ++j) {
      const double w = biweight((ib[i] - ib[j]) / (sb * h)) * biweight((ig[i] - ig[j]) / (sg * h));
      num.add(hv[j] * w);
      den.add(w);
    }
    u[i] = hv[i] - num.sum / den.sum;  // den >= k(0)^2 > 0 from j = i
  }
  return u;
}

// (n h^2)^{-1} sum_i G(X_i,c,b) H(Y_i,c) K_n(X_i,v,b)
inline double mhat_index(const Dataset& data, const SignModel& model, const ParamPoint& b,
                         const EvalPoint& v, const KernelConfig& cfg) {
  const long n = data.n;
  const double h = bandwidth(n, cfg);
  std::vector<double> ib(n), ig(n);
  for (long i = 0; i < n; ++i) {
    ib[i] = model.g(data.x_row(i), v.c, b);
    ig[i] = model.g(data.x_row(i), v.c, v.gamma);
  }
  const double sb = sample_std(ib);
  const double sg = sample_std(ig);
  const double gb = model.g(v.x, v.c, b);
  const double gg = model.g(v.x, v.c, v.gamma);
  detail::KahanSum acc;
  for (long i = 0; i < n; ++i) {
    const double w = biweight((gb - ib[i]) / (sb * h)) * biweight((gg - ig[i]) / (sg * h));
    acc.add(ib[i] * model.h(data.y_row(i), v.c) * w);
  }
  return acc.sum / (static_cast<double>(n) * h * h);
}

// sqrt of n^{-2} h^{-4} sum_i u_i^2 G^2 K_n^2; returns 0 for a degenerate
// point (callers drop such points from the profile).
inline double sigmahat_index(const Dataset& data, const SignModel& model, const ParamPoint& b,
                             const EvalPoint& v, std::span<const double> residuals,
                             const KernelConfig& cfg) {
  const long n = data.n;
  const double h = bandwidth(n, cfg);
  std::vector<double> ib(n), ig(n);
  for (long i = 0; i < n; ++i) {
    ib[i] = model.g(data.x_row(i), v.c, b);
    ig[i] = model.g(data.x_row(i), v.c, v.gamma);
  }
  const double sb = sample_std(ib);
  const double sg = sample_std(ig);
  const double gb = model.g(v.x, v.c, b);
  const double gg = model.g(v.x, v.c, v.gamma);
  detail::KahanSum acc;
  for (long i = 0; i < n; ++i) {
    const double w = biweight((gb - ib[i]) / (sb * h)) * biweight((gg - ig[i]) / (sg * h));
    acc.add(residuals[i] * residuals[i] * ib[i] * ib[i] * w * w);
  }
  return std::sqrt(acc.sum) / (static_cast<double>(n) * h * h);
}

// Full index-approach profile.  Residual sets are computed once per distinct
// (gamma, c) and reused across x; the biweight matrix of the b-index is
// shared across all gamma within a contrast.
inline MomentProfile profile_index(const Dataset& data, const SignModel& model, const ParamPoint& b,
                                   const std::vector<EvalPoint>& grid, const KernelConfig& cfg) {
  model.check_data(data);
  if (grid.empty()) throw degenerate_profile("profile_index: empty grid");
  const long n = data.n;
  const double h = bandwidth(n, cfg);
  const double nh2 = static_cast<double>(n) * h * h;

  // group grid points by contrast, then by gamma
  struct ContrastCache {
    Eigen::VectorXd ib, hv, zb;  // index, H values, standardized index
    Eigen::MatrixXd Kb;          // biweight of standardized b-index differences
    double sb = 1.0;
  };
  std::map<Contrast, ContrastCache, detail::ContrastLess> ccache;

  struct GammaCache {
    Eigen::VectorXd ig, zg;
    double sg = 1.0;
    int resid_set = -1;
  };
  std::map<std::pair<std::vector<double>, int>, GammaCache> gcache;  // (gamma, contrast ordinal)

  std::vector<std::vector<double>> resid_sets;

  // per-grid-point results before the drop filter
  const std::size_t m = grid.size();
  std::vector<double> mh(m), sh(m);
  std::vector<int> rix(m);
  Eigen::MatrixXd coef(n, m);

  // deterministic contrast ordinals for the gamma cache key
  std::map<Contrast, int, detail::ContrastLess> cord;

  for (std::size_t vi = 0; vi < m; ++vi) {
    const EvalPoint& v = grid[vi];
    auto [cit, cnew] = ccache.try_emplace(v.c);
    ContrastCache& cc = cit->second;
    if (cnew) {
      cord.emplace(v.c, static_cast<int>(cord.size()));
      cc.ib.resize(n);
      cc.hv.resize(n);
      for (long i = 0; i < n; ++i) {
        cc.ib[i] = model.g(data.x_row(i), v.c, b);
        cc.hv[i] = model.h(data.y_row(i), v.c);
      }
      cc.sb = sample_std({cc.ib.data(), static_cast<std::size_t>(n)});
      cc.zb = cc.ib / (cc.sb * h);
      cc.Kb.resize(n, n);
      for (long i = 0; i < n; ++i) {
        for (long j = 0; j < i; ++j) {
          const double w = biweight(cc.zb[i] - cc.zb[j]);
          cc.Kb(i, j) = w;
          cc.Kb(j, i) = w;
        }
      }
      cc.Kb.diagonal().setConstant(biweight(0.0));
    }

    auto [git, gnew] = gcache.try_emplace(std::make_pair(v.gamma, cord.at(v.c)));
    GammaCache& gc = git->second;
    if (gnew) {
      gc.ig.resize(n);
      for (long i = 0; i < n; ++i) gc.ig[i] = model.g(data.x_row(i), v.c, v.gamma);
      gc.sg = sample_std({gc.ig.data(), static_cast<std::size_t>(n)});
      gc.zg = gc.ig / (gc.sg * h);
      // NW residuals of H on the two standardized indices
      std::vector<double> u(n);
      for (long i = 0; i < n; ++i) {
        detail::KahanSum num, den;
        for (long j = 0; j < n; ++j) {
          const double w = cc.Kb(i, j) * biweight(gc.zg[i] - gc.zg[j]);
          num.add(cc.hv[j] * w);
          den.add(w);
        }
        u[i] = cc.hv[i] - num.sum / den.sum;
      }
      gc.resid_set = static_cast<int>(resid_sets.size());
      resid_sets.push_back(std::move(u));
    }

    const double zb0 = model.g(v.x, v.c, b) / (cc.sb * h);
    const double zg0 = model.g(v.x, v.c, v.gamma) / (gc.sg * h);
    const std::vector<double>& u = resid_sets[gc.resid_set];
    detail::KahanSum msum, ssum;
    for (long i = 0; i < n; ++i) {
      const double w = biweight(zb0 - cc.zb[i]) * biweight(zg0 - gc.zg[i]);
      const double gw = cc.ib[i] * w;
      coef(i, vi) = u[i] * gw;
      msum.add(gw * cc.hv[i]);
      ssum.add(u[i] * u[i] * gw * gw);
    }
    mh[vi] = msum.sum / nh2;
    sh[vi] = std::sqrt(ssum.sum) / nh2;
    rix[vi] = gc.resid_set;
  }

  MomentProfile out;
  out.residuals = std::move(resid_sets);
  std::vector<Eigen::Index> keep;
  for (std::size_t vi = 0; vi < m; ++vi) {
    if (sh[vi] > 0.0) {
      keep.push_back(static_cast<Eigen::Index>(vi));
      out.grid.push_back(grid[vi]);
      out.mhat.push_back(mh[vi]);
      out.sigmahat.push_back(sh[vi]);
      out.resid_index.push_back(rix[vi]);
    } else {
      ++out.dropped;
    }
  }
  if (out.grid.empty()) throw degenerate_profile("profile_index: all grid points degenerate");
  out.mult_coef.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    out.mult_coef.col(static_cast<Eigen::Index>(k)) =
        coef.col(keep[k]) / (nh2 * out.sigmahat[k]);
  return out;
}

// ---- Full-covariate approach ----------------------------------------------

// NW residuals of Y on the full covariate vector with the order-p product
// kernel.  Points where the (possibly negative-kernel) denominator is <= 0
// fall back to Y_i minus the sample mean; the count is reported.
inline std::vector<double> nw_fit_full(const Dataset& data, const KernelConfig& cfg,
                                       int* fallbacks = nullptr) {
  data.validate();
  const long n = data.n;
  const int d = data.x_dim;
  const double h = bandwidth(n, cfg);
  std::vector<double> scales(d);
  {
    std::vector<double> col(n);
    for (int k = 0; k < d; ++k) {
      for (long i = 0; i < n; ++i) col[i] = data.X[i * d + k];
      scales[k] = sample_std(col);
    }
  }
  double ymean = 0.0;
  for (long i = 0; i < n; ++i) ymean += data.Y[i];
  ymean /= static_cast<double>(n);

  std::vector<double> u(n);
  int nfall = 0;
  // leave-one-out: the self-weight k(0)^d grows geometrically in d and would
  // otherwise swamp the fit, collapsing the residuals toward zero
  for (long i = 0; i < n; ++i) {
    detail::KahanSum num, den;
    for (long j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w = full_kernel_weight(data.x_row(j), data.x_row(i), h, scales, cfg.order_p);
      num.add(data.Y[j] * w);
      den.add(w);
    }
    if (den.sum > 0.0) {
      u[i] = data.Y[i] - num.sum / den.sum;
    } else {
      u[i] = data.Y[i] - ymean;
      ++nfall;
    }
  }
  if (fallbacks) *fallbacks = nfall;
  return u;
}

inline double mhat_full(const Dataset& data, const ParamPoint& b, std::span<const double> x,
                        const KernelConfig& cfg) {
  const long n = data.n;
  const int d = data.x_dim;
  const double h = bandwidth(n, cfg);
  std::vector<double> scales(d), col(n);
  for (int k = 0; k < d; ++k) {
    for (long i = 0; i < n; ++i) col[i] = data.X[i * d + k];
    scales[k] = sample_std(col);
  }
  detail::KahanSum acc;
  for (long i = 0; i < n; ++i) {
    const double w = full_kernel_weight(data.x_row(i), x, h, scales, cfg.order_p);
    acc.add(detail::dot(data.x_row(i), b) * (data.Y[i] - 0.5) * w);
  }
  return acc.sum / (static_cast<double>(n) * std::pow(h, d));
}

inline double sigmahat_full(const Dataset& data, const ParamPoint& b, std::span<const double> x,
                            std::span<const double> residuals, const KernelConfig& cfg) {
  const long n = data.n;
  const int d = data.x_dim;
  const double h = bandwidth(n, cfg);
  std::vector<double> scales(d), col(n);
  for (int k = 0; k < d; ++k) {
    for (long i = 0; i < n; ++i) col[i] = data.X[i * d + k];
    scales[k] = sample_std(col);
  }
  detail::KahanSum acc;
  for (long i = 0; i < n; ++i) {
    const double w = full_kernel_weight(data.x_row(i), x, h, scales, cfg.order_p);
    const double gi = detail::dot(data.x_row(i), b);
    acc.add(residuals[i] * residuals[i] * gi * gi * w * w);
  }
  return std::sqrt(acc.sum) / (static_cast<double>(n) * std::pow(h, d));
}

// Full-approach profile over a grid of covariate points.
inline MomentProfile profile_full(const Dataset& data, const ParamPoint& b,
                                  const std::vector<std::vector<double>>& xgrid,
                                  const KernelConfig& cfg) {
  data.validate();
  if (xgrid.empty()) throw degenerate_profile("profile_full: empty grid");
  const long n = data.n;
  const int d = data.x_dim;
  const double h = bandwidth(n, cfg);
  const double nhd = static_cast<double>(n) * std::pow(h, d);

  MomentProfile out;
  std::vector<double> u = nw_fit_full(data, cfg, &out.denom_fallbacks);

  std::vector<double> scales(d), col(n), gi(n);
  for (int k = 0; k < d; ++k) {
    for (long i = 0; i < n; ++i) col[i] = data.X[i * d + k];
    scales[k] = sample_std(col);
  }
  for (long i = 0; i < n; ++i) gi[i] = detail::dot(data.x_row(i), b);

  const std::size_t m = xgrid.size();
  Eigen::MatrixXd coef(n, m);
  std::vector<double> mh(m), sh(m);
  for (std::size_t vi = 0; vi < m; ++vi) {
    detail::KahanSum msum, ssum;
    for (long i = 0; i < n; ++i) {
      const double w = full_kernel_weight(data.x_row(i), xgrid[vi], h, scales, cfg.order_p);
      const double gw = gi[i] * w;
      coef(i, vi) = u[i] * gw;
      msum.add(gw * (data.Y[i] - 0.5));
      ssum.add(u[i] * u[i] * gw * gw);
    }
    mh[vi] = msum.sum / nhd;
    sh[vi] = std::sqrt(ssum.sum) / nhd;
  }

  out.residuals.push_back(std::move(u));
  std::vector<Eigen::Index> keep;
  for (std::size_t vi = 0; vi < m; ++vi) {
    if (sh[vi] > 0.0) {
      keep.push_back(static_cast<Eigen::Index>(vi));
      EvalPoint p;
      p.x = xgrid[vi];
      out.grid.push_back(std::move(p));
      out.mhat.push_back(mh[vi]);
      out.sigmahat.push_back(sh[vi]);
      out.resid_index.push_back(0);
    } else {
      ++out.dropped;
    }
  }
  if (out.grid.empty()) throw degenerate_profile("profile_full: all grid points degenerate");
  out.mult_coef.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    out.mult_coef.col(static_cast<Eigen::Index>(k)) = coef.col(keep[k]) / (nhd * out.sigmahat[k]);
  return out;
}

}  // namespace cmi
