// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any fail. Expect a run time of many minutes:
// the rejection-frequency criteria repeat the full test hundreds of times.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cmi/clr.hpp"
#include "cmi/confidence_set.hpp"
#include "cmi/dgp.hpp"
#include "cmi/mc.hpp"
#include "cmi/moment.hpp"
#include "cmi/quadrature.hpp"

using namespace cmi;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_t0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
  std::printf("[%s] %2d %-34s %s  (t=%.0fs)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(),
              el);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---- rejection-frequency cells (criteria 1-4) ------------------------------

CellResult run_cell(Approach a, int d, long n, double b2, int reps, std::uint64_t seed) {
  ExperimentCell cell = ExperimentCell::make(a, d, n, b2, reps, 1000, 400);
  return rejection_frequency(cell, Rng(seed), default_threads());
}

void criterion_null_size_index() {
  const CellResult r = run_cell(Approach::index, 3, 250, 0.0, 200, 1001);
  report(1, "null size, index, d=3 n=250", r.status == "OK" && r.freq <= 0.08,
         "freq=" + fmt(r.freq) + " (need <= 0.08)");
}

void criterion_null_size_full() {
  const CellResult r = run_cell(Approach::full, 3, 250, 0.0, 200, 1001);
  report(2, "null size, full, d=3 n=250", r.status == "OK" && r.freq <= 0.08,
         "freq=" + fmt(r.freq) + " (need <= 0.08)");
}

void criterion_power_dominance() {
  // same seed: both approaches test the same 200 datasets
  const CellResult ri = run_cell(Approach::index, 10, 500, -1.0, 200, 1003);
  const CellResult rf = run_cell(Approach::full, 10, 500, -1.0, 200, 1003);
  const double ratio = rf.freq > 0.0 ? ri.freq / rf.freq
                                     : std::numeric_limits<double>::infinity();
  report(3, "power dominance, d=10 n=500",
         ri.status == "OK" && rf.status == "OK" && ri.freq >= 0.35 && ratio >= 1.5,
         "index=" + fmt(ri.freq) + " full=" + fmt(rf.freq) + " ratio=" + fmt(ratio) +
             " (need index >= 0.35, ratio >= 1.5)");
}

void criterion_power_growth() {
  const CellResult r250 = run_cell(Approach::index, 3, 250, -1.0, 200, 1004);
  const CellResult r1000 = run_cell(Approach::index, 3, 1000, -1.0, 200, 1004);
  report(4, "power grows in n, index d=3",
         r250.status == "OK" && r1000.status == "OK" && r1000.freq - r250.freq >= 0.2,
         "n=250: " + fmt(r250.freq) + " n=1000: " + fmt(r1000.freq) + " (need gap >= 0.2)");
}

// ---- population oracle criteria (5, 6) -------------------------------------

void criterion_index_characterization() {
  // two-index membership agrees with the direct sign characterization on a
  // 5x5 lattice over (b2, b3), away from the decision boundary b2 = 0
  const PopulationDgp dgp = section5_population(3);
  const long budget = 1000000;
  int checked = 0, agree = 0;
  std::string mismatch;
  const double margin = 0.05;
  for (double b2 : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    for (double b3 : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      if (std::abs(b2) < margin) continue;  // boundary of the identified set
      const ParamPoint b{1.0, b2, b3};
      ++checked;
      Rng rng(5000 + checked);
      const bool in_theta =
          membership_theta_mc(dgp, b, SetKind::theta, budget, rng.substream({1})).in_set();
      const bool in_tilde =
          membership_theta_mc(dgp, b, SetKind::theta_tilde, budget, rng.substream({2})).in_set();
      const bool truth = membership_theta(b, 3);
      if (in_theta == in_tilde && in_theta == truth) {
        ++agree;
      } else if (mismatch.empty()) {
        mismatch = " first mismatch at b2=" + fmt(b2) + " b3=" + fmt(b3) +
                   " theta=" + std::to_string(in_theta) + " tilde=" + std::to_string(in_tilde);
      }
    }
  }
  report(5, "two-index set equals sign set", checked == 20 && agree == checked,
         std::to_string(agree) + "/" + std::to_string(checked) + " lattice points agree" +
             mismatch);
}

void criterion_strict_inclusions() {
  const double tau = 0.5, slope = 0.25;
  const long budget = 1000000;

  // (a) b=(1,0) violates the sign characterization although the one-index
  // conditional probability never drops below tau
  const PopulationDgp ex1 = appendixA_population(1, tau, slope);
  const bool out_theta =
      !membership_theta_mc(ex1, {1.0, 0.0}, SetKind::theta, budget, Rng(6001)).in_set();
  bool curve_ok = true;
  double worst = 1e9;
  for (int i = 0; i < 50; ++i) {
    const double s = static_cast<double>(i) / 49.0;
    const double p = appendixA_cond_prob(s, tau, slope);
    worst = std::min(worst, p - tau);
    if (p < tau - 1e-6) curve_ok = false;
  }
  const bool at_zero = std::abs(appendixA_cond_prob(0.0, tau, slope) - tau) <= 1e-6;

  // (b) b=(1,0,1) satisfies the sign characterization but fails the
  // one-dimensional inner bound at the witness gamma=(1,0,0)
  const PopulationDgp ex2 = appendixA_population(2, tau, slope);
  const bool in_theta =
      membership_theta_mc(ex2, {1.0, 0.0, 1.0}, SetKind::theta, budget, Rng(6002)).in_set();
  MembershipOptions opt;
  opt.n_gamma = 0;
  opt.gammas = {{1.0, 0.0, 0.0}};
  const bool out_lower =
      !membership_theta_mc(ex2, {1.0, 0.0, 1.0}, SetKind::theta_lower, budget, Rng(6003), opt)
           .in_set();

  report(6, "strict inclusion counterexamples",
         out_theta && curve_ok && at_zero && in_theta && out_lower,
         std::string("ex1: out=") + (out_theta ? "y" : "n") + " curve_min-tau=" + fmt(worst) +
             " at0=" + (at_zero ? "y" : "n") + "; ex2: in=" + (in_theta ? "y" : "n") +
             " out_lower=" + (out_lower ? "y" : "n"));
}

// ---- estimator oracle (criterion 7) -----------------------------------------

namespace naive {

double bw(double u) { return std::abs(u) <= 1.0 ? (15.0 / 16.0) * (1 - u * u) * (1 - u * u) : 0.0; }

double sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

struct Index {
  std::vector<double> ib, ig, hv;
  double sb, sg, h;
};

Index index_parts(const Dataset& data, const SignModel& model, const ParamPoint& b,
                  const ParamPoint& gamma, const Contrast& c, const KernelConfig& cfg) {
  Index p;
  for (long i = 0; i < data.n; ++i) {
    p.ib.push_back(model.g(data.x_row(i), c, b));
    p.ig.push_back(model.g(data.x_row(i), c, gamma));
    p.hv.push_back(model.h(data.y_row(i), c));
  }
  p.sb = sd(p.ib);
  p.sg = sd(p.ig);
  p.h = cfg.scale_c * std::pow(static_cast<double>(data.n), -cfg.rate_r);
  return p;
}

std::vector<double> residuals(const Index& p) {
  const std::size_t n = p.ib.size();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w =
          bw((p.ib[i] - p.ib[j]) / (p.sb * p.h)) * bw((p.ig[i] - p.ig[j]) / (p.sg * p.h));
      num += p.hv[j] * w;
      den += w;
    }
    u[i] = p.hv[i] - num / den;
  }
  return u;
}

void index_estimates(const Dataset& data, const SignModel& model, const ParamPoint& b,
                     const EvalPoint& v, const KernelConfig& cfg, double& m_out, double& s_out) {
  const Index p = index_parts(data, model, b, v.gamma, v.c, cfg);
  const std::vector<double> u = residuals(p);
  const double gb = model.g(v.x, v.c, b), gg = model.g(v.x, v.c, v.gamma);
  double m = 0.0, s = 0.0;
  for (std::size_t i = 0; i < p.ib.size(); ++i) {
    const double k = bw((gb - p.ib[i]) / (p.sb * p.h)) * bw((gg - p.ig[i]) / (p.sg * p.h));
    m += p.ib[i] * p.hv[i] * k;
    s += u[i] * u[i] * p.ib[i] * p.ib[i] * k * k;
  }
  m_out = m / (data.n * p.h * p.h);
  s_out = std::sqrt(s) / (data.n * p.h * p.h);
}

void full_estimates(const Dataset& data, const ParamPoint& b, const std::vector<double>& x,
                    const KernelConfig& cfg, double& m_out, double& s_out) {
  const long n = data.n;
  const int d = data.x_dim;
  const double h = cfg.scale_c * std::pow(static_cast<double>(n), -cfg.rate_r);
  std::vector<double> scales(d);
  for (int k = 0; k < d; ++k) {
    std::vector<double> col;
    for (long i = 0; i < n; ++i) col.push_back(data.X[i * d + k]);
    scales[k] = sd(col);
  }
  // leave-one-out NW regression of Y on all covariates, with the mean fallback
  std::vector<double> u(n);
  double ybar = 0.0;
  for (long i = 0; i < n; ++i) ybar += data.Y[i];
  ybar /= n;
  for (long i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (long j = 0; j < n; ++j) {
      if (j == i) continue;
      double w = 1.0;
      for (int k = 0; k < d; ++k)
        w *= higher_order_biweight(cfg.order_p,
                                   (data.X[i * d + k] - data.X[j * d + k]) / (scales[k] * h));
      num += data.Y[j] * w;
      den += w;
    }
    u[i] = den > 0.0 ? data.Y[i] - num / den : data.Y[i] - ybar;
  }
  double m = 0.0, s = 0.0;
  for (long i = 0; i < n; ++i) {
    double w = 1.0, xb = 0.0;
    for (int k = 0; k < d; ++k) {
      w *= higher_order_biweight(cfg.order_p, (x[k] - data.X[i * d + k]) / (scales[k] * h));
      xb += data.X[i * d + k] * b[k];
    }
    m += xb * (data.Y[i] - 0.5) * w;
    s += u[i] * u[i] * xb * xb * w * w;
  }
  const double nhd = n * std::pow(h, d);
  m_out = m / nhd;
  s_out = std::sqrt(s) / nhd;
}

}  // namespace naive

void criterion_estimator_oracle() {
  Rng rng(7001);
  int bad = 0;
  double worst = 0.0;
  auto close = [&](double a, double b) {
    const double err = std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
    worst = std::max(worst, err);
    return err <= 1e-12;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_index(3));
    const long n = 10 + static_cast<long>(rng.uniform_index(41));
    Dataset data = simulate_section5(n, d, rng);
    const SignModel model = make_binary_model(0.5, d);
    const ParamPoint b = sample_param(model.param_space, rng);
    const KernelConfig icfg{.order_p = 2, .scale_c = 2.5, .rate_r = 0.2};

    EvalPoint v;
    auto xr = data.x_row(static_cast<long>(rng.uniform_index(n)));
    v.x.assign(xr.begin(), xr.end());
    v.gamma = sample_param(model.param_space, rng);
    v.c = model.contrasts[0];

    double mo = 0.0, so = 0.0;
    naive::index_estimates(data, model, b, v, icfg, mo, so);
    const auto u = nw_fit(data, model, b, v.gamma, v.c, icfg);
    const auto uo =
        naive::residuals(naive::index_parts(data, model, b, v.gamma, v.c, icfg));
    bool ok = close(mhat_index(data, model, b, v, icfg), mo) &&
              close(sigmahat_index(data, model, b, v, u, icfg), so);
    for (long i = 0; i < n && ok; ++i) ok = close(u[i], uo[i]);

    const KernelConfig fcfg{.order_p = (trial % 2 ? 4 : 2), .scale_c = 2.5, .rate_r = 0.15};
    double mf = 0.0, sf = 0.0;
    naive::full_estimates(data, b, v.x, fcfg, mf, sf);
    const auto uf = nw_fit_full(data, fcfg, nullptr);
    ok = ok && close(mhat_full(data, b, v.x, fcfg), mf) &&
         close(sigmahat_full(data, b, v.x, uf, fcfg), sf);
    if (!ok) ++bad;
  }
  report(7, "estimators match naive loops", bad == 0,
         std::to_string(50 - bad) + "/50 instances, worst rel err " + fmt(worst));
}

void criterion_kernel_moments() {
  const QuadRule rule = gauss_legendre(10000);
  bool ok = true;
  double worst = 0.0;
  for (int p : {2, 4, 6}) {
    for (int t = 0; t < p; ++t) {
      const double mom = integrate(rule, -1.0, 1.0, [&](double u) {
        return std::pow(u, t) * higher_order_biweight(p, u);
      });
      const double target = t == 0 ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(mom - target));
      if (std::abs(mom - target) > 1e-9) ok = false;
    }
  }
  report(8, "kernel moment conditions", ok, "worst |error| " + fmt(worst) + " (need <= 1e-9)");
}

// ---- CLI determinism (criterion 9) ------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing:" + p.string() + ">";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void criterion_cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cmindex_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bin = CMINDEX_BIN;
  const fs::path csv = dir / "data.csv";
  bool ok = shell(bin + " simulate --dgp section5 --n 150 --d 3 --seed 11 --out " + csv.string() +
                  " >/dev/null") == 0;

  auto run_pair = [&](const std::string& tag, const std::string& args,
                      const std::vector<std::string>& files) {
    for (int threads : {1, 8}) {
      const fs::path od = dir / (tag + "_t" + std::to_string(threads));
      if (shell(bin + " " + args + " --threads " + std::to_string(threads) + " --out-dir " +
                od.string() + " >/dev/null") != 0)
        return false;
    }
    for (const auto& f : files)
      if (slurp(dir / (tag + "_t1") / f) != slurp(dir / (tag + "_t8") / f)) return false;
    return true;
  };

  ok = ok && run_pair("confset",
                      "confset --data " + csv.string() + " --lattice 3,3 --B 300 --grid 50 --seed 11",
                      {"confset.json", "confset.csv"});
  ok = ok && run_pair("test",
                      "test --data " + csv.string() + " --b 1,0,0 --B 300 --grid 50 --seed 11",
                      {"test_result.json"});
  ok = ok && run_pair("mc", "mc --d 3 --n 60 --b2 0 --reps 6 --B 200 --grid 30 --seed 11",
                      {"mc_report.json", "mc_report.csv"});
  report(9, "CLI determinism across threads", ok,
         ok ? "confset/test/mc byte-identical at --threads 1 and 8" : "outputs differ or run failed");
}

void criterion_scale_invariance() {
  Rng rng(10001);
  const SignModel model = make_binary_model(0.5, 3);
  const Dataset data = simulate_section5(200, 3, rng);
  const KernelConfig kcfg{.order_p = 2, .scale_c = 3.05, .rate_r = 0.2};
  const auto grid = build_eval_grid(data, model, 100, rng);
  const ParamPoint b{1.0, 0.4, -0.6};
  const MomentProfile base = profile_index(data, model, b, grid, kcfg);
  const double t0 = statistic(base);
  bool ok = true;
  double worst = 0.0;
  for (double s : {0.5, 2.0}) {
    ParamPoint sb = b;
    for (auto& v : sb) v *= s;
    const MomentProfile p = profile_index(data, model, sb, grid, kcfg);
    if (p.size() != base.size()) {
      ok = false;
      continue;
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double err =
          std::abs(p.mhat[k] / p.sigmahat[k] - base.mhat[k] / base.sigmahat[k]);
      worst = std::max(worst, err);
      if (err > 1e-10) ok = false;
    }
    const double err = std::abs(statistic(p) - t0);
    worst = std::max(worst, err);
    if (err > 1e-10) ok = false;
  }
  report(10, "studentized scale invariance", ok,
         "worst |ratio change| " + fmt(worst) + " (need <= 1e-10)");
}

}  // namespace

int main() {
  g_t0 = std::chrono::steady_clock::now();
  criterion_estimator_oracle();
  criterion_kernel_moments();
  criterion_scale_invariance();
  criterion_cli_determinism();
  criterion_strict_inclusions();
  criterion_index_characterization();
  criterion_null_size_index();
  criterion_null_size_full();
  criterion_power_growth();
  criterion_power_dominance();
  std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAIL" : "OK", g_failures);
  return g_failures ? 1 : 0;
}
