#pragma once

#include <set>
#include <string>
#include <vector>

#include "cmi/clr.hpp"
#include "cmi/parallel.hpp"
#include "cmi/rng.hpp"

namespace cmi {

enum class Approach { index, full };

inline std::string to_string(Approach a) { return a == Approach::index ? "index" : "full"; }

// m evaluation points: x resampled from dataset rows, gamma uniform on
// Gamma, contrast uniform over C, all independent.
inline std::vector<EvalPoint> build_eval_grid(const Dataset& data, const SignModel& model, int m,
                                              Rng& rng) {
  if (m < 1) throw invalid_config("build_eval_grid: need m >= 1");
  model.check_data(data);
  std::vector<EvalPoint> grid;
  grid.reserve(m);
  for (int k = 0; k < m; ++k) {
    EvalPoint v;
    const long row = static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(data.n)));
    auto xr = data.x_row(row);
    v.x.assign(xr.begin(), xr.end());
    v.gamma = sample_param(model.param_space, rng);
    v.c = model.contrasts[rng.uniform_index(model.contrasts.size())];
    grid.push_back(std::move(v));
  }
  return grid;
}

// grid of covariate points for the full approach: rows resampled from data
inline std::vector<std::vector<double>> build_x_grid(const Dataset& data, int m, Rng& rng) {
  if (m < 1) throw invalid_config("build_x_grid: need m >= 1");
  std::vector<std::vector<double>> grid;
  grid.reserve(m);
  for (int k = 0; k < m; ++k) {
    const long row = static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(data.n)));
    auto xr = data.x_row(row);
    grid.emplace_back(xr.begin(), xr.end());
  }
  return grid;
}

// Parameter grid: an explicit list, or a per-coordinate lattice over the box
// of coords 2..d (b1 pinned by the normalization).
struct ParamGridSpec {
  std::vector<ParamPoint> points;       // explicit list, used when nonempty
  std::vector<int> lattice;             // per-coordinate counts for coords 2..d
};

inline std::vector<ParamPoint> build_param_grid(const ParamSpace& space,
                                                const ParamGridSpec& spec) {
  space.validate();
  std::vector<ParamPoint> out;
  if (!spec.points.empty()) {
    out = spec.points;
  } else {
    if (static_cast<int>(spec.lattice.size()) != space.dim - 1)
      throw invalid_config("build_param_grid: lattice needs one count per free coordinate");
    for (int c : spec.lattice)
      if (c < 1) throw invalid_config("build_param_grid: lattice counts must be positive");
    std::vector<int> idx(space.dim - 1, 0);
    while (true) {
      ParamPoint b(space.dim);
      b[0] = space.first_sign;
      for (int j = 1; j < space.dim; ++j) {
        const auto [lo, hi] = space.box[j - 1];
        const int cnt = spec.lattice[j - 1];
        b[j] = cnt == 1 ? 0.5 * (lo + hi)
                        : lo + (hi - lo) * static_cast<double>(idx[j - 1]) / (cnt - 1);
      }
      if (space.thresholds_monotone(b)) out.push_back(std::move(b));
      int j = 0;
      for (; j < space.dim - 1; ++j) {
        if (++idx[j] < spec.lattice[j]) break;
        idx[j] = 0;
      }
      if (j == space.dim - 1) break;
    }
  }
  // dedupe, keep first occurrence order
  std::set<ParamPoint> seen;
  std::vector<ParamPoint> dedup;
  for (auto& b : out) {
    if (static_cast<int>(b.size()) != space.dim)
      throw invalid_config("build_param_grid: parameter length mismatch");
    if (seen.insert(b).second) dedup.push_back(std::move(b));
  }
  if (dedup.empty()) throw invalid_config("build_param_grid: empty grid");
  return dedup;
}

struct ConfidenceSet {
  std::vector<ParamPoint> param_grid;
  std::vector<TestOutcome> outcomes;
  std::vector<bool> accepted;
  Approach approach = Approach::index;
  KernelConfig kernel_config;
  ClrConfig clr_config;
  std::uint64_t seed = 0;
};

// Inverts the pointwise test over the parameter grid.  One evaluation grid
// is drawn per run and shared across all b; each b gets its own multiplier
// substream so results are order- and parallelism-independent.
inline ConfidenceSet invert(const Dataset& data, const SignModel& model,
                            const std::vector<ParamPoint>& param_grid, const KernelConfig& kcfg,
                            const ClrConfig& ccfg, Rng root, int threads,
                            Approach approach = Approach::index) {
  model.check_data(data);
  kcfg.validate();
  ccfg.validate();
  if (param_grid.empty()) throw invalid_config("invert: empty parameter grid");

  ConfidenceSet cs;
  cs.param_grid = param_grid;
  cs.approach = approach;
  cs.kernel_config = kcfg;
  cs.clr_config = ccfg;
  cs.seed = root.key();
  cs.outcomes.resize(param_grid.size());
  cs.accepted.assign(param_grid.size(), false);

  Rng grid_rng = root.substream({1});
  std::vector<EvalPoint> egrid;
  std::vector<std::vector<double>> xgrid;
  if (approach == Approach::index)
    egrid = build_eval_grid(data, model, ccfg.grid_size, grid_rng);
  else
    xgrid = build_x_grid(data, ccfg.grid_size, grid_rng);

  parallel_for(param_grid.size(), threads, [&](std::size_t i) {
    Rng sub = root.substream({2, static_cast<std::uint64_t>(i)});
    cs.outcomes[i] = approach == Approach::index
                         ? clr_test(data, model, param_grid[i], egrid, kcfg, ccfg, sub)
                         : clr_test_full(data, param_grid[i], xgrid, kcfg, ccfg, sub);
  });
  for (std::size_t i = 0; i < param_grid.size(); ++i) cs.accepted[i] = !cs.outcomes[i].reject;
  return cs;
}

}  // namespace cmi
