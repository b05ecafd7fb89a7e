#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>
#include <cstdlib>

#include "cmi/confidence_set.hpp"
#include "cmi/dgp.hpp"

namespace cmi {

// Bandwidth scales and full-approach kernel settings used in the simulation
// study, keyed by covariate dimension and sample size.
namespace table1 {

inline double full_rate(int d) {
  switch (d) {
    case 3: return 11.0 / 70.0;
    case 4: return 1.0 / 9.0;
    case 5: return 21.0 / 220.0;
    case 10: return 1.0 / 21.0;
  }
  throw invalid_config("table1: no defaults for d=" + std::to_string(d));
}

inline int full_order(int d) {
  switch (d) {
    case 3: return 2;
    case 4: return 4;
    case 5: return 4;
    case 10: return 6;
  }
  throw invalid_config("table1: no defaults for d=" + std::to_string(d));
}

inline double scale(Approach a, int d, long n) {
  static const std::map<std::pair<long, int>, std::pair<double, double>> tbl = {
      // (n, d) -> (c_index, c_full)
      {{250, 3}, {3.05, 2.65}},  {{250, 4}, {3.45, 4.8}},  {{250, 5}, {3.7, 5.6}},
      {{250, 10}, {4.1, 8.35}},  {{500, 3}, {2.55, 2.35}}, {{500, 4}, {2.95, 4.3}},
      {{500, 5}, {3.05, 4.9}},   {{500, 10}, {3.75, 8.0}}, {{1000, 3}, {2.0, 2.15}},
      {{1000, 4}, {2.5, 3.95}},  {{1000, 5}, {2.75, 4.45}}, {{1000, 10}, {3.5, 7.7}}};
  auto it = tbl.find({n, d});
  if (it == tbl.end())
    throw invalid_config("table1: no defaults for (d=" + std::to_string(d) +
                         ", n=" + std::to_string(n) + ")");
  return a == Approach::index ? it->second.first : it->second.second;
}

inline KernelConfig kernel_config(Approach a, int d, long n) {
  KernelConfig k;
  if (a == Approach::index) {
    k.order_p = 2;
    k.rate_r = 0.2;  // undersmoothing rate n^{-1/5}
  } else {
    k.order_p = full_order(d);
    k.rate_r = full_rate(d);
  }
  k.scale_c = scale(a, d, n);
  return k;
}

// snap to the nearest tabulated cell so desk-scale runs work at any (d, n)
inline std::pair<int, long> nearest_cell(int d, long n) {
  int best_d = 3;
  for (int cand : {3, 4, 5, 10})
    if (std::abs(cand - d) < std::abs(best_d - d)) best_d = cand;
  long best_n = 250;
  for (long cand : {250L, 500L, 1000L})
    if (std::abs(cand - n) < std::abs(best_n - n)) best_n = cand;
  return {best_d, best_n};
}

inline KernelConfig kernel_config_nearest(Approach a, int d, long n) {
  const auto [dd, nn] = nearest_cell(d, n);
  KernelConfig k = kernel_config(a, dd, nn);
  if (a == Approach::full) {
    // keep the order/rate tied to the actual dimension when tabulated
    k.order_p = (d == 3 || d == 4 || d == 5 || d == 10) ? full_order(d) : full_order(dd);
    k.rate_r = (d == 3 || d == 4 || d == 5 || d == 10) ? full_rate(d) : full_rate(dd);
  }
  return k;
}

}  // namespace table1

struct ExperimentCell {
  Approach approach = Approach::index;
  int d = 3;
  long n = 250;
  ParamPoint b;           // defaults to (1, b2, 0, ...) via make_b
  int reps = 200;
  KernelConfig kernel_config;  // table1 defaults when default-constructed scale
  ClrConfig clr_config;
  double time_budget_sec = 0.0;  // 0 = unlimited
  std::string label;

  static ExperimentCell make(Approach a, int d, long n, double b2, int reps, int B,
                             int grid_size) {
    ExperimentCell c;
    c.approach = a;
    c.d = d;
    c.n = n;
    c.b = section5_beta(d);
    c.b[1] = b2;
    c.reps = reps;
    c.kernel_config = table1::kernel_config_nearest(a, d, n);
    c.clr_config.B = B;
    c.clr_config.grid_size = grid_size;
    c.label = to_string(a) + " d=" + std::to_string(d) + " n=" + std::to_string(n) +
              " b2=" + std::to_string(b2);
    return c;
  }
};

struct CellResult {
  double freq = 0.0;
  double se = 0.0;
  int reps_done = 0;
  double wall_sec = 0.0;
  std::string status = "OK";  // OK | TIMEOUT | ERROR
  std::string message;
  std::vector<std::uint8_t> reject_flags;  // per completed rep
};

// Simulated rejection frequency of the pointwise test at the cell's b.
// Datasets and grids are redrawn per rep; the dataset substream is keyed by
// the rep index only, so index/full cells at the same (d, n, seed) test the
// same data (paired comparison).
inline CellResult rejection_frequency(const ExperimentCell& cell, Rng root, int threads) {
  cell.kernel_config.validate();
  cell.clr_config.validate();
  if (cell.reps < 1) throw invalid_config("rejection_frequency: need reps >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<bool> out_of_time{false};
  std::vector<std::int8_t> flags(cell.reps, -1);  // -1 = not run

  const SignModel model = make_binary_model(0.5, cell.d);
  parallel_for(static_cast<std::size_t>(cell.reps), threads, [&](std::size_t r) {
    if (out_of_time.load(std::memory_order_relaxed)) return;
    Rng data_rng = root.substream({100, r});
    Rng grid_rng = root.substream({101, r, cell.approach == Approach::index ? 0u : 1u});
    Rng mult_rng = root.substream({102, r, cell.approach == Approach::index ? 0u : 1u});
    Dataset data = simulate_section5(cell.n, cell.d, data_rng);
    TestOutcome oc;
    if (cell.approach == Approach::index) {
      auto grid = build_eval_grid(data, model, cell.clr_config.grid_size, grid_rng);
      oc = clr_test(data, model, cell.b, grid, cell.kernel_config, cell.clr_config, mult_rng);
    } else {
      auto grid = build_x_grid(data, cell.clr_config.grid_size, grid_rng);
      oc = clr_test_full(data, cell.b, grid, cell.kernel_config, cell.clr_config, mult_rng);
    }
    flags[r] = oc.reject ? 1 : 0;
    if (cell.time_budget_sec > 0.0) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (el > cell.time_budget_sec) out_of_time.store(true, std::memory_order_relaxed);
    }
  });

  CellResult res;
  int done = 0, rej = 0;
  for (int r = 0; r < cell.reps; ++r) {
    if (flags[r] < 0) continue;
    ++done;
    rej += flags[r];
    res.reject_flags.push_back(static_cast<std::uint8_t>(flags[r]));
  }
  res.reps_done = done;
  if (done > 0) {
    res.freq = static_cast<double>(rej) / done;
    res.se = std::sqrt(res.freq * (1.0 - res.freq) / done);
  }
  if (done < cell.reps) res.status = "TIMEOUT";
  res.wall_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

struct Report {
  std::vector<ExperimentCell> cells;
  std::vector<CellResult> results;
  std::uint64_t seed = 0;
};

// Runs all cells; a cell failure is recorded and the run continues.
inline Report run_table(const std::vector<ExperimentCell>& cells, int threads, Rng root) {
  Report rep;
  rep.cells = cells;
  rep.seed = root.key();
  rep.results.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      rep.results[i] = rejection_frequency(cells[i], root.substream({7, i}), threads);
    } catch (const std::exception& e) {
      rep.results[i].status = "ERROR";
      rep.results[i].message = e.what();
    }
  }
  return rep;
}

// Desk-scale presets mirroring the null-size and power tables.
inline std::vector<ExperimentCell> preset_cells(const std::string& name, int reps = 200,
                                                int B = 1000, int grid = 400) {
  std::vector<ExperimentCell> cells;
  if (name == "table2-desk") {
    for (double b2 : {0.0, 0.5})
      for (long n : {250L, 500L, 1000L})
        for (int d : {3, 4, 5, 10})
          for (Approach a : {Approach::index, Approach::full})
            cells.push_back(ExperimentCell::make(a, d, n, b2, reps, B, grid));
  } else if (name == "table3-desk") {
    for (long n : {250L, 500L, 1000L})
      for (int d : {3, 4, 5, 10})
        for (Approach a : {Approach::index, Approach::full})
          cells.push_back(ExperimentCell::make(a, d, n, -1.0, reps, B, grid));
  } else {
    throw invalid_config("unknown preset: " + name);
  }
  return cells;
}

}  // namespace cmi
