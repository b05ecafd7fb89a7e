#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmi/confidence_set.hpp"
#include "cmi/mc.hpp"
#include "cmi/sign_model.hpp"

namespace cmi {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

// shortest decimal that round-trips to the same double
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

}  // namespace detail

// Dataset CSV: header row, outcome columns first (named "y", or "y_t1".."y_tT"
// for panel records), covariate columns "x1".."xd"; UTF-8, LF, '.' decimal.
inline std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  if (data.y_len == 1) {
    out += "y";
  } else {
    for (int t = 1; t <= data.y_len; ++t) out += (t == 1 ? "y_t1" : ",y_t" + std::to_string(t));
  }
  for (int k = 1; k <= data.x_dim; ++k) out += ",x" + std::to_string(k);
  out += "\n";
  for (long i = 0; i < data.n; ++i) {
    for (int t = 0; t < data.y_len; ++t) {
      if (t) out += ",";
      out += detail::fmt_double(data.Y[i * data.y_len + t]);
    }
    for (int k = 0; k < data.x_dim; ++k) out += "," + detail::fmt_double(data.X[i * data.x_dim + k]);
    out += "\n";
  }
  return out;
}

inline Dataset dataset_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw invalid_data("dataset: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = detail::split_csv_line(line);
  int y_len = 0, x_dim = 0;
  for (const auto& col : header) {
    if (col.rfind('y', 0) == 0) {
      if (x_dim > 0) throw invalid_data("dataset: outcome columns must precede covariates");
      ++y_len;
    } else if (col.rfind('x', 0) == 0) {
      ++x_dim;
    } else {
      throw invalid_data("dataset: unknown column '" + col + "'");
    }
  }
  if (y_len == 0 || x_dim == 0) throw invalid_data("dataset: need y and x columns");
  Dataset data;
  data.y_len = y_len;
  data.x_dim = x_dim;
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != y_len + x_dim)
      throw invalid_data("dataset: row " + std::to_string(row) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(y_len + x_dim));
    for (int c = 0; c < y_len + x_dim; ++c) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (ec != std::errc{} || p != cells[c].data() + cells[c].size())
        throw invalid_data("dataset: row " + std::to_string(row) + " column '" + header[c] +
                           "': cannot parse '" + cells[c] + "'");
      (c < y_len ? data.Y : data.X).push_back(v);
    }
  }
  data.n = row;
  data.validate();
  return data;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_config("cannot write to '" + path + "'");
  out << content;
}

// ---- JSON serialization ----------------------------------------------------

inline nlohmann::json to_json(const TestOutcome& t) {
  return {{"statistic", t.statistic},
          {"crit_full_grid", t.crit_full_grid},
          {"contact_set_size", t.contact_set.size()},
          {"contact_fallback", t.contact_fallback},
          {"critical_value", t.critical_value},
          {"reject", t.reject},
          {"dropped_points", t.dropped_points}};
}

inline nlohmann::json to_json(const KernelConfig& k) {
  return {{"order_p", k.order_p}, {"scale", k.scale_c}, {"rate", k.rate_r}};
}

inline nlohmann::json to_json(const ClrConfig& c) {
  return {{"alpha", c.alpha}, {"B", c.B}, {"grid_size", c.grid_size}, {"seed", c.seed}};
}

inline nlohmann::json to_json(const ConfidenceSet& cs) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cs.param_grid.size(); ++i) {
    nlohmann::json r = to_json(cs.outcomes[i]);
    r["b"] = cs.param_grid[i];
    r["accepted"] = static_cast<bool>(cs.accepted[i]);
    rows.push_back(std::move(r));
  }
  return {{"version", kVersion},
          {"approach", to_string(cs.approach)},
          {"kernel", to_json(cs.kernel_config)},
          {"clr", to_json(cs.clr_config)},
          {"seed", cs.seed},
          {"rows", rows}};
}

inline ConfidenceSet confidence_set_from_json(const nlohmann::json& j) {
  ConfidenceSet cs;
  cs.approach = j.at("approach") == "index" ? Approach::index : Approach::full;
  const auto& k = j.at("kernel");
  cs.kernel_config.order_p = k.at("order_p");
  cs.kernel_config.scale_c = k.at("scale");
  cs.kernel_config.rate_r = k.at("rate");
  const auto& c = j.at("clr");
  cs.clr_config.alpha = c.at("alpha");
  cs.clr_config.B = c.at("B");
  cs.clr_config.grid_size = c.at("grid_size");
  cs.clr_config.seed = c.at("seed");
  cs.seed = j.at("seed");
  for (const auto& r : j.at("rows")) {
    cs.param_grid.push_back(r.at("b").get<ParamPoint>());
    TestOutcome t;
    t.statistic = r.at("statistic");
    t.crit_full_grid = r.at("crit_full_grid");
    t.contact_fallback = r.at("contact_fallback");
    t.critical_value = r.at("critical_value");
    t.reject = r.at("reject");
    t.dropped_points = r.at("dropped_points");
    t.contact_set.resize(r.at("contact_set_size").get<std::size_t>());
    cs.outcomes.push_back(std::move(t));
    cs.accepted.push_back(r.at("accepted").get<bool>());
  }
  return cs;
}

inline std::string confidence_set_to_csv(const ConfidenceSet& cs) {
  std::string out = "b,statistic,critical_value,contact_set_size,accepted\n";
  for (std::size_t i = 0; i < cs.param_grid.size(); ++i) {
    std::string b;
    for (std::size_t j = 0; j < cs.param_grid[i].size(); ++j)
      b += (j ? ";" : "") + detail::fmt_double(cs.param_grid[i][j]);
    out += b + "," + detail::fmt_double(cs.outcomes[i].statistic) + "," +
           detail::fmt_double(cs.outcomes[i].critical_value) + "," +
           std::to_string(cs.outcomes[i].contact_set.size()) + "," +
           (cs.accepted[i] ? "1" : "0") + "\n";
  }
  return out;
}

inline nlohmann::json to_json(const Report& rep) {
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const auto& c = rep.cells[i];
    const auto& r = rep.results[i];
    cells.push_back({{"label", c.label},
                     {"approach", to_string(c.approach)},
                     {"d", c.d},
                     {"n", c.n},
                     {"b", c.b},
                     {"reps", c.reps},
                     {"kernel", to_json(c.kernel_config)},
                     {"clr", to_json(c.clr_config)},
                     // wall_sec deliberately omitted: structured outputs are
                     // byte-identical across reruns, timing is not
                     {"freq", r.freq},
                     {"se", r.se},
                     {"reps_done", r.reps_done},
                     {"status", r.status},
                     {"message", r.message}});
  }
  return {{"version", kVersion}, {"seed", rep.seed}, {"cells", cells}};
}

inline std::string report_to_csv(const Report& rep) {
  std::string out = "approach,d,n,b2,reps_done,freq,se,status\n";
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const auto& c = rep.cells[i];
    const auto& r = rep.results[i];
    out += to_string(c.approach) + "," + std::to_string(c.d) + "," + std::to_string(c.n) + "," +
           detail::fmt_double(c.b.size() > 1 ? c.b[1] : 0.0) + "," + std::to_string(r.reps_done) +
           "," + detail::fmt_double(r.freq) + "," + detail::fmt_double(r.se) + "," + r.status +
           "\n";
  }
  return out;
}

// aligned text table, one line per cell, plus index/full power ratios where
// both approaches of a (d, n, b) cell are present
inline std::string report_to_table(const Report& rep) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %3s %6s %6s %6s %8s %8s %9s %s\n", "approach", "d", "n",
                "b2", "reps", "freq", "se", "wall[s]", "status");
  out += buf;
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const auto& c = rep.cells[i];
    const auto& r = rep.results[i];
    std::snprintf(buf, sizeof(buf), "%-8s %3d %6ld %6.2f %6d %8.3f %8.3f %9.1f %s\n",
                  to_string(c.approach).c_str(), c.d, c.n, c.b.size() > 1 ? c.b[1] : 0.0,
                  r.reps_done, r.freq, r.se, r.wall_sec, r.status.c_str());
    out += buf;
  }
  // ratio lines for paired cells
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    if (rep.cells[i].approach != Approach::index) continue;
    for (std::size_t j = 0; j < rep.cells.size(); ++j) {
      if (rep.cells[j].approach != Approach::full) continue;
      if (rep.cells[j].d != rep.cells[i].d || rep.cells[j].n != rep.cells[i].n ||
          rep.cells[j].b != rep.cells[i].b)
        continue;
      if (rep.results[i].status != "OK" || rep.results[j].status != "OK" ||
          rep.results[j].freq <= 0.0)
        continue;
      std::snprintf(buf, sizeof(buf), "ratio    %3d %6ld %6.2f  index/full = %.3f\n",
                    rep.cells[i].d, rep.cells[i].n,
                    rep.cells[i].b.size() > 1 ? rep.cells[i].b[1] : 0.0,
                    rep.results[i].freq / rep.results[j].freq);
      out += buf;
    }
  }
  return out;
}

}  // namespace cmi
