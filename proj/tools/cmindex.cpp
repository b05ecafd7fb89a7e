// Command-line front end: simulate | test | confset | mc | oracle.
// All randomness flows from --seed; --threads only changes scheduling, never
// results.  Exit codes: 0 ok, 2 invalid config, 3 invalid data, 4 degenerate
// profile, 5 timeout.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "cmi/config.hpp"
#include "cmi/dgp.hpp"
#include "cmi/io.hpp"
#include "cmi/mc.hpp"

namespace {

using nlohmann::json;

constexpr int kExitInvalidConfig = 2;
constexpr int kExitInvalidData = 3;
constexpr int kExitDegenerateProfile = 4;
constexpr int kExitTimeout = 5;

std::vector<double> parse_vector(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (...) {
      throw cmi::invalid_config("cannot parse number '" + tok + "' in '" + s + "'");
    }
  }
  if (out.empty()) throw cmi::invalid_config("empty vector '" + s + "'");
  return out;
}

std::vector<int> parse_counts(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_vector(s)) out.push_back(static_cast<int>(v));
  return out;
}

struct Common {
  std::string config_path;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = ".";
  std::string format = "table";  // csv | json | table
  cmi::Config file;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "flat key=value config file");
    app->add_option("--seed", seed, "root seed; the only entropy source");
    app->add_option("--threads", threads, "worker pool size");
    app->add_option("--out-dir", out_dir, "directory for output artifacts");
    app->add_option("--format", format, "stdout format: csv|json|table")
        ->check(CLI::IsMember({"csv", "json", "table"}));
  }

  // config-file values fill in flags the user did not pass
  void load_file(const CLI::App* app) {
    if (config_path.empty()) return;
    file = cmi::Config::from_file(config_path);
    file.reject_unknown({"seed", "threads", "out_dir", "format", "kernel.order_p", "kernel.scale",
                         "kernel.rate", "clr.alpha", "clr.B", "clr.grid_size", "clr.seed",
                         "model.kind", "model.tau", "model.K", "model.T", "model.q", "mc.reps",
                         "mc.B", "mc.grid"});
    if (!app->count("--seed")) seed = static_cast<std::uint64_t>(file.get_long("seed", 1));
    if (!app->count("--threads")) threads = static_cast<int>(file.get_long("threads", 1));
    if (!app->count("--out-dir")) out_dir = file.get_string("out_dir", ".");
    if (!app->count("--format")) format = file.get_string("format", "table");
  }

  json echo() const {
    // threads is deliberately not echoed: outputs are parallelism-invariant
    json e = {{"seed", seed}, {"version", cmi::kVersion}};
    if (!config_path.empty()) e["config_file"] = file.values();
    return e;
  }

  void write(const std::string& name, const std::string& content) const {
    std::filesystem::create_directories(out_dir);
    cmi::write_file((std::filesystem::path(out_dir) / name).string(), content);
  }
};

cmi::Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cmi::invalid_data("cannot open dataset '" + path + "'");
  return cmi::dataset_from_csv(in);
}

struct ModelFlags {
  std::string kind = "binary";
  double tau = 0.5;
  int K = 1, T = 2, q = 1;

  void add_to(CLI::App* app) {
    app->add_option("--model", kind, "binary|ordered|multinomial|panel-binary|panel-ordered");
    app->add_option("--tau", tau, "quantile level for binary/ordered models");
    app->add_option("--K", K, "number of ordered thresholds / multinomial alternatives");
    app->add_option("--T", T, "panel length");
    app->add_option("--q", q, "covariate block length");
  }

  void load_file(const CLI::App* app, const cmi::Config& f) {
    if (!app->count("--model")) kind = f.get_string("model.kind", kind);
    if (!app->count("--tau")) tau = f.get_double("model.tau", tau);
    if (!app->count("--K")) K = static_cast<int>(f.get_long("model.K", K));
    if (!app->count("--T")) T = static_cast<int>(f.get_long("model.T", T));
    if (!app->count("--q")) q = static_cast<int>(f.get_long("model.q", q));
  }

  cmi::SignModel build(int x_dim) const {
    if (kind == "binary") return cmi::make_binary_model(tau, x_dim);
    if (kind == "ordered") return cmi::make_ordered_model(K, x_dim, tau);
    if (kind == "multinomial") return cmi::make_multinomial_model(K, q);
    if (kind == "panel-binary") return cmi::make_panel_binary_model(T, q);
    if (kind == "panel-ordered") return cmi::make_panel_ordered_model(K, T, q);
    throw cmi::invalid_config("unknown model kind '" + kind + "'");
  }
};

struct KernelFlags {
  double scale = 0.0;  // 0 = table defaults by (approach, d, n)
  double rate = 0.0;
  int order = 0;

  void add_to(CLI::App* app) {
    app->add_option("--kernel-scale", scale, "bandwidth scale c (default: simulation table)");
    app->add_option("--kernel-rate", rate, "bandwidth exponent r (default: simulation table)");
    app->add_option("--kernel-order", order, "kernel order p in {2,4,6}");
  }

  void load_file(const CLI::App* app, const cmi::Config& f) {
    if (!app->count("--kernel-scale")) scale = f.get_double("kernel.scale", scale);
    if (!app->count("--kernel-rate")) rate = f.get_double("kernel.rate", rate);
    if (!app->count("--kernel-order")) order = static_cast<int>(f.get_long("kernel.order_p", order));
  }

  cmi::KernelConfig resolve(cmi::Approach a, int d, long n) const {
    cmi::KernelConfig k = cmi::table1::kernel_config_nearest(a, d, n);
    if (scale > 0.0) k.scale_c = scale;
    if (rate > 0.0) k.rate_r = rate;
    if (order > 0) k.order_p = order;
    k.validate();
    return k;
  }
};

struct ClrFlags {
  double alpha = 0.05;
  int B = 1000;
  int grid = 400;

  void add_to(CLI::App* app) {
    app->add_option("--alpha", alpha, "test level in (0, 0.5]");
    app->add_option("--B", B, "multiplier repetitions");
    app->add_option("--grid", grid, "evaluation grid size");
  }

  void load_file(const CLI::App* app, const cmi::Config& f) {
    if (!app->count("--alpha")) alpha = f.get_double("clr.alpha", alpha);
    if (!app->count("--B")) B = static_cast<int>(f.get_long("clr.B", B));
    if (!app->count("--grid")) grid = static_cast<int>(f.get_long("clr.grid_size", grid));
  }

  cmi::ClrConfig resolve(std::uint64_t seed) const {
    cmi::ClrConfig c;
    c.alpha = alpha;
    c.B = B;
    c.grid_size = grid;
    c.seed = seed;
    c.validate();
    return c;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"set inference for semiparametric discrete choice models"};
  app.require_subcommand(1);

  // ---- simulate
  auto* sim = app.add_subcommand("simulate", "draw a dataset and write CSV");
  Common sim_common;
  sim_common.add_to(sim);
  std::string sim_dgp = "section5";
  long sim_n = 250;
  int sim_d = 3;
  double sim_tau = 0.5, sim_slope = 0.2;
  std::string sim_out;
  sim->add_option("--dgp", sim_dgp, "section5|appendixA1|appendixA2")
      ->check(CLI::IsMember({"section5", "appendixA1", "appendixA2"}));
  sim->add_option("--n", sim_n, "observations");
  sim->add_option("--d", sim_d, "covariate dimension (section5)");
  sim->add_option("--tau", sim_tau, "quantile level (appendixA)");
  sim->add_option("--slope-c", sim_slope, "linear slope of the noise cdf (appendixA)");
  sim->add_option("--out", sim_out, "output file (default stdout)");

  // ---- test
  auto* tst = app.add_subcommand("test", "pointwise test at a single b");
  Common tst_common;
  tst_common.add_to(tst);
  ModelFlags tst_model;
  tst_model.add_to(tst);
  KernelFlags tst_kernel;
  tst_kernel.add_to(tst);
  ClrFlags tst_clr;
  tst_clr.add_to(tst);
  std::string tst_data, tst_b, tst_approach = "index";
  tst->add_option("--data", tst_data, "dataset CSV")->required();
  tst->add_option("--b", tst_b, "parameter value, comma separated")->required();
  tst->add_option("--approach", tst_approach, "index|full")
      ->check(CLI::IsMember({"index", "full"}));

  // ---- confset
  auto* cfs = app.add_subcommand("confset", "invert the test over a parameter grid");
  Common cfs_common;
  cfs_common.add_to(cfs);
  ModelFlags cfs_model;
  cfs_model.add_to(cfs);
  KernelFlags cfs_kernel;
  cfs_kernel.add_to(cfs);
  ClrFlags cfs_clr;
  cfs_clr.add_to(cfs);
  std::string cfs_data, cfs_blist, cfs_lattice, cfs_approach = "index";
  cfs->add_option("--data", cfs_data, "dataset CSV")->required();
  cfs->add_option("--b-list", cfs_blist, "explicit points 'b1,b2;b1,b2;...'");
  cfs->add_option("--lattice", cfs_lattice, "per-coordinate counts for coords 2..d");
  cfs->add_option("--approach", cfs_approach, "index|full")
      ->check(CLI::IsMember({"index", "full"}));

  // ---- mc
  auto* mc = app.add_subcommand("mc", "rejection-frequency experiment grid");
  Common mc_common;
  mc_common.add_to(mc);
  std::string mc_preset;
  std::string mc_approach = "index";
  int mc_d = 3, mc_reps = 200, mc_B = 1000, mc_grid = 400;
  long mc_n = 250;
  double mc_b2 = 0.0, mc_budget = 0.0;
  mc->add_option("--preset", mc_preset, "table2-desk|table3-desk");
  mc->add_option("--approach", mc_approach, "index|full (single-cell mode)")
      ->check(CLI::IsMember({"index", "full"}));
  mc->add_option("--d", mc_d, "covariate dimension");
  mc->add_option("--n", mc_n, "sample size");
  mc->add_option("--b2", mc_b2, "second coordinate of the tested b");
  mc->add_option("--reps", mc_reps, "Monte Carlo repetitions");
  mc->add_option("--B", mc_B, "multiplier repetitions");
  mc->add_option("--grid", mc_grid, "evaluation grid size");
  mc->add_option("--time-budget", mc_budget, "per-cell wall-clock budget in seconds (0 = off)");

  // ---- oracle
  auto* orc = app.add_subcommand("oracle", "population membership queries and curves");
  Common orc_common;
  orc_common.add_to(orc);
  std::string orc_set = "theta", orc_dgp = "section5", orc_b, orc_gamma, orc_curve;
  long orc_budget = 1000000;
  int orc_d = 3, orc_ngamma = 50;
  double orc_tau = 0.5, orc_slope = 0.2, orc_smin = 0.0, orc_smax = 1.0;
  int orc_scount = 50;
  orc->add_option("--set", orc_set, "theta|theta-tilde|theta-lower|theta-upper")
      ->check(CLI::IsMember({"theta", "theta-tilde", "theta-lower", "theta-upper"}));
  orc->add_option("--dgp", orc_dgp, "section5|appendixA1|appendixA2")
      ->check(CLI::IsMember({"section5", "appendixA1", "appendixA2"}));
  orc->add_option("--b", orc_b, "parameter value, comma separated");
  orc->add_option("--gamma", orc_gamma, "explicit witness gamma (comma separated)");
  orc->add_option("--budget", orc_budget, "Monte Carlo sample budget");
  orc->add_option("--d", orc_d, "covariate dimension (section5)");
  orc->add_option("--n-gamma", orc_ngamma, "random gamma draws for the quantified sets");
  orc->add_option("--tau", orc_tau, "quantile level (appendixA)");
  orc->add_option("--slope-c", orc_slope, "noise cdf slope (appendixA)");
  orc->add_option("--curve", orc_curve, "condprob: tabulate P(Y=1|X'b=s) on an s grid");
  orc->add_option("--s-min", orc_smin, "curve grid start");
  orc->add_option("--s-max", orc_smax, "curve grid end");
  orc->add_option("--s-count", orc_scount, "curve grid size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalidConfig;
  }

  if (sim->parsed()) {
    sim_common.load_file(sim);
    cmi::Rng rng(sim_common.seed);
    cmi::Dataset data = sim_dgp == "section5"
                            ? cmi::simulate_section5(sim_n, sim_d, rng)
                            : cmi::simulate_appendixA(sim_dgp == "appendixA1" ? 1 : 2, sim_n,
                                                      sim_tau, sim_slope, rng);
    const std::string csv = cmi::dataset_to_csv(data);
    if (sim_out.empty())
      std::cout << csv;
    else
      cmi::write_file(sim_out, csv);
    return 0;
  }

  if (tst->parsed()) {
    tst_common.load_file(tst);
    tst_model.load_file(tst, tst_common.file);
    tst_kernel.load_file(tst, tst_common.file);
    tst_clr.load_file(tst, tst_common.file);
    const cmi::Dataset data = load_dataset(tst_data);
    const cmi::ParamPoint b = parse_vector(tst_b);
    const cmi::Approach approach =
        tst_approach == "index" ? cmi::Approach::index : cmi::Approach::full;
    const cmi::SignModel model = tst_model.build(data.x_dim);
    if (approach == cmi::Approach::index && static_cast<int>(b.size()) != model.param_space.dim)
      throw cmi::invalid_config("parameter has length " + std::to_string(b.size()) +
                                ", model expects " + std::to_string(model.param_space.dim));
    if (approach == cmi::Approach::full && static_cast<int>(b.size()) != data.x_dim)
      throw cmi::invalid_config("parameter has length " + std::to_string(b.size()) +
                                ", data has d=" + std::to_string(data.x_dim));
    const cmi::KernelConfig kcfg = tst_kernel.resolve(approach, data.x_dim, data.n);
    const cmi::ClrConfig ccfg = tst_clr.resolve(tst_common.seed);
    cmi::Rng root(tst_common.seed);
    cmi::Rng grid_rng = root.substream({1});
    cmi::TestOutcome oc;
    if (approach == cmi::Approach::index) {
      auto grid = cmi::build_eval_grid(data, model, ccfg.grid_size, grid_rng);
      oc = cmi::clr_test(data, model, b, grid, kcfg, ccfg, root.substream({2}));
    } else {
      auto grid = cmi::build_x_grid(data, ccfg.grid_size, grid_rng);
      oc = cmi::clr_test_full(data, b, grid, kcfg, ccfg, root.substream({2}));
    }
    json out = cmi::to_json(oc);
    out["b"] = b;
    out["approach"] = tst_approach;
    out["kernel"] = cmi::to_json(kcfg);
    out["clr"] = cmi::to_json(ccfg);
    out["run"] = tst_common.echo();
    tst_common.write("test_result.json", out.dump(2) + "\n");
    if (tst_common.format == "json") {
      std::cout << out.dump(2) << "\n";
    } else {
      std::cout << "T(b)           = " << oc.statistic << "\n"
                << "critical value = " << oc.critical_value << "\n"
                << "contact set    = " << oc.contact_set.size() << " points"
                << (oc.contact_fallback ? " (fallback: full grid)" : "") << "\n"
                << "decision       = " << (oc.reject ? "reject" : "accept") << "\n";
    }
    return 0;
  }

  if (cfs->parsed()) {
    cfs_common.load_file(cfs);
    cfs_model.load_file(cfs, cfs_common.file);
    cfs_kernel.load_file(cfs, cfs_common.file);
    cfs_clr.load_file(cfs, cfs_common.file);
    const cmi::Dataset data = load_dataset(cfs_data);
    const cmi::SignModel model = cfs_model.build(data.x_dim);
    cmi::ParamGridSpec spec;
    if (!cfs_blist.empty()) {
      std::stringstream ss(cfs_blist);
      std::string tok;
      while (std::getline(ss, tok, ';')) spec.points.push_back(parse_vector(tok));
    } else if (!cfs_lattice.empty()) {
      spec.lattice = parse_counts(cfs_lattice);
    } else {
      throw cmi::invalid_config("confset: pass --b-list or --lattice");
    }
    const auto grid = cmi::build_param_grid(model.param_space, spec);
    const cmi::Approach approach =
        cfs_approach == "index" ? cmi::Approach::index : cmi::Approach::full;
    const cmi::KernelConfig kcfg = cfs_kernel.resolve(approach, data.x_dim, data.n);
    const cmi::ClrConfig ccfg = cfs_clr.resolve(cfs_common.seed);
    const cmi::ConfidenceSet cs = cmi::invert(data, model, grid, kcfg, ccfg,
                                              cmi::Rng(cfs_common.seed), cfs_common.threads,
                                              approach);
    json out = cmi::to_json(cs);
    out["run"] = cfs_common.echo();
    cfs_common.write("confset.json", out.dump(2) + "\n");
    cfs_common.write("confset.csv", cmi::confidence_set_to_csv(cs));
    if (cfs_common.format == "json")
      std::cout << out.dump(2) << "\n";
    else
      std::cout << cmi::confidence_set_to_csv(cs);
    return 0;
  }

  if (mc->parsed()) {
    mc_common.load_file(mc);
    if (!mc->count("--reps")) mc_reps = static_cast<int>(mc_common.file.get_long("mc.reps", mc_reps));
    if (!mc->count("--B")) mc_B = static_cast<int>(mc_common.file.get_long("mc.B", mc_B));
    if (!mc->count("--grid")) mc_grid = static_cast<int>(mc_common.file.get_long("mc.grid", mc_grid));
    std::vector<cmi::ExperimentCell> cells;
    if (!mc_preset.empty()) {
      cells = cmi::preset_cells(mc_preset, mc_reps, mc_B, mc_grid);
    } else {
      cells.push_back(cmi::ExperimentCell::make(
          mc_approach == "index" ? cmi::Approach::index : cmi::Approach::full, mc_d, mc_n, mc_b2,
          mc_reps, mc_B, mc_grid));
    }
    for (auto& c : cells) c.time_budget_sec = mc_budget;
    const cmi::Report rep = cmi::run_table(cells, mc_common.threads, cmi::Rng(mc_common.seed));
    json out = cmi::to_json(rep);
    out["run"] = mc_common.echo();
    mc_common.write("mc_report.json", out.dump(2) + "\n");
    mc_common.write("mc_report.csv", cmi::report_to_csv(rep));
    mc_common.write("mc_report.txt", cmi::report_to_table(rep));
    if (mc_common.format == "json")
      std::cout << out.dump(2) << "\n";
    else if (mc_common.format == "csv")
      std::cout << cmi::report_to_csv(rep);
    else
      std::cout << cmi::report_to_table(rep);
    for (const auto& r : rep.results)
      if (r.status == "TIMEOUT") throw cmi::timeout_error("one or more cells hit the time budget");
    return 0;
  }

  if (orc->parsed()) {
    orc_common.load_file(orc);
    json out;
    out["run"] = orc_common.echo();
    if (orc_curve == "condprob") {
      if (orc_scount < 1) throw cmi::invalid_config("oracle: --s-count must be positive");
      json rows = json::array();
      for (int i = 0; i < orc_scount; ++i) {
        const double s = orc_scount == 1
                             ? orc_smin
                             : orc_smin + (orc_smax - orc_smin) * i / (orc_scount - 1);
        rows.push_back({{"s", s}, {"prob", cmi::appendixA_cond_prob(s, orc_tau, orc_slope)}});
      }
      out["curve"] = rows;
      out["tau"] = orc_tau;
      out["slope_c"] = orc_slope;
      orc_common.write("oracle_result.json", out.dump(2) + "\n");
      if (orc_common.format == "json") {
        std::cout << out.dump(2) << "\n";
      } else {
        std::cout << "s,prob\n";
        for (const auto& r : rows)
          std::cout << cmi::detail::fmt_double(r.at("s")) << ","
                    << cmi::detail::fmt_double(r.at("prob")) << "\n";
      }
      return 0;
    }
    if (orc_b.empty()) throw cmi::invalid_config("oracle: pass --b (or --curve condprob)");
    const cmi::ParamPoint b = parse_vector(orc_b);
    cmi::PopulationDgp pop;
    if (orc_dgp == "section5")
      pop = cmi::section5_population(orc_d);
    else
      pop = cmi::appendixA_population(orc_dgp == "appendixA1" ? 1 : 2, orc_tau, orc_slope);
    cmi::SetKind kind = cmi::SetKind::theta;
    if (orc_set == "theta-tilde") kind = cmi::SetKind::theta_tilde;
    else if (orc_set == "theta-lower") kind = cmi::SetKind::theta_lower;
    else if (orc_set == "theta-upper") kind = cmi::SetKind::theta_upper;
    cmi::MembershipOptions opt;
    opt.n_gamma = orc_ngamma;
    if (!orc_gamma.empty()) opt.gammas.push_back(parse_vector(orc_gamma));
    const cmi::MembershipVerdict v =
        cmi::membership_theta_mc(pop, b, kind, orc_budget, cmi::Rng(orc_common.seed), opt);
    const char* s = v.status == cmi::MembershipVerdict::Status::in_set ? "true"
                    : v.status == cmi::MembershipVerdict::Status::out_of_set ? "false"
                                                                             : "inconclusive";
    out["set"] = orc_set;
    out["b"] = b;
    out["member"] = s;
    out["violation"] = v.violation;
    out["budget"] = orc_budget;
    orc_common.write("oracle_result.json", out.dump(2) + "\n");
    if (orc_common.format == "json")
      std::cout << out.dump(2) << "\n";
    else
      std::cout << s << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cmi::timeout_error& e) {
    std::cerr << "timeout: " << e.what() << "\n";
    return kExitTimeout;
  } catch (const cmi::degenerate_profile& e) {
    std::cerr << "degenerate profile: " << e.what() << "\n";
    return kExitDegenerateProfile;
  } catch (const cmi::invalid_data& e) {
    std::cerr << "invalid data: " << e.what() << "\n";
    return kExitInvalidData;
  } catch (const cmi::invalid_config& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
