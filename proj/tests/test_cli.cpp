#include <catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd =
      std::string(CMINDEX_BIN) + " " + args + " >" + out.string() + " 2>" + (dir / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cmindex_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("simulate writes a parseable, seed-deterministic CSV") {
  const fs::path dir = fresh_dir("sim");
  const auto r1 = run_cli("simulate --dgp section5 --n 50 --d 3 --seed 9", dir);
  REQUIRE(r1.code == 0);
  REQUIRE(r1.out.substr(0, r1.out.find('\n')) == "y,x1,x2,x3");
  REQUIRE(std::count(r1.out.begin(), r1.out.end(), '\n') == 51);
  const auto r2 = run_cli("simulate --dgp section5 --n 50 --d 3 --seed 9", dir);
  REQUIRE(r1.out == r2.out);
  const auto r3 = run_cli("simulate --dgp section5 --n 50 --d 3 --seed 10", dir);
  REQUIRE(r1.out != r3.out);
  const auto ra = run_cli("simulate --dgp appendixA1 --n 20 --seed 3", dir);
  REQUIRE(ra.code == 0);
  REQUIRE(ra.out.substr(0, ra.out.find('\n')) == "y,x1,x2");
}

TEST_CASE("test subcommand runs end to end on simulated data") {
  const fs::path dir = fresh_dir("test");
  const fs::path csv = dir / "data.csv";
  REQUIRE(run_cli("simulate --dgp section5 --n 120 --d 3 --seed 4 --out " + csv.string(), dir)
              .code == 0);
  const auto r = run_cli("test --data " + csv.string() +
                             " --b 1,0,0 --B 200 --grid 40 --seed 4 --format json --out-dir " +
                             dir.string(),
                         dir);
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(dir / "test_result.json"));
  const std::string j = slurp(dir / "test_result.json");
  REQUIRE(j.find("\"statistic\"") != std::string::npos);
  REQUIRE(j.find("\"reject\"") != std::string::npos);
  REQUIRE(j.find("\"version\"") != std::string::npos);
  // byte-identical reruns
  const auto r2 = run_cli("test --data " + csv.string() +
                              " --b 1,0,0 --B 200 --grid 40 --seed 4 --format json --out-dir " +
                              dir.string(),
                          dir);
  REQUIRE(r.out == r2.out);
}

TEST_CASE("confset output is independent of the thread count") {
  const fs::path dir = fresh_dir("confset");
  const fs::path csv = dir / "data.csv";
  REQUIRE(run_cli("simulate --dgp section5 --n 100 --d 3 --seed 6 --out " + csv.string(), dir)
              .code == 0);
  const std::string base = "confset --data " + csv.string() +
                           " --lattice 3,3 --B 200 --grid 40 --seed 6 --format json";
  const fs::path d1 = dir / "t1", d8 = dir / "t8";
  const auto r1 = run_cli(base + " --threads 1 --out-dir " + d1.string(), dir);
  const auto r8 = run_cli(base + " --threads 8 --out-dir " + d8.string(), dir);
  REQUIRE(r1.code == 0);
  REQUIRE(r8.code == 0);
  REQUIRE(slurp(d1 / "confset.json") == slurp(d8 / "confset.json"));
  REQUIRE(slurp(d1 / "confset.csv") == slurp(d8 / "confset.csv"));
}

TEST_CASE("mc single cell writes all report formats") {
  const fs::path dir = fresh_dir("mc");
  const auto r = run_cli(
      "mc --d 3 --n 60 --b2 0 --reps 3 --B 200 --grid 30 --seed 2 --out-dir " + dir.string(), dir);
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(dir / "mc_report.json"));
  REQUIRE(fs::exists(dir / "mc_report.csv"));
  REQUIRE(fs::exists(dir / "mc_report.txt"));
  REQUIRE(slurp(dir / "mc_report.json").find("\"freq\"") != std::string::npos);
}

TEST_CASE("oracle answers membership and curve queries") {
  const fs::path dir = fresh_dir("oracle");
  const auto rin = run_cli(
      "oracle --set theta --dgp section5 --d 3 --b 1,0.5,0 --budget 100000 --seed 1 --out-dir " +
          dir.string(),
      dir);
  REQUIRE(rin.code == 0);
  REQUIRE(rin.out == "true\n");
  const auto rout = run_cli(
      "oracle --set theta --dgp section5 --d 3 --b 1,-1,0 --budget 100000 --seed 1 --out-dir " +
          dir.string(),
      dir);
  REQUIRE(rout.code == 0);
  REQUIRE(rout.out == "false\n");
  const auto rc = run_cli(
      "oracle --curve condprob --tau 0.5 --slope-c 0.25 --s-min 0 --s-max 1 --s-count 5 --out-dir " +
          dir.string(),
      dir);
  REQUIRE(rc.code == 0);
  REQUIRE(rc.out.substr(0, rc.out.find('\n')) == "s,prob");
  REQUIRE(std::count(rc.out.begin(), rc.out.end(), '\n') == 6);
}

TEST_CASE("config file supplies defaults that flags override") {
  const fs::path dir = fresh_dir("config");
  const fs::path cfg = dir / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "seed = 9\n";
  }
  const auto r1 = run_cli("simulate --dgp section5 --n 30 --d 3 --config " + cfg.string(), dir);
  const auto r2 = run_cli("simulate --dgp section5 --n 30 --d 3 --seed 9", dir);
  REQUIRE(r1.code == 0);
  REQUIRE(r1.out == r2.out);
  const auto r3 =
      run_cli("simulate --dgp section5 --n 30 --d 3 --seed 5 --config " + cfg.string(), dir);
  REQUIRE(r3.out != r1.out);

  const fs::path badcfg = dir / "bad.cfg";
  {
    std::ofstream out(badcfg);
    out << "no_such_key = 1\n";
  }
  REQUIRE(run_cli("simulate --dgp section5 --n 30 --d 3 --config " + badcfg.string(), dir).code ==
          2);
}

TEST_CASE("error taxonomy maps to exit codes") {
  const fs::path dir = fresh_dir("errors");
  // unknown flag: configuration error
  REQUIRE(run_cli("simulate --no-such-flag", dir).code == 2);
  // malformed data file
  const fs::path bad = dir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "y,x1\n1,oops\n";
  }
  REQUIRE(run_cli("test --data " + bad.string() + " --b 1,0 --B 200 --kernel-scale 2 --seed 1", dir)
              .code == 3);
  // missing data file
  REQUIRE(run_cli("test --data " + (dir / "nope.csv").string() + " --b 1,0 --seed 1", dir).code !=
          0);
}
