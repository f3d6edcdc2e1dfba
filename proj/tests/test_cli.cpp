#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kData = VPPLAB_DATA_DIR;
const std::string kCli = VPPLAB_CLI;

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "vpplab_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CliResult {
  int code = -1;
  std::string out, err;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = "'" + kCli + "' " + args + " > '" + o.string() + "' 2> '" + e.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void write_smoke_matrix(const fs::path& path) {
  nlohmann::json m = {{"days", {(kData / "days" / "summer.csv").string()}},
                      {"policies", {{{"kind", "perfect"}}, {{"kind", "synthetic"}, {"target_rmse", 0.1}}}},
                      {"battery", {false, true}},
                      {"seeds", 2},
                      {"duration_min", 30}};
  std::ofstream(path) << m.dump(2);
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  const fs::path d = fresh_dir("usage");
  EXPECT_EQ(cli("--help", d).code, 0);
  EXPECT_EQ(cli("", d).code, 1);
  EXPECT_EQ(cli("run --config " + q(kData / "scenario_reference.json"), d).code, 1);
  EXPECT_EQ(cli("fit --samples /nonexistent.csv --out x.json", d).code, 1);
}

TEST(Cli, RunAndReport) {
  const fs::path d = fresh_dir("run");
  write_smoke_matrix(d / "matrix.json");
  const fs::path out = d / "out";
  const CliResult r = cli("run --config " + q(kData / "scenario_reference.json") + " --matrix " + q(d / "matrix.json") +
                        " --out " + q(out) + " --jobs 2",
                    d);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"ledgers.csv", "timing.csv", "normalized_costs.csv", "device_breakdown.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string first = slurp(out / "ledgers.csv");
  const CliResult again = cli("run --config " + q(kData / "scenario_reference.json") + " --matrix " +
                            q(d / "matrix.json") + " --out " + q(out) + " --jobs 1",
                        d);
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(slurp(out / "ledgers.csv"), first);

  const CliResult rep = cli("report --out " + q(out), d);
  EXPECT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("not an assertion target"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "summary.txt"));
  EXPECT_TRUE(fs::exists(out / "cost_vs_error.csv"));
}

TEST(Cli, SeedShiftsRunIds) {
  const fs::path d = fresh_dir("seed");
  write_smoke_matrix(d / "matrix.json");
  const CliResult r = cli("--seed 40 run --config " + q(kData / "scenario_reference.json") + " --matrix " +
                        q(d / "matrix.json") + " --out " + q(d / "out"),
                    d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(d / "out" / "ledgers.csv").find("seed41"), std::string::npos);
}

TEST(Cli, ReportMissingRunsExitsOne) {
  const fs::path d = fresh_dir("missing");
  write_smoke_matrix(d / "matrix.json");
  const fs::path out = d / "out";
  ASSERT_EQ(cli("run --config " + q(kData / "scenario_reference.json") + " --matrix " + q(d / "matrix.json") +
                    " --out " + q(out),
                d)
                .code,
            0);
  std::string ledgers = slurp(out / "ledgers.csv");
  ledgers.erase(ledgers.rfind('\n', ledgers.size() - 2) + 1);
  write_file(out / "ledgers.csv", ledgers);
  const CliResult rep = cli("report --out " + q(out), d);
  EXPECT_EQ(rep.code, 1);
  EXPECT_NE(rep.out.find("missing runs"), std::string::npos);
  EXPECT_NE(rep.out.find("summer/synthetic_0.1/battery/seed2"), std::string::npos);
}

TEST(Cli, ValidationErrorsNameFileAndLine) {
  const fs::path d = fresh_dir("invalid");
  write_file(d / "bad.json", R"({"chp": {"p_min": 25}, "grid_limit": 4})");
  write_smoke_matrix(d / "matrix.json");
  const CliResult r = cli("run --config " + q(d / "bad.json") + " --matrix " + q(d / "matrix.json") + " --out " +
                        q(d / "out"),
                    d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("chp.p_min"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("grid_limit"), std::string::npos) << r.err;

  write_file(d / "samples.csv", "lead_min,relative_rmse\n5,0.1\n10,abc\n");
  const CliResult f = cli("fit --samples " + q(d / "samples.csv") + " --out " + q(d / "m.json"), d);
  EXPECT_EQ(f.code, 1);
  EXPECT_NE(f.err.find("samples.csv:3"), std::string::npos) << f.err;
}

TEST(Cli, SolverFailureThreshold) {
  const fs::path d = fresh_dir("failures");
  // 1 kW base load keeps the commitment choice open, so one node cannot prove optimality
  std::ostringstream day;
  day << "time_min,demand_kw,res_kw\n";
  for (int t = 0; t < 39 * 60; t += 5) day << t << ',' << (t >= 600 && t < 660 ? 16 : 1) << ",0\n";
  write_file(d / "hard.csv", day.str());
  nlohmann::json m = {{"days", {(d / "hard.csv").string()}},
                      {"policies", {{{"kind", "perfect"}}}},
                      {"battery", {false}},
                      {"seeds", 1},
                      {"duration_min", 60}};
  std::ofstream(d / "matrix.json") << m.dump();
  const std::string base = "run --config " + q(kData / "scenario_reference.json") + " --matrix " +
                           q(d / "matrix.json") + " --out " + q(d / "out") + " --max-nodes 1";
  const CliResult strict = cli(base, d);
  EXPECT_EQ(strict.code, 2) << strict.out << strict.err;
  EXPECT_EQ(cli(base + " --max-failure-rate 1", d).code, 0);
}

TEST(Cli, FitRoundTripAndCurveFlag) {
  const fs::path d = fresh_dir("fit");
  std::ostringstream s;
  s << "lead_min,relative_rmse\n";
  for (int t = 10; t <= 900; t += 10) s << t << ',' << std::setprecision(17) << t / (1.0 + t) << '\n';
  write_file(d / "unit.csv", s.str());
  const CliResult r = cli("fit --samples " + q(d / "unit.csv") + " --out " + q(d / "unit.json"), d);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(d / "unit.json"));
  EXPECT_NEAR(doc["a"].get<double>(), 1.0, 1e-3);
  EXPECT_NEAR(doc["b"].get<double>(), 1.0, 1e-3);
  EXPECT_NEAR(doc["c"].get<double>(), 1.0, 1e-3);
  EXPECT_TRUE(doc["monotone_0_900"].get<bool>());
  EXPECT_TRUE(fs::exists(d / "unit_curve.csv"));

  // five samples from a peaking curve (c > 1)
  std::ostringstream pk_csv;
  pk_csv << "lead_min,relative_rmse\n";
  for (int t : {10, 50, 100, 400, 800}) {
    pk_csv << t << ',' << std::setprecision(17) << t / (2.0 + 0.5 * std::pow(t, 1.2)) << '\n';
  }
  write_file(d / "peak.csv", pk_csv.str());
  const CliResult p = cli("fit --samples " + q(d / "peak.csv") + " --out " + q(d / "peak.json") + " --curve " +
                        q(d / "peak_curve.csv"),
                    d);
  ASSERT_EQ(p.code, 0) << p.err;
  const auto pk = nlohmann::json::parse(slurp(d / "peak.json"));
  // independent dense evaluation of the reported model
  const double a = pk["a"], b = pk["b"], c = pk["c"];
  bool monotone = true;
  double prev = 0.0;
  for (int t = 0; t <= 900; ++t) {
    const double e = t / (a + b * std::pow(t, c));
    if (e < prev) monotone = false;
    prev = e;
  }
  EXPECT_EQ(pk["monotone_0_900"].get<bool>(), monotone);
  EXPECT_FALSE(monotone);
  std::ifstream curve(d / "peak_curve.csv");
  std::string line;
  int rows = -1;
  while (std::getline(curve, line)) ++rows;
  EXPECT_EQ(rows, 901);
}

TEST(Cli, PlanAndSimulate) {
  const fs::path d = fresh_dir("plan");
  const fs::path day = kData / "days" / "winter.csv";
  const CliResult p = cli("plan --profile " + q(day) + " --at 60 --schedule " + q(d / "sched.csv") + " --lp " +
                        q(d / "problem.lp"),
                    d);
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(slurp(d / "sched.csv").rfind("t_min,dt_min,", 0), 0u);
  EXPECT_EQ(slurp(d / "problem.lp").rfind("vpplab-lp 1\n", 0), 0u);

  const CliResult s = cli("simulate --profile " + q(day) + " --policy synthetic --rmse 0.1 --duration 60 --trajectory " +
                        q(d / "traj.csv"),
                    d);
  ASSERT_EQ(s.code, 0) << s.err;
  const std::string traj = slurp(d / "traj.csv");
  EXPECT_EQ(traj.rfind("t_min,p_chp_kw,", 0), 0u);
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 13);
}
