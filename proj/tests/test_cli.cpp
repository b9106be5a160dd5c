#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mkdv/cli.hpp"

using namespace mkdv;
using namespace mkdv::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("mkdv_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kSinglePoint =
    "# one sweep point\n"
    "orders = 5\n"
    "alphas = 1.0\n"
    "betas = 2.0\n"
    "times = 0\n"
    "soliton_c = 1\n";

int run_tool(const std::string& args) {
  const std::string cmd = std::string(MKDV_LAB_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, DefaultsPerCommand) {
  const RunConfig v = parse_config("", Command::kVerify);
  EXPECT_EQ(v.orders, (std::vector<int>{3, 5, 7, 9, 11}));
  EXPECT_EQ(v.alphas, (std::vector<double>{0.5, 1.0, 2.0}));
  const RunConfig s = parse_config("", Command::kStability);
  EXPECT_EQ(s.orders, std::vector<int>{5});
  EXPECT_EQ(s.stability_t_end, 5.0);
  EXPECT_EQ(s.etas, (std::vector<double>{0.0, 1e-2}));
}

TEST(Config, ParsesKeysListsAndComments) {
  const RunConfig c = parse_config(
      "orders = 5, 7  # trailing comment\n\n  alphas=0.5,2\nbetas = 1\ntol.ode4 = 1e-9\nseed = 42\n"
      "evolve.integrator = etdrk4\n",
      Command::kEvolve);
  EXPECT_EQ(c.orders, (std::vector<int>{5, 7}));
  EXPECT_EQ(c.alphas, (std::vector<double>{0.5, 2.0}));
  EXPECT_EQ(c.tol_ode4, 1e-9);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.integrator, Integrator::kEtdrk4);
}

TEST(Config, RejectsBadInput) {
  for (const char* text : {"nonsense = 1\n", "orders = 4\n", "orders = 5\norders = 7\n", "alphas = -1\n",
                           "tol.ode4 = 0\n", "tol.ode4 = abc\n", "betas =\n", "just a line\n", "alphas = \n",
                           "quadrature_points = 1000\n", "command = spectrum\n", "budget = -1\n"})
    EXPECT_THROW(parse_config(text, Command::kVerify), ConfigError) << text;
  EXPECT_THROW(parse_config("stability.etas = 0.5\n", Command::kStability), ConfigError);
  EXPECT_THROW(parse_config("stability.perturbations = square\n", Command::kStability), ConfigError);
  EXPECT_THROW(parse_config("orders = 11\n", Command::kEvolve), ConfigError);
  EXPECT_NO_THROW(parse_config("command = verify\n", Command::kVerify));
}

TEST(Config, EchoIncludesResolvedDefaults) {
  const Json j = parse_config("seed = 7\n", Command::kVerify).to_json();
  EXPECT_EQ(j["command"], "verify");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["tol"]["ode4"], 1e-8);
  EXPECT_TRUE(j["budget"].is_null());
}

TEST(Report, SeventeenDigitFloats) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(std::nan("")), "null");
  EXPECT_EQ(to_json_text(Json{{"a", 0.5}, {"b", Json::array({1, 2})}}), "{\n  \"a\": 0.5,\n  \"b\": [1, 2]\n}\n");
}

TEST(Report, PassIffMeasuredWithinBudget) {
  EXPECT_TRUE(make_check("x", nullptr, 1.0, 1.0).pass);
  EXPECT_FALSE(make_check("x", nullptr, 1.0 + 1e-15, 1.0).pass);
  EXPECT_FALSE(make_check("x", nullptr, std::nan(""), 1.0).pass);
}

TEST(Pool, OrderedResultsAndErrors) {
  const auto sq = parallel_map<int>(50, [](std::size_t i) { return static_cast<int>(i * i); }, 4);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sq[i], i * i);
  EXPECT_THROW(parallel_map<int>(
                   10, [](std::size_t i) -> int { if (i == 7) throw DomainError("boom"); return 0; }, 3),
               DomainError);
}

TEST(Verify, SinglePointRecordCount) {
  const RunConfig c = parse_config(kSinglePoint, Command::kVerify);
  const SuiteReport r = cmd_verify(c);
  // ode4, evolution, mass, energy, E5, reduction, 3 expansion shapes,
  // first integral, time derivative, two soliton ODEs.
  EXPECT_EQ(r.records.size(), 13u);
  EXPECT_TRUE(r.all_pass());
  const Json j = r.to_json();
  EXPECT_EQ(j["summary"]["total"], 13);
  EXPECT_EQ(j["summary"]["passed"].get<int>() + j["summary"]["failed"].get<int>(), 13);
}

TEST(Verify, ZeroBudgetFailsEveryResidual) {
  const RunConfig c = parse_config(std::string(kSinglePoint) + "budget = 0\n", Command::kVerify);
  const SuiteReport r = cmd_verify(c);
  EXPECT_EQ(r.passed(), 0);
  for (const auto& rec : r.records) EXPECT_EQ(rec.budget, 0.0);
}

TEST(Verify, DeterministicAcrossWorkerCounts) {
  const RunConfig c = parse_config("orders = 5, 9\nalphas = 0.5, 2\nbetas = 1\ntimes = 0.37\n", Command::kVerify);
  const std::string a = to_json_text(cmd_verify(c, 1).to_json());
  const std::string b = to_json_text(cmd_verify(c, 3).to_json());
  EXPECT_EQ(a, b);
}

TEST(Run, MissingOutputDirectory) {
  const RunConfig c = parse_config(kSinglePoint, Command::kVerify);
  EXPECT_THROW(run(c, fs::temp_directory_path() / "mkdv_cli_does_not_exist", 1), ConfigError);
}

TEST(Stability, SmallRunDeterministicUnderSeed) {
  const char* text =
      "stability.n_points = 256\nstability.t_end = 0.1\nstability.snapshot_every = 0.05\n"
      "stability.etas = 0.01\nstability.perturbations = gaussian\n";
  RunConfig c = parse_config(text, Command::kStability);
  c.seed = 3;
  const fs::path d1 = fresh_dir("stab1"), d2 = fresh_dir("stab2"), d3 = fresh_dir("stab3");
  const SuiteReport r1 = run(c, d1, 1);
  run(c, d2, 2);
  EXPECT_EQ(slurp(d1 / "report.json"), slurp(d2 / "report.json"));
  EXPECT_EQ(slurp(d1 / "stability_000.json"), slurp(d2 / "stability_000.json"));
  EXPECT_TRUE(fs::exists(d1 / "stability_000.csv"));
  c.seed = 4;
  run(c, d3, 1);
  EXPECT_NE(slurp(d1 / "stability_000.json"), slurp(d3 / "stability_000.json"));
  EXPECT_GE(r1.records.size(), 2u);
}

TEST(Tool, ExitCodes) {
  const fs::path dir = fresh_dir("tool");
  {
    std::ofstream(dir / "ok.cfg") << kSinglePoint;
    std::ofstream(dir / "zero.cfg") << kSinglePoint << "budget = 0\n";
    std::ofstream(dir / "bad.cfg") << "nonsense = 1\n";
  }
  const fs::path out = dir / "out";
  fs::create_directories(out);
  const std::string o = " --out " + out.string();
  EXPECT_EQ(run_tool("verify --config " + (dir / "ok.cfg").string() + o), 0);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_EQ(run_tool("verify --config " + (dir / "zero.cfg").string() + o), 1);
  EXPECT_EQ(run_tool("verify --config " + (dir / "bad.cfg").string() + o), 2);
  EXPECT_EQ(run_tool("verify --config " + (dir / "missing.cfg").string() + o), 2);
  EXPECT_EQ(run_tool("verify --config " + (dir / "ok.cfg").string() + " --out " + (dir / "nope").string()), 2);
  EXPECT_EQ(run_tool("frobnicate --config x --out y"), 2);
  EXPECT_EQ(run_tool("verify --config " + (dir / "ok.cfg").string() + o + " --seed 5"), 0);
}

TEST(Tool, ByteIdenticalReruns) {
  const fs::path dir = fresh_dir("rerun");
  std::ofstream(dir / "ok.cfg") << kSinglePoint;
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  ASSERT_EQ(run_tool("verify --config " + (dir / "ok.cfg").string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_tool("verify --config " + (dir / "ok.cfg").string() + " --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
}
