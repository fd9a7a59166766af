#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "sulph/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;  // stdout and stderr
};

Outcome run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + SULPH_CLI_PATH + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) o.output.append(buf, n);
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string scenario(const char* name) { return std::string(SULPH_SCENARIO_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sulph_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto other = b / fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(sulph::read_text_file(e.path()), sulph::read_text_file(other)) << e.path();
  }
  EXPECT_GT(files, 0u);
}

}  // namespace

TEST(Cli, HelpExitsCleanly) {
  const auto o = run("--help");
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.output.find("solve-system"), std::string::npos);
  EXPECT_NE(o.output.find("--jacobi.alpha"), std::string::npos);
}

TEST(Cli, DecoupledScenarioSucceeds) {
  const auto out = scratch("decoupled");
  const auto o = run("solve-system --scenario " + scenario("decoupled.conf") + " --out " + out.string());
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("invariants_ok = true"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "solution.csv"));
  EXPECT_EQ(sulph::read_text_file(out / "solution.csv").substr(0, 8), "t,x,s,c\n");
  EXPECT_EQ(sulph::read_text_file(out / "path.csv").substr(0, 6), "t,psi\n");
}

TEST(Cli, PorosityDegeneracyExitsWithTwo) {
  const auto o = run("solve-system --scenario " + scenario("porosity_degenerate.conf") + " --out " +
                     scratch("porosity").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("porosity degeneracy"), std::string::npos) << o.output;
}

TEST(Cli, NonConvergenceExitsWithThree) {
  const auto o = run("solve-system --grid.n_t 33 --grid.n_x 121 --solver.max_outer 1 --solver.max_bisections 0 --out " +
                     scratch("stall").string());
  EXPECT_EQ(o.code, 3) << o.output;
  EXPECT_NE(o.output.find("fixed point not reached"), std::string::npos);
}

TEST(Cli, InputErrorsExitWithTwo) {
  EXPECT_EQ(run("solve-system --no-such-flag 1").code, 2);
  EXPECT_EQ(run("solve-system --scenario /nonexistent.conf").code, 2);
  EXPECT_EQ(run("solve-system --grid.n_t many").code, 2);
  EXPECT_EQ(run("").code, 2);  // a subcommand is required
  const auto dir = scratch("schema");
  sulph::write_file_atomic(dir / "bad.conf", "jacobi.alfa = 1\n");
  const auto o = run("sample-boundary --scenario " + (dir / "bad.conf").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.output.find("unknown key 'jacobi.alfa'"), std::string::npos);
}

TEST(Cli, FiniteDifferencesNeedSmoothData) {
  const auto o = run("solve-fd --out " + scratch("fd_rough").string());
  EXPECT_EQ(o.code, 2);
  const auto ok = run("compare --scenario " + scenario("smooth_compare.conf") + " --out " + scratch("cmp").string());
  EXPECT_EQ(ok.code, 0) << ok.output;
  EXPECT_NE(ok.output.find("error.s.relative_l2_tx"), std::string::npos);
}

TEST(Cli, SameSeedGivesByteIdenticalOutputs) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "solve-system --scenario " + scenario("jacobi_default.conf") +
                           " --grid.n_t 33 --grid.n_x 121 --ensemble 3 --seed 5 --quiet --out ";
  ASSERT_EQ(run(args + a.string()).code, 0);
  ASSERT_EQ(run(args + b.string()).code, 0);
  expect_same_tree(a, b);
}

TEST(Cli, ThreadCountDoesNotChangeOutputs) {
  const auto a = scratch("threads_1"), b = scratch("threads_3");
  const std::string args = "sample-boundary --ensemble 5 --seed 8 --quiet --out ";
  ASSERT_EQ(run(args + a.string(), "SULPH_THREADS=1").code, 0);
  ASSERT_EQ(run(args + b.string(), "SULPH_THREADS=3").code, 0);
  expect_same_tree(a, b);
}

TEST(Cli, SeedOverrideChangesThePath) {
  const auto a = scratch("seed_a"), b = scratch("seed_b");
  ASSERT_EQ(run("sample-boundary --seed 1 --quiet --out " + a.string()).code, 0);
  ASSERT_EQ(run("sample-boundary --seed 2 --quiet --out " + b.string()).code, 0);
  EXPECT_NE(sulph::read_text_file(a / "path.csv"), sulph::read_text_file(b / "path.csv"));
}

TEST(Cli, ValidateRunsSelectedCriteria) {
  const auto o = run("validate --only 4 --only 11");
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("PASS  4"), std::string::npos);
  EXPECT_NE(o.output.find("PASS 11"), std::string::npos);
  EXPECT_EQ(run("validate --only 12").code, 2);
}
