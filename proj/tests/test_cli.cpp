#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mni/norms.hpp"
#include "mni/solvers.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + MNI_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

std::string fixture(const char* name) {
  return std::string("\"") + MNI_FIXTURES_DIR + "/" + name + "\"";
}

}  // namespace

TEST_CASE("solve on the one-row l1 fixture prints (0, 1) and matches the library") {
  const fs::path dir = "cli_solve";
  const RunResult res =
      run_cli("--config " + fixture("solve_l1.json") + " --out " + dir.string() + " solve", dir);
  CHECK(res.exit_code == 0);
  CHECK(res.out.find("h_hat = [0, 1]") != std::string::npos);

  // estimate.csv parses back to the direct library result
  std::ifstream est(dir / "estimate.csv");
  std::string line;
  std::getline(est, line);  // header
  std::vector<double> values;
  while (std::getline(est, line)) values.push_back(std::stod(line.substr(line.find(',') + 1)));
  REQUIRE(values.size() == 2);

  mni::ProblemInstance inst;
  inst.design.resize(1, 2);
  inst.design << 1, 2;
  inst.responses = Eigen::VectorXd::Constant(1, 2.0);
  const auto direct = mni::solve_min_norm(inst, mni::NormFamily::l1());
  CHECK(values[0] == doctest::Approx(direct.estimate(0)).epsilon(1e-12));
  CHECK(values[1] == doctest::Approx(direct.estimate(1)).epsilon(1e-12));
  fs::remove_all(dir);
}

TEST_CASE("certify on the zero-noise fixture emits the zero certificate") {
  const fs::path dir = "cli_certify";
  const RunResult res = run_cli(
      "--config " + fixture("certify_zero.json") + " --out " + dir.string() + " certify", dir);
  CHECK(res.exit_code == 0);
  const json cert = json::parse(slurp(dir / "certificate.json"));
  CHECK(cert["primal_value"].get<double>() == 0.0);
  CHECK(cert["dual_value"].get<double>() == 0.0);
  CHECK(cert["lower_bracket"].get<double>() == 0.0);
  CHECK(cert["upper_bracket"].get<double>() == 0.0);
  fs::remove_all(dir);
}

TEST_CASE("sweep output is byte-identical for repeated seeds and different job counts") {
  const fs::path dir1 = "cli_sweep1", dir2 = "cli_sweep2";
  const RunResult r1 = run_cli("--config " + fixture("sweep_tiny.json") + " --out " +
                                   dir1.string() + " --jobs 1 sweep",
                               dir1);
  const RunResult r2 = run_cli("--config " + fixture("sweep_tiny.json") + " --out " +
                                   dir2.string() + " --jobs 2 sweep",
                               dir2);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  const std::string csv1 = slurp(dir1 / "records.csv");
  CHECK(!csv1.empty());
  CHECK(csv1 == slurp(dir2 / "records.csv"));
  CHECK(slurp(dir1 / "plot.csv") == slurp(dir2 / "plot.csv"));
  CHECK(slurp(dir1 / "plan.json") == slurp(dir2 / "plan.json"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("seed override changes the sweep output") {
  const fs::path dir1 = "cli_seed1", dir2 = "cli_seed2";
  run_cli("--config " + fixture("sweep_tiny.json") + " --out " + dir1.string() + " sweep", dir1);
  run_cli("--config " + fixture("sweep_tiny.json") + " --out " + dir2.string() +
              " --seed 777 sweep",
          dir2);
  CHECK(slurp(dir1 / "records.csv") != slurp(dir2 / "records.csv"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("bad config exits 2 with a machine-readable field diagnostic") {
  const fs::path dir = "cli_bad";
  const RunResult res = run_cli(
      "--config " + fixture("bad_missing_norm.json") + " --out " + dir.string() + " solve", dir);
  CHECK(res.exit_code == 2);
  const json err = json::parse(res.err);
  CHECK(err["error"]["kind"] == "config");
  CHECK(err["error"]["field"].get<std::string>().find("norm") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("solver non-convergence exits 3 with diagnostics") {
  const fs::path dir = "cli_nonconv";
  const RunResult res = run_cli("--config " + fixture("solve_nonconverged.json") + " --out " +
                                    dir.string() + " solve",
                                dir);
  CHECK(res.exit_code == 3);
  const json err = json::parse(res.err);
  CHECK(err["error"]["kind"] == "non_convergence");
  CHECK(err["error"]["iterations"].get<int>() == 5);
  fs::remove_all(dir);
}

TEST_CASE("missing config file exits 2") {
  const fs::path dir = "cli_missing";
  const RunResult res = run_cli("--config /nonexistent.json --out " + dir.string() + " solve", dir);
  CHECK(res.exit_code == 2);
  fs::remove_all(dir);
}

TEST_CASE("lower-bound command runs end to end") {
  const fs::path dir = "cli_lb";
  const RunResult res = run_cli("--config " + fixture("lower_bound_tiny.json") + " --out " +
                                    dir.string() + " --jobs 2 lower-bound",
                                dir);
  CHECK(res.exit_code == 0);
  const json summary = json::parse(slurp(dir / "lower_bound.json"));
  CHECK(summary["datasets_identical"].get<bool>());
  CHECK(summary["fraction_error_floor"].get<double>() == 1.0);
  CHECK(summary["trials"].get<int>() == 40);
  fs::remove_all(dir);
}

TEST_CASE("bounds command emits a full report") {
  const fs::path dir = "cli_bounds";
  const RunResult res = run_cli(
      "--config " + fixture("bounds_tiny.json") + " --out " + dir.string() + " bounds", dir);
  CHECK(res.exit_code == 0);
  const json rep = json::parse(slurp(dir / "bound_report.json"));
  CHECK(rep["theorem"] == "T3");
  CHECK(rep["r_star_estimate"].get<double>() > 0.0);
  CHECK(rep["ratio"].get<double>() >= 0.0);
  fs::remove_all(dir);
}

TEST_CASE("quiet flag silences stdout") {
  const fs::path dir = "cli_quiet";
  const RunResult res = run_cli(
      "--config " + fixture("solve_l1.json") + " --out " + dir.string() + " --quiet solve", dir);
  CHECK(res.exit_code == 0);
  CHECK(res.out.empty());
  fs::remove_all(dir);
}
