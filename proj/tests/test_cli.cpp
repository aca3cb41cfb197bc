#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mmot/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmot;
using namespace mmot::cli;
namespace fs = std::filesystem;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mmotflow_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_tool(const std::string& args) {
  const int status = std::system((std::string(MMOTFLOW_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config sections, lists and fractions") {
  const auto c = parse(
      "# comment\n"
      "experiment = trajectory\n"
      "[problem]\n"
      "grid.n = 12\n"
      "grid.domain = -1, 2\n"
      "cost.kind = neg_harmonic\n"
      "cost.cap = 40\n"
      "eta = 1/4\n"
      "m = 4\n"
      "euler.F = 2,1,0\n"
      "[solver]\n"
      "scheme = euler, rk8\n"
      "h_list = 1/10, 0.05, 1/40\n"
      "h = 1/20\n"
      "[output]\n"
      "heatmaps = false\n"
      "snapshots = 0, 1/2, 1\n");
  CHECK(c.experiment == "trajectory");
  CHECK(c.grid_n == 12);
  CHECK(c.domain_lo == -1.0);
  CHECK(c.domain_hi == 2.0);
  CHECK(c.cost_kind == CostKind::kNegHarmonic);
  CHECK(c.cost_cap.value() == 40.0);
  CHECK(c.eta == 0.25);
  CHECK(c.m == 4);
  CHECK(c.euler_F == "2,1,0");
  CHECK(c.schemes == std::vector<Scheme>{Scheme::kEuler, Scheme::kRK8});
  CHECK(c.h_list == std::vector<double>{0.1, 0.05, 0.025});
  CHECK(c.h == 0.05);
  CHECK_FALSE(c.heatmaps);
  CHECK(c.snapshots == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("[problem]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\neta = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\ngrid.n = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\neta = 1/0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\neta = 0.1\neta = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse("[solver]\nscheme = rk4\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\ncost.kind = gaussian\n"), ConfigError);
  CHECK_THROWS_AS(parse("[solver]\neta = 0.1\n"), ConfigError);

  auto bad_h = parse("[solver]\nh = 0.3\n");
  CHECK_THROWS_AS(validate(bad_h), ConfigError);
  auto bad_exp = parse("experiment = plot\n");
  CHECK_THROWS_AS(validate(bad_exp), ConfigError);
  auto bad_snap = parse("[solver]\nexperiment = trajectory\nh = 1/10\n[output]\nsnapshots = 0.25\n");
  CHECK_THROWS_AS(validate(bad_snap), ConfigError);
  auto short_list = parse("[solver]\nexperiment = convergence_study\nh_list = 0.1, 0.05\n");
  CHECK_THROWS_AS(validate(short_list), ConfigError);
  auto bad_eta = parse("[problem]\neta = -1\n");
  CHECK_THROWS_AS(validate(bad_eta), ConfigError);
  auto bad_map = parse("[problem]\ngrid.n = 3\neuler.F = 0,1\n[solver]\nexperiment = euler\n");
  CHECK_THROWS_AS(validate(bad_map), ConfigError);
}

TEST_CASE("convergence slope") {
  std::vector<std::pair<double, double>> lin, cub;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    lin.emplace_back(h, 3.0 * h);
    cub.emplace_back(h, 0.5 * h * h * h);
  }
  CHECK(convergence_slope(lin) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(convergence_slope(cub) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(convergence_slope({{0.1, 1.0}, {0.05, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(convergence_slope({{0.1, 1.0}, {0.05, 0.0}, {0.025, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(convergence_slope({{0.1, 1.0}, {0.1, 0.5}, {0.1, 0.1}}), std::invalid_argument);
}

TEST_CASE("potentials CSV round trip") {
  const auto grid = Grid::uniform(7);
  std::vector<PotentialSnapshot> snaps{{1.0, Vector::Random(7)}, {0.0, Vector::Random(7)},
                                       {0.5, Vector::Random(7) * 1e-9}};
  std::stringstream io;
  write_potentials_csv(io, snaps, grid);
  const std::string text = io.str();
  CHECK(text.rfind("epsilon,index,x,phi\n", 0) == 0);
  const auto back = read_potentials_csv(io);
  REQUIRE(back.size() == 3);
  CHECK(back[0].epsilon == 0.0);
  CHECK(back[1].epsilon == 0.5);
  CHECK(back[2].epsilon == 1.0);
  CHECK(back[0].phi == snaps[1].phi);
  CHECK(back[1].phi == snaps[2].phi);
  CHECK(back[2].phi == snaps[0].phi);

  std::istringstream bad("eps,index,x,phi\n");
  CHECK_THROWS_AS(read_potentials_csv(bad), std::invalid_argument);
}

TEST_CASE("coupling CSV and report format") {
  Matrix g(2, 2);
  g << 0.1, 0.2, 0.3, 0.4;
  std::ostringstream os;
  write_coupling_csv(os, g, Grid::uniform(2));
  CHECK(os.str() == "i,j,x_i,x_j,gamma\n0,0,0.25,0.25,0.10000000000000001\n"
                    "0,1,0.25,0.75,0.20000000000000001\n1,0,0.75,0.25,0.29999999999999999\n"
                    "1,1,0.75,0.75,0.40000000000000002\n");
  Report r;
  r.set("scheme", std::string("rk3"));
  r.set("h", 0.01);
  r.set("iterations", 100L);
  r.set("h", 0.02);
  std::stringstream io;
  r.write(io);
  CHECK(io.str() == "scheme=rk3\nh=0.02\niterations=100\n");
  const auto back = Report::parse(io);
  CHECK(back.get("iterations").value() == "100");
  CHECK_FALSE(back.get("slope").has_value());
}

TEST_CASE("trajectory outputs reproduce the reported residual") {
  const auto dir = scratch_dir("trajectory");
  auto cfg = parse(
      "[problem]\ngrid.n = 10\neta = 0.5\n[solver]\nexperiment = trajectory\nscheme = rk3\n"
      "h = 1/20\n[output]\nsnapshots = 0, 0.5, 1\n");
  const auto res = run_experiment(cfg, dir);
  CHECK(fs::exists(dir / "report.txt"));
  CHECK(fs::exists(dir / "coupling_eps0.5.csv"));
  CHECK(fs::exists(dir / "coupling_eps1.pgm"));
  std::ifstream pin(dir / "potentials.csv");
  const auto snaps = read_potentials_csv(pin);
  REQUIRE(snaps.size() == 3);
  std::ifstream rin(dir / "report.txt");
  const auto report = Report::parse(rin);
  const double reported = std::stod(report.get("residual").value());
  const auto p = make_problem(cfg);
  const double again = gradient(p, snaps.back().phi, 1.0).cwiseAbs().maxCoeff();
  CHECK(std::abs(again - reported) <= 1e-12);
  CHECK(snaps.back().phi(0) == 0.0);
}

TEST_CASE("other experiments write their tables") {
  const auto dir = scratch_dir("experiments");
  auto conv = parse(
      "[problem]\ngrid.n = 8\neta = 0.5\n[solver]\nexperiment = convergence_study\n"
      "scheme = euler\nh_list = 1/4, 1/8, 1/16\n");
  const auto rc = run_experiment(conv, dir / "conv");
  const double slope = std::stod(rc.report.get("slope.euler").value());
  CHECK(slope > 0.8);
  CHECK(slope < 1.3);

  auto cmp = parse("[problem]\ngrid.n = 8\neta = 0.5\n[solver]\nexperiment = compare\nscheme = rk3, rk5\nh = 1/10\n");
  const auto rp = run_experiment(cmp, dir / "cmp");
  CHECK(std::stod(rp.report.get("rk5.relative_error").value()) < 1e-6);
  std::ifstream table(dir / "cmp" / "compare.csv");
  std::string header;
  std::getline(table, header);
  CHECK(header == "method,h,relative_error,iterations,wall_seconds");

  auto eul = parse(
      "[problem]\ngrid.n = 8\neta = 0.2\nm = 4\neuler.beta = 5\n[solver]\nexperiment = euler\n"
      "scheme = rk5\nh = 1/10\ntol = 1e-11\n[output]\nsnapshots = 0, 1\nheatmaps = false\n");
  const auto re = run_experiment(eul, dir / "euler");
  CHECK(std::stod(re.report.get("relative_error").value()) < 1e-4);
  CHECK(fs::exists(dir / "euler" / "potentials_phi4.csv"));
  CHECK(fs::exists(dir / "euler" / "coupling_1_4.csv"));
}

TEST_CASE("tool exit codes") {
  const auto dir = scratch_dir("tool");
  {
    std::ofstream(dir / "good.ini") << "[problem]\ngrid.n = 6\neta = 0.5\n[solver]\nexperiment = compare\nh = 1/5\n";
    std::ofstream(dir / "bad.ini") << "[problem]\nunknown = 1\n";
    std::ofstream(dir / "bad_h.ini") << "[solver]\nh = 0.3\n";
    // eta far below the cost scale: the initial Sinkhorn solve stalls
    std::ofstream(dir / "stiff.ini") << "[problem]\ngrid.n = 6\neta = 1e-4\ncost.kind = coulomb_truncated\n"
                                        "[solver]\nexperiment = trajectory\nh = 1/4\n";
  }
  CHECK(run_tool("validate " + (dir / "good.ini").string()) == 0);
  CHECK(run_tool("validate " + (dir / "bad.ini").string()) == 2);
  CHECK(run_tool("validate " + (dir / "bad_h.ini").string()) == 2);
  CHECK(run_tool("validate " + (dir / "missing.ini").string()) == 2);
  CHECK(run_tool("run " + (dir / "good.ini").string() + " --out " + (dir / "o").string() + " --threads 2") == 0);
  CHECK(fs::exists(dir / "o" / "report.txt"));
  CHECK(run_tool("run " + (dir / "stiff.ini").string() + " --out " + (dir / "s").string()) == 3);
  CHECK(run_tool("frobnicate") == 1);
}
