#pragma once

#include "mmot/costs.hpp"
#include "mmot/dual_symmetric.hpp"
#include "mmot/euler_chain.hpp"
#include "mmot/ode_integrator.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmot::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration. The file is INI-like:
///
///   [problem]
///   grid.n = 40
///   cost.kind = log
///   [solver]
///   experiment = convergence_study
///   h_list = 1/10, 1/20, 1/40, 1/80
///
/// A key outside any section is accepted when its name is unique.
struct Config {
  // [problem]
  Index grid_n = 40;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  CostKind cost_kind = CostKind::kLog;
  double cost_a = 0.1;
  std::optional<double> cost_cap;
  double eta = 0.05;
  int m = 3;
  Index anchor_index = 0;
  std::string euler_F = "reflect";
  double euler_beta = 20.0;
  double euler_T = 1.0;
  // [solver]
  std::string experiment = "compare";
  std::vector<Scheme> schemes{Scheme::kRK3};
  double h = 0.01;
  std::vector<double> h_list{0.1, 0.05, 0.025, 0.0125};
  double tol = 1e-9;      ///< Sinkhorn tolerance (compare, euler)
  double ref_tol = 1e-11; ///< reference descent tolerance
  // [output]
  std::filesystem::path out_dir = "out";
  std::vector<double> snapshots{0.0, 0.25, 0.5, 0.75, 1.0};
  bool heatmaps = true;
};

Config parse_config(std::istream& in);
Config load_config(const std::filesystem::path& path);

/// Semantic checks that need the built problem (step sizes, snapshot grid,
/// final map). Throws ConfigError.
void validate(const Config& cfg);

ProblemParams make_problem(const Config& cfg);
EulerProblem make_euler_problem(const Config& cfg);

/// Least-squares slope of log e against log h.
double convergence_slope(const std::vector<std::pair<double, double>>& points);

struct PotentialSnapshot {
  double epsilon = 0.0;
  Vector phi;
};

/// Header epsilon,index,x,phi; rows sorted by (epsilon, index); 17 digits.
void write_potentials_csv(std::ostream& out, std::vector<PotentialSnapshot> snaps,
                          const Grid& grid);
std::vector<PotentialSnapshot> read_potentials_csv(std::istream& in);

/// Header i,j,x_i,x_j,gamma; row-major.
void write_coupling_csv(std::ostream& out, const Matrix& gamma, const Grid& grid);

/// Binary graymap, largest entry black.
void write_pgm(const std::filesystem::path& path, const Matrix& values);

/// Ordered key=value report.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long value);
  std::optional<std::string> get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(std::ostream& out) const;
  static Report parse(std::istream& in);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double v);

struct RunResult {
  Report report;
  std::string summary;
};

/// Runs cfg.experiment, writing its files and report.txt into out_dir.
RunResult run_experiment(const Config& cfg, const std::filesystem::path& out_dir);

}  // namespace mmot::cli
