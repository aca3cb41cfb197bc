#include "mmot/cli.hpp"

#include "mmot/coupling.hpp"
#include "mmot/refsolve.hpp"
#include "mmot/sinkhorn_mm.hpp"
#include "mmot/two_marginal.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace mmot::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_plain(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used == t.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": '" + text + "' is not a number");
}

// Accepts "0.25" and "1/4".
double parse_number(const std::string& text, const std::string& key) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_plain(text, key);
  const double den = parse_plain(text.substr(slash + 1), key);
  if (den == 0.0) throw ConfigError(key + ": zero denominator");
  return parse_plain(text.substr(0, slash), key) / den;
}

long parse_integer(const std::string& text, const std::string& key) {
  const double v = parse_plain(text, key);
  if (v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError(key + ": expected an integer");
  return static_cast<long>(v);
}

bool parse_bool(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false");
}

using Inputs = std::vector<std::string>;
using Setter = std::function<void(Config&, const Inputs&, const std::string&)>;

const std::string& single(const Inputs& in, const std::string& key) {
  if (in.size() != 1) throw ConfigError(key + ": expected a single value");
  return in.front();
}

std::vector<double> number_list(const Inputs& in, const std::string& key) {
  if (in.empty()) throw ConfigError(key + ": empty list");
  std::vector<double> out;
  for (const auto& s : in) out.push_back(parse_number(s, key));
  return out;
}

const std::map<std::string, Setter>& key_table() {
  static const std::map<std::string, Setter> table = {
      {"problem.grid.n",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.grid_n = parse_integer(single(in, k), k);
       }},
      {"problem.grid.domain",
       [](Config& c, const Inputs& in, const std::string& k) {
         const auto v = number_list(in, k);
         if (v.size() != 2) throw ConfigError(k + ": expected lo, hi");
         c.domain_lo = v[0];
         c.domain_hi = v[1];
       }},
      {"problem.cost.kind",
       [](Config& c, const Inputs& in, const std::string& k) {
         try {
           c.cost_kind = parse_cost_kind(trim(single(in, k)));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(k + ": " + e.what());
         }
       }},
      {"problem.cost.a",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.cost_a = parse_number(single(in, k), k);
       }},
      {"problem.cost.cap",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.cost_cap = parse_number(single(in, k), k);
       }},
      {"problem.eta",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.eta = parse_number(single(in, k), k);
       }},
      {"problem.m",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.m = static_cast<int>(parse_integer(single(in, k), k));
       }},
      {"problem.anchor_index",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.anchor_index = parse_integer(single(in, k), k);
       }},
      {"problem.euler.F",
       [](Config& c, const Inputs& in, const std::string& k) {
         std::string joined;
         for (const auto& s : in) joined += (joined.empty() ? "" : ",") + trim(s);
         if (joined.empty()) throw ConfigError(k + ": empty");
         c.euler_F = joined;
       }},
      {"problem.euler.beta",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.euler_beta = parse_number(single(in, k), k);
       }},
      {"problem.euler.T",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.euler_T = parse_number(single(in, k), k);
       }},
      {"solver.experiment",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.experiment = trim(single(in, k));
       }},
      {"solver.scheme",
       [](Config& c, const Inputs& in, const std::string& k) {
         if (in.empty()) throw ConfigError(k + ": empty list");
         c.schemes.clear();
         for (const auto& s : in) {
           try {
             c.schemes.push_back(parse_scheme(trim(s)));
           } catch (const std::invalid_argument& e) {
             throw ConfigError(k + ": " + e.what());
           }
         }
       }},
      {"solver.h",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.h = parse_number(single(in, k), k);
       }},
      {"solver.h_list",
       [](Config& c, const Inputs& in, const std::string& k) { c.h_list = number_list(in, k); }},
      {"solver.tol",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.tol = parse_number(single(in, k), k);
       }},
      {"solver.ref_tol",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.ref_tol = parse_number(single(in, k), k);
       }},
      {"output.dir",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.out_dir = trim(single(in, k));
       }},
      {"output.snapshots",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.snapshots = number_list(in, k);
       }},
      {"output.heatmaps",
       [](Config& c, const Inputs& in, const std::string& k) {
         c.heatmaps = parse_bool(single(in, k), k);
       }},
  };
  return table;
}

std::string resolve_key(const std::string& section, const std::string& name) {
  const auto& table = key_table();
  if (!section.empty()) {
    const std::string full = section + "." + name;
    if (!table.count(full)) throw ConfigError("unknown key '" + name + "' in [" + section + "]");
    return full;
  }
  std::string found;
  for (const auto& [full, setter] : table) {
    const auto dot = full.find('.');
    if (full.substr(dot + 1) == name) found = full;
  }
  if (found.empty()) throw ConfigError("unknown key '" + name + "'");
  return found;
}

}  // namespace

Config parse_config(std::istream& in) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("unreadable config: ") + e.what());
  }
  Config cfg;
  std::map<std::string, bool> seen;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string section, name = item.name;
    if (!item.parents.empty()) {
      section = item.parents.front();
      std::string rest;
      for (std::size_t i = 1; i < item.parents.size(); ++i) rest += item.parents[i] + ".";
      name = rest + item.name;
    }
    if (section != "" && section != "problem" && section != "solver" && section != "output") {
      // a dotted key outside any section, e.g. grid.n = 10
      std::string dotted;
      for (const auto& p : item.parents) dotted += p + ".";
      name = dotted + item.name;
      section.clear();
    }
    const std::string full = resolve_key(section, name);
    if (seen[full]) throw ConfigError("duplicate key '" + full + "'");
    seen[full] = true;
    key_table().at(full)(cfg, item.inputs, full);
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

namespace {

const std::vector<std::string> kExperiments = {"convergence_study", "compare", "trajectory",
                                               "euler"};

}  // namespace

ProblemParams make_problem(const Config& cfg) {
  auto grid = Grid::uniform(cfg.grid_n, cfg.domain_lo, cfg.domain_hi);
  CostParams cp;
  cp.log_offset = cfg.cost_a;
  cp.coulomb_cap = cfg.cost_cap;
  auto bundle = build_cost_matrix(grid, cfg.cost_kind, cp, cfg.m);
  return ProblemParams(cfg.eta, DiscreteMarginal::uniform(grid), std::move(bundle),
                       cfg.anchor_index);
}

EulerProblem make_euler_problem(const Config& cfg) {
  auto grid = Grid::uniform(cfg.grid_n, cfg.domain_lo, cfg.domain_hi);
  return EulerProblem(DiscreteMarginal::uniform(grid), cfg.m, cfg.eta,
                      parse_final_map(cfg.euler_F, cfg.grid_n), cfg.euler_beta, cfg.euler_T,
                      cfg.anchor_index);
}

void validate(const Config& cfg) {
  if (std::find(kExperiments.begin(), kExperiments.end(), cfg.experiment) == kExperiments.end()) {
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  }
  try {
    if (cfg.grid_n < 2) throw ConfigError("grid.n must be at least 2");
    if (cfg.m < 3) throw ConfigError("m must be at least 3");
    if (cfg.anchor_index < 0 || cfg.anchor_index >= cfg.grid_n) {
      throw ConfigError("anchor_index outside the grid");
    }
    if (!(cfg.tol > 0.0) || !(cfg.ref_tol > 0.0)) throw ConfigError("tolerances must be positive");
    if (cfg.experiment == "euler") {
      make_euler_problem(cfg);
    } else {
      make_problem(cfg);
    }
    step_count(cfg.h);
    if (cfg.experiment == "convergence_study") {
      if (cfg.h_list.size() < 3) throw ConfigError("h_list needs at least 3 step sizes");
      for (double h : cfg.h_list) step_count(h);
    }
    if (cfg.experiment == "trajectory" || cfg.experiment == "euler") {
      const long n = step_count(cfg.h);
      for (double s : cfg.snapshots) {
        const double k = s * static_cast<double>(n);
        if (s < 0.0 || s > 1.0 || std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
          throw ConfigError("snapshot " + format_double(s) + " is not a multiple of h");
        }
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

double convergence_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("slope fit needs at least 3 points");
  Eigen::MatrixXd A(points.size(), 2);
  Vector b(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [h, e] = points[i];
    if (!(h > 0.0) || !(e > 0.0)) throw std::invalid_argument("slope fit needs h > 0 and e > 0");
    A(i, 0) = std::log(h);
    A(i, 1) = 1.0;
    b(i) = std::log(e);
  }
  if ((A.col(0).array() - A(0, 0)).abs().maxCoeff() == 0.0) {
    throw std::invalid_argument("slope fit needs distinct step sizes");
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_potentials_csv(std::ostream& out, std::vector<PotentialSnapshot> snaps,
                          const Grid& grid) {
  std::stable_sort(snaps.begin(), snaps.end(),
                   [](const auto& a, const auto& b) { return a.epsilon < b.epsilon; });
  out << "epsilon,index,x,phi\n";
  for (const auto& s : snaps) {
    if (s.phi.size() != grid.size()) throw std::invalid_argument("snapshot size mismatch");
    for (Index i = 0; i < s.phi.size(); ++i) {
      out << format_double(s.epsilon) << ',' << i << ',' << format_double(grid.coordinate(i))
          << ',' << format_double(s.phi(i)) << '\n';
    }
  }
}

std::vector<PotentialSnapshot> read_potentials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "epsilon,index,x,phi") {
    throw std::invalid_argument("potentials CSV: bad header");
  }
  std::vector<PotentialSnapshot> out;
  std::vector<double> values;
  auto flush = [&] {
    if (out.empty()) return;
    out.back().phi = Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
    values.clear();
  };
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& field : f) {
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("potentials CSV: short row");
    }
    const double eps = parse_plain(f[0], "epsilon");
    const long index = parse_integer(f[1], "index");
    if (out.empty() || out.back().epsilon != eps) {
      flush();
      out.push_back({eps, Vector()});
    }
    if (index != static_cast<long>(values.size())) {
      throw std::invalid_argument("potentials CSV: rows out of order");
    }
    values.push_back(parse_plain(f[3], "phi"));
  }
  flush();
  return out;
}

void write_coupling_csv(std::ostream& out, const Matrix& gamma, const Grid& grid) {
  out << "i,j,x_i,x_j,gamma\n";
  for (Index i = 0; i < gamma.rows(); ++i)
    for (Index j = 0; j < gamma.cols(); ++j)
      out << i << ',' << j << ',' << format_double(grid.coordinate(i)) << ','
          << format_double(grid.coordinate(j)) << ',' << format_double(gamma(i, j)) << '\n';
}

void write_pgm(const std::filesystem::path& path, const Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  const double top = values.maxCoeff() > 0.0 ? values.maxCoeff() : 1.0;
  // row 0 of the image is the last grid row so the y axis points up
  for (Index i = values.rows() - 1; i >= 0; --i)
    for (Index j = 0; j < values.cols(); ++j) {
      const double t = std::clamp(values(i, j) / top, 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)))));
    }
}

void Report::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) { set(key, format_double(value)); }
void Report::set(const std::string& key, long value) { set(key, std::to_string(value)); }

std::optional<std::string> Report::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

void Report::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

Report Report::parse(std::istream& in) {
  Report r;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    r.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return r;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double relative_error(const Matrix& a, const Matrix& ref) {
  return (a - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string eps_tag(double eps) {
  std::ostringstream os;
  os << "eps" << std::setprecision(6) << eps;
  return os.str();
}

Vector initial_potential(const ProblemParams& p) {
  SinkhornOptions o;
  o.tol = 1e-12;
  o.anchor = p.anchor;
  return sinkhorn_two_marginal(p.rho(), p.bundle.W, p.eta, o).phi;
}

void describe_problem(Report& r, const Config& cfg) {
  r.set("experiment", cfg.experiment);
  r.set("n", static_cast<long>(cfg.grid_n));
  r.set("m", static_cast<long>(cfg.m));
  r.set("eta", cfg.eta);
}

RunResult run_compare(const Config& cfg, const std::filesystem::path& dir) {
  const auto p = make_problem(cfg);
  RunResult res;
  describe_problem(res.report, cfg);
  res.report.set("cost", to_string(cfg.cost_kind));
  auto t0 = Clock::now();
  const auto ref = reference_potential(p, 1.0, cfg.ref_tol);
  res.report.set("reference.iterations", ref.report.iterations);
  res.report.set("reference.residual", ref.report.residual);
  res.report.set("reference.wall_seconds", seconds_since(t0));
  const Vector phi0 = initial_potential(p);

  auto csv = open_out(dir / "compare.csv");
  csv << "method,h,relative_error,iterations,wall_seconds\n";
  std::ostringstream summary;
  summary << "compare:";
  auto row = [&](const std::string& name, const std::string& h, double err, long iters,
                 double wall) {
    csv << name << ',' << h << ',' << format_double(err) << ',' << iters << ','
        << format_double(wall) << '\n';
    res.report.set(name + ".relative_error", err);
    res.report.set(name + ".iterations", iters);
    res.report.set(name + ".wall_seconds", wall);
    summary << ' ' << name << " err=" << std::setprecision(3) << err;
  };
  res.report.set("h", cfg.h);
  for (Scheme s : cfg.schemes) {
    t0 = Clock::now();
    const auto tr = integrate(p, phi0, s, cfg.h);
    row(to_string(s), format_double(cfg.h), relative_error(tr.endpoint(), ref.phi.values),
        step_count(cfg.h), seconds_since(t0));
  }
  t0 = Clock::now();
  SymmetricSinkhornOptions so;
  so.tol = cfg.tol;
  const auto sk = solve_symmetric_mm(p, 1.0, so);
  row("sinkhorn", "", relative_error(sk.phi.values, ref.phi.values), sk.report.iterations,
      seconds_since(t0));
  res.summary = summary.str();
  return res;
}

RunResult run_convergence(const Config& cfg, const std::filesystem::path& dir) {
  const auto p = make_problem(cfg);
  RunResult res;
  describe_problem(res.report, cfg);
  const auto ref = reference_potential(p, 1.0, cfg.ref_tol);
  res.report.set("reference.iterations", ref.report.iterations);
  res.report.set("reference.residual", ref.report.residual);
  const Vector phi0 = initial_potential(p);

  auto csv = open_out(dir / "convergence.csv");
  csv << "scheme,h,steps,sup_error,relative_error,grad_residual,wall_seconds\n";
  std::ostringstream summary;
  summary << "convergence_study:";
  for (Scheme s : cfg.schemes) {
    std::vector<std::pair<double, double>> pts;
    for (double h : cfg.h_list) {
      const auto t0 = Clock::now();
      const auto tr = integrate(p, phi0, s, h);
      const double err = (tr.endpoint() - ref.phi.values).cwiseAbs().maxCoeff();
      pts.emplace_back(h, err);
      csv << to_string(s) << ',' << format_double(h) << ',' << step_count(h) << ','
          << format_double(err) << ',' << format_double(err / ref.phi.sup_norm()) << ','
          << format_double(tr.steps.back().grad_norm) << ',' << format_double(seconds_since(t0))
          << '\n';
    }
    const double k = convergence_slope(pts);
    res.report.set("slope." + to_string(s), k);
    summary << ' ' << to_string(s) << " slope=" << std::setprecision(3) << k;
  }
  res.summary = summary.str();
  return res;
}

// Indices of trajectory steps at the requested snapshot epsilons.
std::vector<std::size_t> snapshot_steps(const Config& cfg) {
  const long n = step_count(cfg.h);
  std::vector<std::size_t> idx;
  for (double s : cfg.snapshots) idx.push_back(static_cast<std::size_t>(std::lround(s * n)));
  return idx;
}

RunResult run_trajectory(const Config& cfg, const std::filesystem::path& dir) {
  const auto p = make_problem(cfg);
  RunResult res;
  describe_problem(res.report, cfg);
  const Scheme scheme = cfg.schemes.front();
  res.report.set("scheme", to_string(scheme));
  res.report.set("h", cfg.h);
  const auto t0 = Clock::now();
  const auto tr = integrate(p, initial_potential(p), scheme, cfg.h);
  res.report.set("wall_seconds", seconds_since(t0));
  res.report.set("iterations", step_count(cfg.h));
  res.report.set("rhs_evaluations", tr.rhs_evaluations);

  std::vector<PotentialSnapshot> snaps;
  for (std::size_t k : snapshot_steps(cfg)) {
    const auto& pt = tr.steps.at(k);
    snaps.push_back({pt.epsilon, pt.phi});
    const Matrix g = reconstruct_pair_marginal(p, pt.phi, pt.epsilon);
    auto csv = open_out(dir / ("coupling_" + eps_tag(pt.epsilon) + ".csv"));
    write_coupling_csv(csv, g, p.marginal.grid());
    if (cfg.heatmaps) write_pgm(dir / ("coupling_" + eps_tag(pt.epsilon) + ".pgm"), g);
  }
  auto csv = open_out(dir / "potentials.csv");
  write_potentials_csv(csv, snaps, p.marginal.grid());

  double max_sup = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (const auto& pt : tr.steps) {
    max_sup = std::max(max_sup, pt.sup_norm);
    min_eig = std::min(min_eig, pt.min_eigenvalue);
  }
  const double residual = gradient(p, tr.endpoint(), 1.0).cwiseAbs().maxCoeff();
  res.report.set("residual", residual);
  res.report.set("max_sup_norm", max_sup);
  res.report.set("bound_4M", 4.0 * p.bundle.M);
  res.report.set("min_eigenvalue", min_eig);
  const auto ref = reference_potential(p, 1.0, cfg.ref_tol);
  const double err = relative_error(tr.endpoint(), ref.phi.values);
  res.report.set("relative_error", err);
  std::ostringstream summary;
  summary << "trajectory: " << to_string(scheme) << " h=" << cfg.h << std::setprecision(3)
          << " residual=" << residual << " relative_error=" << err;
  res.summary = summary.str();
  return res;
}

RunResult run_euler(const Config& cfg, const std::filesystem::path& dir) {
  const auto ep = make_euler_problem(cfg);
  RunResult res;
  describe_problem(res.report, cfg);
  const Scheme scheme = cfg.schemes.front();
  res.report.set("scheme", to_string(scheme));
  res.report.set("h", cfg.h);
  res.report.set("beta", cfg.euler_beta);
  res.report.set("F", cfg.euler_F);
  auto t0 = Clock::now();
  const auto tr = euler_ode_solve(ep, scheme, cfg.h);
  res.report.set("wall_seconds", seconds_since(t0));
  res.report.set("iterations", step_count(cfg.h));
  res.report.set("residual", tr.steps.back().grad_norm);

  t0 = Clock::now();
  const auto sk = solve_chain_sinkhorn(ep, 1.0, cfg.tol);
  res.report.set("sinkhorn.sweeps", sk.sweeps);
  res.report.set("sinkhorn.wall_seconds", seconds_since(t0));
  const double err = relative_error(tr.endpoint(), sk.phi);
  res.report.set("relative_error", err);

  auto centred = [](const Matrix& phi, int row) {
    Vector v = phi.row(row).transpose();
    return Vector(v.array() - v.mean());
  };
  const Vector first = centred(tr.endpoint(), 0);
  const Vector last = centred(tr.endpoint(), cfg.m - 1);
  const double sym = relative_error(last, first);
  res.report.set("phi1_phim_relative_error", sym);

  const auto idx = snapshot_steps(cfg);
  for (int k = 0; k < cfg.m; ++k) {
    std::vector<PotentialSnapshot> snaps;
    for (std::size_t i : idx) snaps.push_back({tr.steps.at(i).epsilon, tr.steps.at(i).phi.row(k).transpose()});
    auto csv = open_out(dir / ("potentials_phi" + std::to_string(k + 1) + ".csv"));
    write_potentials_csv(csv, snaps, ep.marginal.grid());
  }
  const auto c = chain_contract(ep, tr.endpoint(), 1.0, kChainMarginals | kChainPairs);
  for (int j = 1; j < cfg.m; ++j) {
    const std::string stem = "coupling_1_" + std::to_string(j + 1);
    auto csv = open_out(dir / (stem + ".csv"));
    const Matrix g = c.pair_marginal(0, j);
    write_coupling_csv(csv, g, ep.marginal.grid());
    if (cfg.heatmaps) write_pgm(dir / (stem + ".pgm"), g);
  }
  std::ostringstream summary;
  summary << "euler: " << to_string(scheme) << " h=" << cfg.h << std::setprecision(3)
          << " relative_error=" << err << " phi1_vs_phim=" << sym;
  res.summary = summary.str();
  return res;
}

}  // namespace

RunResult run_experiment(const Config& cfg, const std::filesystem::path& out_dir) {
  validate(cfg);
  std::filesystem::create_directories(out_dir);
  RunResult res;
  if (cfg.experiment == "compare") {
    res = run_compare(cfg, out_dir);
  } else if (cfg.experiment == "convergence_study") {
    res = run_convergence(cfg, out_dir);
  } else if (cfg.experiment == "trajectory") {
    res = run_trajectory(cfg, out_dir);
  } else {
    res = run_euler(cfg, out_dir);
  }
  res.report.set("threads", static_cast<long>(num_threads()));
  auto out = open_out(out_dir / "report.txt");
  res.report.write(out);
  return res;
}

}  // namespace mmot::cli
