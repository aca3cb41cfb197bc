#pragma once

#include "mmot/dual_symmetric.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mmot {

enum class Scheme { kEuler, kRK3, kRK5, kRK8 };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

/// Explicit Runge-Kutta coefficients; a is strictly lower triangular, stored
/// row by row (a[i] has i entries).
struct ButcherTableau {
  std::string name;
  int order = 1;
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;

  int stages() const { return static_cast<int>(b.size()); }
};

/// euler: forward Euler. rk3: Kutta's third-order method. rk5: Dormand-Prince
/// 5(4) fifth-order weights. rk8: Dormand-Prince 8(5,3) eighth-order weights.
const ButcherTableau& tableau(Scheme scheme);

/// Generic fixed-step explicit RK step for y' = f(t, y).
Vector rk_step(const ButcherTableau& tab,
               const std::function<Vector(double, const Vector&)>& f, double t,
               const Vector& y, double h);

struct RhsEvaluation {
  Vector direction;        ///< d phi / d eps, zero at the anchor
  double grad_norm = 0.0;  ///< |grad PhiTilde|_inf at the evaluation point
  double min_eigenvalue = 0.0;  ///< of the reduced Hessian (NaN if skipped)
};

/// Solves reduced(D^2 PhiTilde) z = -reduced(d_eps grad PhiTilde) by Cholesky.
/// Throws NotSPDError if the factorisation fails.
RhsEvaluation evaluate_rhs(const ProblemParams& params, const Vector& phi, double eps,
                           bool eigen_diagnostics = false);

inline Vector rhs(const ProblemParams& params, const Vector& phi, double eps) {
  return evaluate_rhs(params, phi, eps).direction;
}

struct TrajectoryPoint {
  double epsilon = 0.0;
  Vector phi;
  double grad_norm = 0.0;
  double min_eigenvalue = 0.0;
  double sup_norm = 0.0;
};

struct Trajectory {
  Scheme scheme = Scheme::kEuler;
  double h = 0.0;
  std::vector<TrajectoryPoint> steps;
  long rhs_evaluations = 0;

  const Vector& endpoint() const { return steps.back().phi; }
};

struct IntegrateOptions {
  bool eigen_diagnostics = true;
  /// Abort when |phi|_inf exceeds 4M + bound_slack * M.
  bool check_bound = true;
  double bound_slack = 0.1;
};

/// Integrates d phi/d eps = -[D^2 PhiTilde]^-1 d_eps grad PhiTilde from eps = 0
/// to 1 with fixed step h (1/h must be an integer).
Trajectory integrate(const ProblemParams& params, const Vector& phi0, Scheme scheme,
                     double h, const IntegrateOptions& opts = {});

/// Number of steps for h, or throws if 1/h is not an integer.
long step_count(double h);

}  // namespace mmot
