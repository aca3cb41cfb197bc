#pragma once

#include "mmot/dual_symmetric.hpp"

#include <vector>

namespace mmot {

struct BacktrackingOptions {
  double tol = 1e-10;          ///< stop when |grad|_inf <= tol
  long max_iter = 1000000;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  double min_step = 1e-16;
};

struct DescentReport {
  long iterations = 0;
  long evaluations = 0;
  double residual = 0.0;
  double value = 0.0;
  /// Objective change of each accepted step, from objective_difference.
  std::vector<double> decreases;
};

struct DescentResult {
  Potential phi;
  DescentReport report;
};

/// Gradient descent with Armijo backtracking on PhiTilde(., eps), restricted to
/// the anchored subspace phi[anchor] = 0. The sufficient-decrease test uses
/// objective_difference, so tolerances far below sqrt(machine eps) are
/// reachable.
DescentResult minimize_backtracking(const ProblemParams& params, double eps,
                                    const Vector& phi_init,
                                    const BacktrackingOptions& opts = {});

/// Ground-truth potential at eps: backtracking descent to tol, started from a
/// symmetric Sinkhorn solution at warm_tol that itself starts from the
/// two-marginal potential. Plain descent from zero converges at the same fixed
/// point but needs thousands of iterations on small-eta instances.
DescentResult reference_potential(const ProblemParams& params, double eps, double tol = 1e-11,
                                  double warm_tol = 1e-8);

}  // namespace mmot
