#pragma once

#include "mmot/common.hpp"
#include "mmot/costs.hpp"

namespace mmot {

/// Symmetric equal-marginal problem: m copies of rho, a pairwise cost
/// symmetric in x^2..x^m, entropic weight eta and anchor index x0.
struct ProblemParams {
  ProblemParams(double eta, DiscreteMarginal marginal, CostBundle bundle,
                Index anchor = 0);

  double eta;
  DiscreteMarginal marginal;
  CostBundle bundle;
  Index anchor;
  /// Largest N^(m-1) tuple count the brute-force paths may enumerate.
  double enumeration_budget = 1e7;
  /// Use the tuple enumeration even for m == 3 (oracle comparisons).
  bool force_enumeration = false;

  int m() const { return bundle.m; }
  Index n() const { return marginal.size(); }
  const Vector& rho() const { return marginal.weights(); }
};

/// Dual potential on the grid; values[anchor] == 0 when anchored.
struct Potential {
  Vector values;
  Index anchor = 0;

  static Potential anchored(Vector v, Index anchor);
  double sup_norm() const { return values.cwiseAbs().maxCoeff(); }
};

/// Shifts v so that v[anchor] == 0.
Vector anchor_shift(const Vector& v, Index anchor);

enum EvalFlags : unsigned {
  kValue = 1u,
  kGradient = 2u,
  kHessian = 4u,
  kMixed = 8u,
  kAll = 15u,
};

/// Per-first-coordinate Gibbs quantities. For fixed y the conditional law of
/// (x^2..x^m) is P_y ~ exp((sum phi - c_eps(y, .))/eta) prod rho; p_y is its
/// one-point marginal.
struct GibbsAux {
  Vector log_partition;  ///< log S_y
  Vector rho_bar;        ///< rho_y / S_y
  Vector I1;             ///< sum_y rho_y p_y  (the model marginal of x^2)
  Matrix I2;             ///< sum_y rho_y P_y(x^2 = z, x^3 = w)
  Matrix I3;             ///< column y holds p_y
};

struct DualDerivatives {
  double value = 0.0;
  Vector grad;
  Matrix hess;
  Vector mixed;  ///< d/d eps of the gradient
  GibbsAux aux;
};

/// Evaluates the requested pieces of the reduced dual PhiTilde(phi, eps) in a
/// single pass over the Gibbs tensor.
DualDerivatives evaluate_dual(const ProblemParams& params, const Vector& phi,
                              double eps, unsigned flags = kAll);

double objective(const ProblemParams& params, const Vector& phi, double eps);
Vector gradient(const ProblemParams& params, const Vector& phi, double eps);
Matrix hessian(const ProblemParams& params, const Vector& phi, double eps);
Vector mixed_eps_gradient(const ProblemParams& params, const Vector& phi,
                          double eps);

/// PhiTilde(phi + delta, eps) - PhiTilde(phi, eps) evaluated as an expectation
/// of expm1 under the Gibbs law at phi, so the result keeps full relative
/// precision when the change is far below the rounding of PhiTilde itself.
double objective_difference(const ProblemParams& params, const Vector& phi,
                            const Vector& delta, double eps);

/// First potential recovered from phi: psi_z = -eta log S_z.
Vector psi_from_phi(const ProblemParams& params, const Vector& phi, double eps);

/// Hessian with the anchor row and column removed.
Matrix reduce(const Matrix& hess, Index anchor);
Vector reduce(const Vector& v, Index anchor);
/// Inverse of reduce for vectors: inserts 0 at the anchor.
Vector embed(const Vector& reduced, Index anchor);

}  // namespace mmot
