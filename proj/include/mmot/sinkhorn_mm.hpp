#pragma once

#include "mmot/costs.hpp"
#include "mmot/dual_symmetric.hpp"
#include "mmot/tensor.hpp"

#include <optional>
#include <vector>

namespace mmot {

struct SymmetricSinkhornOptions {
  double tol = 1e-9;  ///< stop when |grad PhiTilde|_inf <= tol
  long max_iter = 200000;
  /// Fraction of the full log-ratio correction applied per sweep.
  double damping = 0.5;
  std::optional<Vector> phi_init;
};

struct SinkhornReport {
  long iterations = 0;
  double residual = 0.0;
  double objective = 0.0;
  std::vector<double> objective_history;
};

struct SymmetricSinkhornResult {
  Potential phi;
  SinkhornReport report;
};

/// Fixed-point iteration phi <- phi - damping * eta * log(model marginal / rho)
/// on the single symmetric potential at fixed eps.
SymmetricSinkhornResult solve_symmetric_mm(const ProblemParams& params, double eps,
                                           const SymmetricSinkhornOptions& opts = {});

/// c_eps over the full tuple space.
DenseTensor cost_tensor(const CostBundle& bundle, double eps, double budget = 1e6);

struct DenseSinkhornResult {
  std::vector<Vector> potentials;  ///< potentials[k][x]; k >= 1 anchored at 0
  DenseTensor plan;
  long iterations = 0;
  double residual = 0.0;
};

/// Textbook multi-marginal Sinkhorn on an explicit cost tensor: cyclic exact
/// block updates in log domain. Only for small instances.
DenseSinkhornResult solve_dense_mm(const DenseTensor& cost,
                                   const std::vector<Vector>& marginals, double eta,
                                   double tol = 1e-12, long max_iter = 100000);

}  // namespace mmot
