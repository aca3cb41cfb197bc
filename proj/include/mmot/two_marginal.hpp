#pragma once

#include "mmot/common.hpp"
#include "mmot/tensor.hpp"

#include <vector>

namespace mmot {

struct SinkhornOptions {
  double tol = 1e-10;      ///< sup-norm marginal residual
  long max_iter = 200000;
  Index anchor = 0;
};

/// Entropic two-marginal solution. plan(i, j) =
/// exp((psi_i + phi_j - W_ij)/eta) mu_i nu_j with phi[anchor] == 0.
struct TwoMarginalSolution {
  Vector psi;
  Vector phi;
  Matrix plan;
  long iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

/// Log-domain alternating projections between marginals mu (rows) and nu
/// (columns). Throws MaxIterExceeded with the last residual.
TwoMarginalSolution sinkhorn_two_marginal(const Vector& mu, const Vector& nu,
                                          const Matrix& W, double eta,
                                          const SinkhornOptions& opts = {});

inline TwoMarginalSolution sinkhorn_two_marginal(const Vector& rho,
                                                 const Matrix& W, double eta,
                                                 const SinkhornOptions& opts = {}) {
  return sinkhorn_two_marginal(rho, rho, W, eta, opts);
}

/// Star-graph problem with centre marginal mu and leaves nu[k] joined by
/// costs W[k](x^1, x^k): one two-marginal solve per edge. The centre
/// potential is the sum of the edge psi's.
struct StarSolution {
  Vector center;
  std::vector<Vector> leaves;
  std::vector<TwoMarginalSolution> edges;
};

StarSolution solve_star(const Vector& mu, const std::vector<Vector>& nu,
                        const std::vector<Matrix>& W, double eta,
                        const SinkhornOptions& opts = {});

/// Product-form plan of the eps = 0 problem built from the m-1 edge plans:
/// gamma(x^1..x^m) = rho(x^1) prod_i plan_i(x^1, x^i) / rho(x^1).
DenseTensor product_plan_eps0(const std::vector<TwoMarginalSolution>& edges,
                              const Vector& rho, double budget = 1e6);

}  // namespace mmot
