#pragma once

#include "mmot/costs.hpp"
#include "mmot/ode_integrator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mmot {

/// Relaxed incompressible Euler problem on a 1-d grid with m time marginals.
/// The cost couples x^1 - x^2 at full strength, the inner path x^2 .. x^m at
/// strength eps and closes the cycle with the penalty beta |x_F(x^1) - x^m|^2:
///   c_eps = k |x^2 - x^1|^2 + eps k sum_{i=2}^{m-1} |x^{i+1} - x^i|^2
///           + beta |x_F(x^1) - x^m|^2,        k = m^2 / (2 T^2).
struct EulerProblem {
  EulerProblem(DiscreteMarginal marginal, int m, double eta, std::vector<Index> final_map,
               double beta, double T = 1.0, Index anchor = 0);

  DiscreteMarginal marginal;
  int m;
  double eta;
  std::vector<Index> final_map;
  double beta;
  double T;
  Index anchor;

  Index n() const { return marginal.size(); }
  const Vector& rho() const { return marginal.weights(); }
  double kinetic() const { return m * m / (2.0 * T * T); }
  /// Total state dimension once phi^2..phi^m are anchored.
  Index reduced_size() const { return m * n() - (m - 1); }
};

/// i -> n-1-i, which is x -> 1 - x on a cell-centred grid of [0, 1].
std::vector<Index> final_map_reflect(Index n);
/// i -> (i + n/2) mod n, i.e. x -> x + 1/2 mod 1 (n even).
std::vector<Index> final_map_shift_mod(Index n);
/// "reflect", "shift_mod" or a comma separated index list of length n.
std::vector<Index> parse_final_map(const std::string& text, Index n);

/// Potentials phi^1..phi^m as the rows of an m x N matrix. The dual is
/// invariant under phi^i += c, phi^j -= c; the gauge fixes phi^i[anchor] = 0
/// for i >= 2 and leaves phi^1 free.
using PotentialStack = Matrix;

/// Moves the anchor values of rows 2..m into row 1.
PotentialStack gauge_fix(const PotentialStack& phi, Index anchor);
Vector reduce_stack(const PotentialStack& phi, Index anchor);
PotentialStack embed_stack(const Vector& reduced, int m, Index n, Index anchor);

enum ChainFlags : unsigned {
  kChainMarginals = 1u,
  kChainPairs = 2u,
  kChainMixed = 4u,
  kChainAll = 7u,
};

/// Sums over the Gibbs tensor G = exp((sum_i phi^i(x^i) - c_eps)/eta) prod rho.
struct ChainContraction {
  double mass = 0.0;      ///< sum G
  Matrix one;             ///< row i: i-th one-fold marginal of G
  std::vector<Matrix> pair;  ///< pair[index(i, j)], i < j: two-fold marginal on (i, j)
  Matrix cost_weighted;   ///< row i: sum G * d_eps c restricted to x^i = x
  int m = 0;

  std::size_t pair_index(int i, int j) const;
  /// Two-fold marginal on axes (i, j) in either order (zero-based).
  Matrix pair_marginal(int i, int j) const;
};

/// Conditions on x^1 and runs log-domain forward/backward messages along the
/// path x^2..x^m for every x^1 at once. Pairs among the path nodes use the
/// x^1-independent transfer products of the interior nodes, so the cost is
/// O(m^2 N^3).
ChainContraction chain_contract(const EulerProblem& problem, const PotentialStack& phi,
                                double eps, unsigned flags = kChainAll);

/// Dual -sum_i phi^i . rho + eta sum G (minimised), its gradient, Hessian and
/// eps-derivative of the gradient in the stacked coordinates (row-major).
struct EulerDerivatives {
  double value = 0.0;
  Vector grad;
  Matrix hess;
  Vector mixed;
};

EulerDerivatives euler_derivatives(const EulerProblem& problem, const PotentialStack& phi,
                                   double eps, unsigned flags = kChainAll);

/// Exact eps = 0 optimum from the two decoupled edges (1,2) and (1,m).
PotentialStack euler_initial_stack(const EulerProblem& problem, double tol = 1e-12);

struct EulerTrajectoryPoint {
  double epsilon = 0.0;
  PotentialStack phi;
  double grad_norm = 0.0;
};

struct EulerTrajectory {
  Scheme scheme = Scheme::kRK5;
  double h = 0.0;
  std::vector<EulerTrajectoryPoint> steps;
  long rhs_evaluations = 0;

  const PotentialStack& endpoint() const { return steps.back().phi; }
};

/// Reduced continuation direction d phi / d eps at (phi, eps).
Vector euler_rhs(const EulerProblem& problem, const PotentialStack& phi, double eps);

EulerTrajectory euler_ode_solve(const EulerProblem& problem, Scheme scheme, double h,
                                std::optional<PotentialStack> phi0 = std::nullopt);

struct ChainSinkhornResult {
  PotentialStack phi;
  long sweeps = 0;
  double residual = 0.0;  ///< max_i |one_i - rho|_inf
};

/// Cyclic exact block minimisation phi^i -= eta log(one_i / rho).
ChainSinkhornResult solve_chain_sinkhorn(const EulerProblem& problem, double eps,
                                         double tol = 1e-10, long max_sweeps = 1000000,
                                         std::optional<PotentialStack> phi0 = std::nullopt);

}  // namespace mmot
