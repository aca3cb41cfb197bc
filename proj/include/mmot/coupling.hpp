#pragma once

#include "mmot/dual_symmetric.hpp"
#include "mmot/tensor.hpp"

namespace mmot {

/// Two-fold marginal gamma_{1,k} (k in 2..m, one-based as in the coordinates)
/// of the Gibbs coupling
///   gamma = exp((psi(x^1) + sum_{i>=2} phi(x^i) - c_eps) / eta) prod rho,
/// with psi = -eta log S recovered from phi. Row z sums to rho_z exactly; the
/// column sums equal rho only at an optimal phi.
Matrix reconstruct_pair_marginal(const ProblemParams& params, const Vector& phi,
                                 double eps, int k = 2);

/// The whole coupling as a dense tensor; limited to budget entries.
DenseTensor full_tensor(const ProblemParams& params, const Vector& phi, double eps,
                        double budget = 1e6);

/// Entries above tau * max, with tau = 1e-3 by default.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support_mask(const Matrix& gamma,
                                                                 double tau = 1e-3);

/// sum c_eps gamma + eta [H(gamma) - H(prod rho)], H(g) = sum g (log g - 1),
/// 0 log 0 = 0. At an optimal phi this equals -PhiTilde(phi, eps).
double primal_value(const CostBundle& bundle, const DenseTensor& gamma, double eps,
                    double eta, const Vector& rho);

}  // namespace mmot
