#include "mmot/coupling.hpp"

#include <cmath>
#include <vector>

namespace mmot {

namespace {

// Visits every (m-1)-tuple of positions 2..m; f gets the full index with
// idx[0] == z and the log Gibbs weight of that tuple.
template <class F>
void for_each_tail(const ProblemParams& params, const Vector& phi, const Vector& psi,
                   double eps, Index z, F&& f) {
  const Index n = params.n();
  const int m = params.m();
  const Vector log_rho = params.rho().array().log();
  std::vector<int> idx(m, 0);
  idx[0] = static_cast<int>(z);
  const double base = psi(z) / params.eta + log_rho(z);
  while (true) {
    double s = base;
    for (int i = 1; i < m; ++i) s += phi(idx[i]) / params.eta + log_rho(idx[i]);
    s -= epsilon_cost(params.bundle, idx, eps).value / params.eta;
    f(idx, s);
    int i = m - 1;
    while (i >= 1 && ++idx[i] == n) idx[i--] = 0;
    if (i < 1) return;
  }
}

void check_tail_budget(const ProblemParams& params) {
  const double tuples = std::pow(static_cast<double>(params.n()), params.m() - 1);
  if (tuples > params.enumeration_budget) throw SizeGuardError(tuples, params.enumeration_budget);
}

}  // namespace

Matrix reconstruct_pair_marginal(const ProblemParams& params, const Vector& phi,
                                 double eps, int k) {
  const Index n = params.n();
  const int m = params.m();
  if (k < 2 || k > m) throw std::invalid_argument("pair marginal index must lie in 2..m");
  if (phi.size() != n) throw std::invalid_argument("potential size mismatch");

  if (m == 3 && !params.force_enumeration) {
    // p_y is the same for both tail coordinates when the cost is symmetric
    const auto d = evaluate_dual(params, phi, eps, kGradient);
    return params.rho().asDiagonal() * d.aux.I3.transpose();
  }

  check_tail_budget(params);
  const Vector psi = psi_from_phi(params, phi, eps);
  Matrix gamma = Matrix::Zero(n, n);
  parallel_blocks(n, [&](Index begin, Index end, int) {
    for (Index z = begin; z < end; ++z) {
      for_each_tail(params, phi, psi, eps, z, [&](const std::vector<int>& idx, double s) {
        gamma(z, idx[k - 1]) += std::exp(s);
      });
    }
  });
  return gamma;
}

DenseTensor full_tensor(const ProblemParams& params, const Vector& phi, double eps,
                        double budget) {
  DenseTensor t(params.n(), params.m(), budget);
  const Vector psi = psi_from_phi(params, phi, eps);
  for (Index z = 0; z < params.n(); ++z) {
    for_each_tail(params, phi, psi, eps, z, [&](const std::vector<int>& idx, double s) {
      t.at(idx) = std::exp(s);
    });
  }
  return t;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> support_mask(const Matrix& gamma,
                                                                 double tau) {
  return (gamma.array() > tau * gamma.maxCoeff()).matrix();
}

double primal_value(const CostBundle& bundle, const DenseTensor& gamma, double eps,
                    double eta, const Vector& rho) {
  const int m = gamma.order();
  if (m != bundle.m || gamma.n() != rho.size()) {
    throw std::invalid_argument("coupling shape does not match the problem");
  }
  std::vector<int> idx(m);
  double transport = 0.0;
  double entropy = 0.0;
  double reference = 0.0;
  for (std::size_t f = 0; f < gamma.size(); ++f) {
    const double g = gamma[f];
    if (!(g >= 0.0)) throw NegativeEntry("coupling has a negative or NaN entry");
    gamma.unflatten(f, idx);
    double log_prod = 0.0;
    for (int i : idx) log_prod += std::log(rho(i));
    const double prod = std::exp(log_prod);
    reference += prod * (log_prod - 1.0);
    if (g == 0.0) continue;
    transport += epsilon_cost(bundle, idx, eps).value * g;
    entropy += g * (std::log(g) - 1.0);
  }
  return transport + eta * (entropy - reference);
}

}  // namespace mmot
