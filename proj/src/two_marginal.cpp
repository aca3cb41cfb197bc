#include "mmot/two_marginal.hpp"

#include <cmath>

namespace mmot {

namespace {

// Row-wise log-sum-exp of a matrix.
Vector row_lse(const Matrix& a) {
  const Vector mx = a.rowwise().maxCoeff();
  const Matrix shifted = a.colwise() - mx;
  return mx.array() + shifted.array().exp().rowwise().sum().log();
}

}  // namespace

TwoMarginalSolution sinkhorn_two_marginal(const Vector& mu, const Vector& nu,
                                          const Matrix& W, double eta,
                                          const SinkhornOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (W.rows() != mu.size() || W.cols() != nu.size()) {
    throw std::invalid_argument("cost matrix does not match marginals");
  }
  if (opts.anchor < 0 || opts.anchor >= nu.size()) {
    throw std::invalid_argument("anchor index out of range");
  }
  const Vector log_mu = mu.array().log();
  const Vector log_nu = nu.array().log();
  const Matrix neg_cost = -W / eta;

  TwoMarginalSolution sol;
  sol.phi = Vector::Zero(nu.size());
  // L_i = log sum_j exp((phi_j - W_ij)/eta) nu_j ; psi = -eta L makes the
  // row sums exact, and the row residual after the phi update is
  // mu_i |exp(psi_i/eta + L_i) - 1|.
  Vector L = row_lse(neg_cost.rowwise() + (sol.phi / eta + log_nu).transpose());
  for (long it = 1; it <= opts.max_iter; ++it) {
    sol.psi = -eta * L;
    const Vector col =
        row_lse(neg_cost.transpose().rowwise() + (sol.psi / eta + log_mu).transpose());
    sol.phi = -eta * col;
    L = row_lse(neg_cost.rowwise() + (sol.phi / eta + log_nu).transpose());
    const Vector rows = mu.array() * (sol.psi.array() / eta + L.array()).exp();
    sol.residual = (rows - mu).cwiseAbs().maxCoeff();
    sol.residual_history.push_back(sol.residual);
    sol.iterations = it;
    if (sol.residual <= opts.tol) break;
    if (it == opts.max_iter) {
      throw MaxIterExceeded("two-marginal Sinkhorn", it, sol.residual);
    }
  }

  const double shift = sol.phi(opts.anchor);
  sol.phi.array() -= shift;
  sol.psi.array() += shift;
  Matrix logp = neg_cost;
  logp.colwise() += sol.psi / eta + log_mu;
  logp.rowwise() += (sol.phi / eta + log_nu).transpose();
  sol.plan = logp.array().exp();
  return sol;
}

StarSolution solve_star(const Vector& mu, const std::vector<Vector>& nu,
                        const std::vector<Matrix>& W, double eta,
                        const SinkhornOptions& opts) {
  if (nu.size() != W.size()) throw std::invalid_argument("one cost per leaf required");
  StarSolution out;
  out.center = Vector::Zero(mu.size());
  for (std::size_t k = 0; k < nu.size(); ++k) {
    out.edges.push_back(sinkhorn_two_marginal(mu, nu[k], W[k], eta, opts));
    out.center += out.edges.back().psi;
    out.leaves.push_back(out.edges.back().phi);
  }
  return out;
}

DenseTensor product_plan_eps0(const std::vector<TwoMarginalSolution>& edges,
                              const Vector& rho, double budget) {
  const int m = static_cast<int>(edges.size()) + 1;
  const Index n = rho.size();
  DenseTensor gamma(n, m, budget);
  std::vector<int> idx(m);
  for (std::size_t f = 0; f < gamma.size(); ++f) {
    gamma.unflatten(f, idx);
    const int x1 = idx[0];
    double v = rho(x1);
    for (int k = 1; k < m; ++k) v *= edges[k - 1].plan(x1, idx[k]) / rho(x1);
    gamma[f] = v;
  }
  return gamma;
}

}  // namespace mmot
