#include "mmot/sinkhorn_mm.hpp"

#include <cmath>
#include <limits>

namespace mmot {

SymmetricSinkhornResult solve_symmetric_mm(const ProblemParams& params, double eps,
                                           const SymmetricSinkhornOptions& opts) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("eps must lie in [0, 1]");
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) {
    throw std::invalid_argument("damping must lie in (0, 1]");
  }
  const Vector log_rho = params.rho().array().log();
  Vector phi = anchor_shift(opts.phi_init.value_or(Vector::Zero(params.n())), params.anchor);

  SymmetricSinkhornResult out;
  for (long it = 0;; ++it) {
    const auto d = evaluate_dual(params, phi, eps, kValue | kGradient);
    out.report.objective_history.push_back(d.value);
    out.report.objective = d.value;
    out.report.residual = d.grad.cwiseAbs().maxCoeff();
    out.report.iterations = it;
    if (out.report.residual <= opts.tol) break;
    if (it == opts.max_iter) {
      throw MaxIterExceeded("symmetric Sinkhorn", it, out.report.residual);
    }
    const Vector log_ratio = d.aux.I1.array().log() - log_rho.array();
    phi = anchor_shift(phi - opts.damping * params.eta * log_ratio, params.anchor);
  }
  out.phi = {phi, params.anchor};
  return out;
}

DenseTensor cost_tensor(const CostBundle& bundle, double eps, double budget) {
  DenseTensor c(bundle.size(), bundle.m, budget);
  std::vector<int> idx(bundle.m);
  for (std::size_t f = 0; f < c.size(); ++f) {
    c.unflatten(f, idx);
    c[f] = epsilon_cost(bundle, idx, eps).value;
  }
  return c;
}

DenseSinkhornResult solve_dense_mm(const DenseTensor& cost,
                                   const std::vector<Vector>& marginals, double eta,
                                   double tol, long max_iter) {
  const int m = cost.order();
  const Index n = cost.n();
  if (static_cast<int>(marginals.size()) != m) {
    throw std::invalid_argument("one marginal per tensor axis required");
  }
  std::vector<Vector> log_mu;
  for (const auto& mu : marginals) log_mu.push_back(mu.array().log());

  DenseSinkhornResult out{std::vector<Vector>(m, Vector::Zero(n)), DenseTensor(cost.n(), m, cost.size()), 0, 0.0};
  std::vector<int> idx(m);
  std::vector<double> log_gamma(cost.size());

  auto fill_log_gamma = [&]() {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < cost.size(); ++f) {
      cost.unflatten(f, idx);
      double v = -cost[f] / eta;
      for (int k = 0; k < m; ++k) v += out.potentials[k](idx[k]) / eta + log_mu[k](idx[k]);
      log_gamma[f] = v;
      mx = std::max(mx, v);
    }
    return mx;
  };
  auto log_marginal = [&](int axis, double mx) {
    Vector s = Vector::Zero(n);
    for (std::size_t f = 0; f < cost.size(); ++f) {
      cost.unflatten(f, idx);
      s(idx[axis]) += std::exp(log_gamma[f] - mx);
    }
    return Vector(s.array().log() + mx);
  };

  for (long it = 1;; ++it) {
    for (int k = 0; k < m; ++k) {
      const double mx = fill_log_gamma();
      out.potentials[k] -= eta * (log_marginal(k, mx) - log_mu[k]);
    }
    const double mx = fill_log_gamma();
    out.residual = 0.0;
    for (int k = 0; k < m; ++k) {
      const Vector marg = log_marginal(k, mx).array().exp();
      out.residual = std::max(out.residual, (marg - marginals[k]).cwiseAbs().maxCoeff());
    }
    out.iterations = it;
    if (out.residual <= tol) break;
    if (it == max_iter) throw MaxIterExceeded("dense multi-marginal Sinkhorn", it, out.residual);
  }

  for (int k = 1; k < m; ++k) {
    const double shift = out.potentials[k](0);
    out.potentials[k].array() -= shift;
    out.potentials[0].array() += shift;
  }
  fill_log_gamma();
  for (std::size_t f = 0; f < cost.size(); ++f) out.plan[f] = std::exp(log_gamma[f]);
  return out;
}

}  // namespace mmot
