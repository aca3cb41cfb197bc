#include "mmot/refsolve.hpp"

#include "mmot/sinkhorn_mm.hpp"
#include "mmot/two_marginal.hpp"

#include <algorithm>

namespace mmot {

DescentResult minimize_backtracking(const ProblemParams& params, double eps,
                                    const Vector& phi_init,
                                    const BacktrackingOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  Vector phi = anchor_shift(phi_init, params.anchor);
  DescentResult out;

  ++out.report.evaluations;
  auto d = evaluate_dual(params, phi, eps, kValue | kGradient);
  for (long it = 0;; ++it) {
    out.report.iterations = it;
    out.report.residual = d.grad.cwiseAbs().maxCoeff();
    if (out.report.residual <= opts.tol) break;
    if (it == opts.max_iter) {
      throw MaxIterExceeded("gradient descent", it, out.report.residual);
    }
    Vector dir = -d.grad;
    dir(params.anchor) = 0.0;
    const double slope = d.grad.dot(dir);

    double step = opts.initial_step;
    while (true) {
      ++out.report.evaluations;
      const double change = objective_difference(params, phi, step * dir, eps);
      if (change <= opts.armijo_c * step * slope) {
        phi += step * dir;
        out.report.decreases.push_back(change);
        break;
      }
      step *= opts.shrink;
      if (step < opts.min_step) throw LineSearchStall(it, out.report.residual);
    }
    ++out.report.evaluations;
    d = evaluate_dual(params, phi, eps, kValue | kGradient);
  }
  out.report.value = d.value;
  out.phi = {phi, params.anchor};
  return out;
}

DescentResult reference_potential(const ProblemParams& params, double eps, double tol,
                                  double warm_tol) {
  SinkhornOptions two;
  two.tol = std::min(warm_tol, 1e-10);
  two.anchor = params.anchor;
  SymmetricSinkhornOptions sym;
  sym.tol = warm_tol;
  sym.phi_init = sinkhorn_two_marginal(params.rho(), params.bundle.W, params.eta, two).phi;
  const auto warm = solve_symmetric_mm(params, eps, sym);
  BacktrackingOptions bo;
  bo.tol = tol;
  return minimize_backtracking(params, eps, warm.phi.values, bo);
}

}  // namespace mmot
