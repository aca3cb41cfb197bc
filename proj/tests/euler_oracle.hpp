// Brute-force sums over the full Euler chain Gibbs tensor, by enumeration of
// all N^m tuples in long double.
#pragma once

#include "mmot/euler_chain.hpp"
#include "oracles.hpp"

namespace oracle {

struct EulerSums {
  double mass = 0.0;
  mmot::Matrix one;
  std::vector<mmot::Matrix> pair;  // pair[i * m + j]
  mmot::Matrix cost_weighted;
};

inline double euler_cost(const mmot::EulerProblem& p, const std::vector<int>& x, double eps,
                         double* d_eps = nullptr) {
  auto pt = [&](mmot::Index i) { return p.marginal.grid().coordinate(i); };
  auto sq = [](double v) { return v * v; };
  const double k = p.kinetic();
  double inner = 0.0;
  for (int i = 1; i + 1 < p.m; ++i) inner += k * sq(pt(x[i + 1]) - pt(x[i]));
  if (d_eps) *d_eps = inner;
  return k * sq(pt(x[1]) - pt(x[0])) + eps * inner +
         p.beta * sq(pt(p.final_map[x[0]]) - pt(x[p.m - 1]));
}

inline EulerSums euler_brute_force(const mmot::EulerProblem& p, const mmot::Matrix& phi,
                                   double eps) {
  const int m = p.m;
  const mmot::Index n = p.n();
  std::vector<long double> one(m * n, 0.0L), cw(m * n, 0.0L), pair(m * m * n * n, 0.0L);
  long double mass = 0.0L;
  for_each_tuple(n, m, [&](const std::vector<int>& x) {
    double de = 0.0;
    const double c = euler_cost(p, x, eps, &de);
    long double e = -c / p.eta;
    long double w = 1.0L;
    for (int i = 0; i < m; ++i) {
      e += phi(i, x[i]) / p.eta;
      w *= p.rho()(x[i]);
    }
    const long double g = std::exp(e) * w;
    mass += g;
    for (int i = 0; i < m; ++i) {
      one[i * n + x[i]] += g;
      cw[i * n + x[i]] += g * de;
      for (int j = 0; j < m; ++j) pair[((i * m + j) * n + x[i]) * n + x[j]] += g;
    }
  });
  EulerSums out;
  out.mass = static_cast<double>(mass);
  out.one.resize(m, n);
  out.cost_weighted.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (mmot::Index x = 0; x < n; ++x) {
      out.one(i, x) = static_cast<double>(one[i * n + x]);
      out.cost_weighted(i, x) = static_cast<double>(cw[i * n + x]);
    }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      mmot::Matrix q(n, n);
      for (mmot::Index a = 0; a < n; ++a)
        for (mmot::Index b = 0; b < n; ++b) q(a, b) = static_cast<double>(pair[((i * m + j) * n + a) * n + b]);
      out.pair.push_back(q);
    }
  return out;
}

}  // namespace oracle
