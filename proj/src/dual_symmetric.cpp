#include "mmot/dual_symmetric.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mmot {

ProblemParams::ProblemParams(double eta_, DiscreteMarginal marginal_,
                             CostBundle bundle_, Index anchor_)
    : eta(eta_),
      marginal(std::move(marginal_)),
      bundle(std::move(bundle_)),
      anchor(anchor_) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (bundle.m < 3) throw std::invalid_argument("need m >= 3 marginals");
  if (bundle.size() != marginal.size()) {
    throw std::invalid_argument("cost matrix and marginal sizes differ");
  }
  if (anchor < 0 || anchor >= marginal.size()) {
    throw std::invalid_argument("anchor index out of range");
  }
}

Potential Potential::anchored(Vector v, Index anchor) {
  return {anchor_shift(v, anchor), anchor};
}

Vector anchor_shift(const Vector& v, Index anchor) {
  return v.array() - v(anchor);
}

Matrix reduce(const Matrix& hess, Index anchor) {
  const Index n = hess.rows();
  Matrix out(n - 1, n - 1);
  for (Index i = 0, ri = 0; i < n; ++i) {
    if (i == anchor) continue;
    for (Index j = 0, rj = 0; j < n; ++j) {
      if (j == anchor) continue;
      out(ri, rj++) = hess(i, j);
    }
    ++ri;
  }
  return out;
}

Vector reduce(const Vector& v, Index anchor) {
  Vector out(v.size() - 1);
  for (Index i = 0, r = 0; i < v.size(); ++i) {
    if (i != anchor) out(r++) = v(i);
  }
  return out;
}

Vector embed(const Vector& reduced, Index anchor) {
  Vector out(reduced.size() + 1);
  for (Index i = 0, r = 0; i < out.size(); ++i) {
    out(i) = i == anchor ? 0.0 : reduced(r++);
  }
  return out;
}

namespace {

// Block-local sums over the first coordinate y.
struct Partial {
  Vector I1;
  Matrix I2;
  Matrix outer;  // sum_y rho_y p_y p_y^T
  Vector mixed;  // sum_y rho_y (E_y[d 1{x^2=z}] - p_y(z) E_y[d])

  Partial(Index n, unsigned flags)
      : I1(Vector::Zero(n)), mixed(Vector::Zero((flags & kMixed) ? n : 0)) {
    if (flags & kHessian) {
      I2 = Matrix::Zero(n, n);
      outer = Matrix::Zero(n, n);
    }
  }
};

struct PerFirst {
  double log_partition = 0.0;
  Vector p;
  Vector dp;     // E_y[d 1{x^2 = z}]
  double d_mean = 0.0;
};

void accumulate(const PerFirst& s, double rho_y, unsigned flags, Partial& acc) {
  acc.I1.noalias() += rho_y * s.p;
  if (flags & kHessian) acc.outer.noalias() += rho_y * s.p * s.p.transpose();
  if (flags & kMixed) acc.mixed.noalias() += rho_y * (s.dp - s.d_mean * s.p);
}

// m == 3: P_y(q, r) ~ exp(a_q + a_r - eps W[q][r] / eta), O(N^2) per y.
void first_coordinate_m3(const ProblemParams& params, const Vector& base,
                         const Matrix& inner_exponent, Index y, unsigned flags,
                         PerFirst& out, Partial& acc) {
  const Matrix& W = params.bundle.W;
  const Vector a = base - W.col(y) / params.eta;
  Matrix ex = inner_exponent;
  ex.colwise() += a;
  ex.rowwise() += a.transpose();
  const double mx = ex.maxCoeff();
  Matrix prob = (ex.array() - mx).exp().matrix();
  const double total = prob.sum();
  out.log_partition = mx + std::log(total);
  prob /= total;
  out.p = prob.rowwise().sum();
  if (flags & kMixed) {
    out.dp = W.cwiseProduct(prob).rowwise().sum();
    out.d_mean = out.dp.sum();
  }
  const double rho_y = params.rho()(y);
  if (flags & kHessian) acc.I2.noalias() += rho_y * prob;
  accumulate(out, rho_y, flags, acc);
}

// General m: enumerate (x^2..x^m) in X^(m-1) with an odometer, two passes
// (max exponent, then stabilized sums).
void first_coordinate_enumerated(const ProblemParams& params, const Vector& base,
                                 double eps, Index y, unsigned flags,
                                 PerFirst& out, Partial& acc) {
  const Matrix& W = params.bundle.W;
  const int k = params.m() - 1;
  const Index n = params.n();
  const double inv_eta = 1.0 / params.eta;
  const Vector a = base - W.col(y) * inv_eta;
  std::vector<Index> idx(k, 0);

  auto inner_pairs = [&]() {
    double d = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) d += W(idx[i], idx[j]);
    return d;
  };
  auto exponent = [&](double d) {
    double e = -eps * d * inv_eta;
    for (int i = 0; i < k; ++i) e += a(idx[i]);
    return e;
  };
  auto advance = [&]() {
    for (int i = k - 1; i >= 0; --i) {
      if (++idx[i] < n) return true;
      idx[i] = 0;
    }
    return false;
  };

  double mx = -std::numeric_limits<double>::infinity();
  do {
    mx = std::max(mx, exponent(inner_pairs()));
  } while (advance());

  Vector p = Vector::Zero(n);
  Vector dp = Vector::Zero((flags & kMixed) ? n : 0);
  Matrix pair = (flags & kHessian) ? Matrix::Zero(n, n) : Matrix();
  double total = 0.0;
  double d_sum = 0.0;
  std::fill(idx.begin(), idx.end(), 0);
  do {
    const double d = inner_pairs();
    const double e = std::exp(exponent(d) - mx);
    total += e;
    for (int i = 0; i < k; ++i) {
      p(idx[i]) += e;
      if (flags & kMixed) dp(idx[i]) += e * d;
      if (flags & kHessian) {
        for (int j = 0; j < k; ++j)
          if (j != i) pair(idx[i], idx[j]) += e;
      }
    }
    if (flags & kMixed) d_sum += e * d;
  } while (advance());

  out.log_partition = mx + std::log(total);
  out.p = p / (total * k);
  if (flags & kMixed) {
    out.dp = dp / (total * k);
    out.d_mean = d_sum / total;
  }
  const double rho_y = params.rho()(y);
  if (flags & kHessian && k >= 2) {
    acc.I2.noalias() += (rho_y / (total * k * (k - 1))) * pair;
  }
  accumulate(out, rho_y, flags, acc);
}

void check_budget(const ProblemParams& params) {
  const double tuples = std::pow(static_cast<double>(params.n()), params.m() - 1);
  if (tuples > params.enumeration_budget) {
    throw SizeGuardError(tuples, params.enumeration_budget);
  }
}

}  // namespace

DualDerivatives evaluate_dual(const ProblemParams& params, const Vector& phi,
                              double eps, unsigned flags) {
  const Index n = params.n();
  if (phi.size() != n) throw std::invalid_argument("potential has wrong length");
  check_budget(params);

  const int m = params.m();
  const double eta = params.eta;
  const Vector& rho = params.rho();
  const Vector base = phi / eta + rho.array().log().matrix();
  const bool fast = m == 3 && !params.force_enumeration;
  const Matrix inner_exponent =
      fast ? Matrix(-eps / eta * params.bundle.W) : Matrix();

  DualDerivatives out;
  out.aux.log_partition.resize(n);
  out.aux.I3.resize(n, n);

  std::vector<Partial> partials;
  const int max_blocks = num_threads();
  partials.reserve(max_blocks);
  for (int b = 0; b < max_blocks; ++b) partials.emplace_back(n, flags);

  parallel_blocks(n, [&](Index begin, Index end, int block) {
    Partial& acc = partials[block];
    PerFirst s;
    for (Index y = begin; y < end; ++y) {
      if (fast) {
        first_coordinate_m3(params, base, inner_exponent, y, flags, s, acc);
      } else {
        first_coordinate_enumerated(params, base, eps, y, flags, s, acc);
      }
      out.aux.log_partition(y) = s.log_partition;
      out.aux.I3.col(y) = s.p;
    }
  });

  Partial total(n, flags);
  for (const auto& part : partials) {
    total.I1 += part.I1;
    if (flags & kHessian) {
      total.I2 += part.I2;
      total.outer += part.outer;
    }
    if (flags & kMixed) total.mixed += part.mixed;
  }

  out.aux.I1 = total.I1;
  out.aux.rho_bar =
      (rho.array().log() - out.aux.log_partition.array()).exp().matrix();
  out.value = -(m - 1) * phi.dot(rho) + eta * rho.dot(out.aux.log_partition);
  if (flags & kGradient) out.grad = (m - 1) * (total.I1 - rho);
  if (flags & kHessian) {
    out.aux.I2 = total.I2;
    Matrix h = Matrix(total.I1.asDiagonal()) + (m - 2) * total.I2 -
               (m - 1) * total.outer;
    h *= (m - 1) / eta;
    out.hess = 0.5 * (h + h.transpose());
  }
  if (flags & kMixed) out.mixed = -(m - 1) / eta * total.mixed;
  return out;
}

double objective(const ProblemParams& params, const Vector& phi, double eps) {
  return evaluate_dual(params, phi, eps, kValue).value;
}

Vector gradient(const ProblemParams& params, const Vector& phi, double eps) {
  return evaluate_dual(params, phi, eps, kGradient).grad;
}

Matrix hessian(const ProblemParams& params, const Vector& phi, double eps) {
  return evaluate_dual(params, phi, eps, kHessian).hess;
}

Vector mixed_eps_gradient(const ProblemParams& params, const Vector& phi,
                          double eps) {
  return evaluate_dual(params, phi, eps, kMixed).mixed;
}

double objective_difference(const ProblemParams& params, const Vector& phi,
                            const Vector& delta, double eps) {
  const Index n = params.n();
  if (phi.size() != n || delta.size() != n) {
    throw std::invalid_argument("potential has wrong length");
  }
  check_budget(params);
  const int m = params.m();
  const int k = m - 1;
  const double eta = params.eta;
  const Matrix& W = params.bundle.W;
  const Vector& rho = params.rho();
  const Vector base = phi / eta + rho.array().log().matrix();
  const Vector step = delta / eta;
  const bool fast = m == 3 && !params.force_enumeration;

  // log E_y[exp(sum_i step(x^i))] = log1p(E_y[expm1(sum_i step(x^i))])
  Vector log_change(n);
  parallel_blocks(n, [&](Index begin, Index end, int) {
    std::vector<Index> idx(k, 0);
    for (Index y = begin; y < end; ++y) {
      const Vector a = base - W.col(y) / eta;
      if (fast) {
        Matrix ex = -eps / eta * W;
        ex.colwise() += a;
        ex.rowwise() += a.transpose();
        const double mx = ex.maxCoeff();
        const Matrix w = (ex.array() - mx).exp().matrix();
        Matrix u = Matrix::Zero(n, n);
        u.colwise() += step;
        u.rowwise() += step.transpose();
        const double mean = (w.array() * u.array().unaryExpr([](double v) {
                               return std::expm1(v);
                             })).sum() / w.sum();
        log_change(y) = std::log1p(mean);
        continue;
      }
      auto exponent = [&](double& u) {
        double e = 0.0, d = 0.0;
        u = 0.0;
        for (int i = 0; i < k; ++i) {
          e += a(idx[i]);
          u += step(idx[i]);
          for (int j = i + 1; j < k; ++j) d += W(idx[i], idx[j]);
        }
        return e - eps * d / eta;
      };
      auto advance = [&]() {
        for (int i = k - 1; i >= 0; --i) {
          if (++idx[i] < n) return true;
          idx[i] = 0;
        }
        return false;
      };
      double u = 0.0;
      double mx = -std::numeric_limits<double>::infinity();
      std::fill(idx.begin(), idx.end(), 0);
      do {
        mx = std::max(mx, exponent(u));
      } while (advance());
      double total = 0.0, weighted = 0.0;
      std::fill(idx.begin(), idx.end(), 0);
      do {
        const double w = std::exp(exponent(u) - mx);
        total += w;
        weighted += w * std::expm1(u);
      } while (advance());
      log_change(y) = std::log1p(weighted / total);
    }
  });
  return -(m - 1) * delta.dot(rho) + eta * rho.dot(log_change);
}

Vector psi_from_phi(const ProblemParams& params, const Vector& phi, double eps) {
  return -params.eta * evaluate_dual(params, phi, eps, kValue).aux.log_partition;
}

}  // namespace mmot
