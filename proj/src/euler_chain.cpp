#include "mmot/euler_chain.hpp"

#include "mmot/two_marginal.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <sstream>

namespace mmot {

EulerProblem::EulerProblem(DiscreteMarginal marginal_, int m_, double eta_,
                           std::vector<Index> final_map_, double beta_, double T_,
                           Index anchor_)
    : marginal(std::move(marginal_)),
      m(m_),
      eta(eta_),
      final_map(std::move(final_map_)),
      beta(beta_),
      T(T_),
      anchor(anchor_) {
  if (m < 3) throw std::invalid_argument("Euler chain needs m >= 3");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("penalty weight must be non-negative");
  if (!(T > 0.0)) throw std::invalid_argument("final time must be positive");
  if (marginal.grid().dim() != 1) throw std::invalid_argument("Euler chain grid must be 1-d");
  if (static_cast<Index>(final_map.size()) != n()) {
    throw std::invalid_argument("final map length must equal the grid size");
  }
  for (Index f : final_map) {
    if (f < 0 || f >= n()) throw std::invalid_argument("final map entry outside the grid");
  }
  if (anchor < 0 || anchor >= n()) throw std::invalid_argument("anchor outside the grid");
}

std::vector<Index> final_map_reflect(Index n) {
  std::vector<Index> f(n);
  for (Index i = 0; i < n; ++i) f[i] = n - 1 - i;
  return f;
}

std::vector<Index> final_map_shift_mod(Index n) {
  if (n % 2 != 0) throw std::invalid_argument("shift_mod needs an even grid size");
  std::vector<Index> f(n);
  for (Index i = 0; i < n; ++i) f[i] = (i + n / 2) % n;
  return f;
}

std::vector<Index> parse_final_map(const std::string& text, Index n) {
  if (text == "reflect") return final_map_reflect(n);
  if (text == "shift_mod") return final_map_shift_mod(n);
  std::vector<Index> f;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
      f.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad final map entry '" + item + "'");
    }
  }
  if (static_cast<Index>(f.size()) != n) {
    throw std::invalid_argument("final map must be 'reflect', 'shift_mod' or " +
                                std::to_string(n) + " indices");
  }
  return f;
}

PotentialStack gauge_fix(const PotentialStack& phi, Index anchor) {
  PotentialStack out = phi;
  for (Index i = 1; i < out.rows(); ++i) {
    const double c = out(i, anchor);
    out.row(i).array() -= c;
    out.row(0).array() += c;
  }
  return out;
}

namespace {

std::vector<Index> kept_indices(int m, Index n, Index anchor) {
  std::vector<Index> keep;
  keep.reserve(m * n - (m - 1));
  for (int i = 0; i < m; ++i)
    for (Index x = 0; x < n; ++x)
      if (i == 0 || x != anchor) keep.push_back(i * n + x);
  return keep;
}

}  // namespace

Vector reduce_stack(const PotentialStack& phi, Index anchor) {
  const auto keep = kept_indices(static_cast<int>(phi.rows()), phi.cols(), anchor);
  Vector out(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out(k) = phi(keep[k] / phi.cols(), keep[k] % phi.cols());
  }
  return out;
}

PotentialStack embed_stack(const Vector& reduced, int m, Index n, Index anchor) {
  const auto keep = kept_indices(m, n, anchor);
  if (static_cast<Index>(keep.size()) != reduced.size()) {
    throw std::invalid_argument("reduced stack has the wrong size");
  }
  PotentialStack phi = PotentialStack::Zero(m, n);
  for (std::size_t k = 0; k < keep.size(); ++k) phi(keep[k] / n, keep[k] % n) = reduced(k);
  return phi;
}

std::size_t ChainContraction::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i == j || i < 0 || j >= m) throw std::out_of_range("pair index");
  // row-major over the strict upper triangle
  return static_cast<std::size_t>(i * m - i * (i + 1) / 2 + (j - i - 1));
}

Matrix ChainContraction::pair_marginal(int i, int j) const {
  const Matrix& p = pair.at(pair_index(i, j));
  return i < j ? p : Matrix(p.transpose());
}

namespace {

constexpr double kUnderflow = 1e-250;

// C(x, y) = log sum_k exp(A(x, k) + B(k, y)) and, when U and V are given, the
// average of U(x, k) + V(k, y) under the normalised weights of that sum.
// Uses shifted exponentials and a matrix product; entries whose shifted sum
// underflows are redone term by term.
struct LogProduct {
  Matrix log;
  Matrix mean;
};

LogProduct log_matmul(const Matrix& A, const Matrix& B, const Matrix* U = nullptr,
                      const Matrix* V = nullptr) {
  const Index rows = A.rows(), inner = A.cols(), cols = B.cols();
  const bool with_mean = U != nullptr;
  LogProduct out{Matrix(rows, cols), with_mean ? Matrix(rows, cols) : Matrix()};

  Vector cb = B.colwise().maxCoeff().transpose();
  for (Index y = 0; y < cols; ++y)
    if (!std::isfinite(cb(y))) cb(y) = 0.0;
  const Matrix EB = (B.rowwise() - cb.transpose()).array().exp().matrix();
  Matrix EBV;
  if (with_mean) EBV = EB.cwiseProduct(*V);

  parallel_blocks(rows, [&](Index begin, Index end, int) {
    const Index len = end - begin;
    if (len == 0) return;
    const auto Ablk = A.middleRows(begin, len);
    Vector ra = Ablk.rowwise().maxCoeff();
    for (Index x = 0; x < len; ++x)
      if (!std::isfinite(ra(x))) ra(x) = 0.0;
    const Matrix EA = (Ablk.colwise() - ra).array().exp().matrix();
    const Matrix P = EA * EB;
    Matrix num;
    if (with_mean) {
      num = EA.cwiseProduct(U->middleRows(begin, len)) * EB + EA * EBV;
    }
    for (Index x = 0; x < len; ++x) {
      for (Index y = 0; y < cols; ++y) {
        const Index gx = begin + x;
        if (P(x, y) > kUnderflow) {
          out.log(gx, y) = std::log(P(x, y)) + ra(x) + cb(y);
          if (with_mean) out.mean(gx, y) = num(x, y) / P(x, y);
          continue;
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (Index k = 0; k < inner; ++k) mx = std::max(mx, A(gx, k) + B(k, y));
        if (!std::isfinite(mx)) {
          out.log(gx, y) = mx;
          if (with_mean) out.mean(gx, y) = 0.0;
          continue;
        }
        double s = 0.0, sm = 0.0;
        for (Index k = 0; k < inner; ++k) {
          const double w = std::exp(A(gx, k) + B(k, y) - mx);
          s += w;
          if (with_mean) sm += w * ((*U)(gx, k) + (*V)(k, y));
        }
        out.log(gx, y) = mx + std::log(s);
        if (with_mean) out.mean(gx, y) = sm / s;
      }
    }
  });
  return out;
}

Matrix squared_distances(const EulerProblem& p) {
  const Index n = p.n();
  Matrix sq(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = p.marginal.grid().coordinate(i) - p.marginal.grid().coordinate(j);
      sq(i, j) = d * d;
    }
  return sq;
}

}  // namespace

ChainContraction chain_contract(const EulerProblem& problem, const PotentialStack& phi,
                                double eps, unsigned flags) {
  const int m = problem.m;
  const Index n = problem.n();
  if (phi.rows() != m || phi.cols() != n) throw std::invalid_argument("potential stack shape");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must lie in [0, 1]");
  const double eta = problem.eta;
  const bool want_mixed = flags & kChainMixed;

  const Matrix sq = squared_distances(problem);
  const Matrix D = problem.kinetic() * sq;  // d_eps of one inner edge
  const Matrix logK = -eps / eta * D;
  const Vector log_rho = problem.rho().array().log();
  const Vector lw = phi.row(0).transpose() / eta + log_rho;

  // logu[k](a, x): weight of path node k (1..m-1) given x^1 = a.
  std::vector<Matrix> logu(m);
  for (int k = 1; k < m; ++k) {
    const Vector base = phi.row(k).transpose() / eta + log_rho;
    logu[k] = base.transpose().replicate(n, 1);
  }
  logu[1] -= problem.kinetic() / eta * sq;
  for (Index a = 0; a < n; ++a) {
    logu[m - 1].row(a) -= problem.beta / eta * sq.row(problem.final_map[a]);
  }

  std::vector<Matrix> alpha(m), beta(m), r(m), s(m);
  alpha[1] = logu[1];
  r[1] = Matrix::Zero(n, n);
  for (int k = 1; k + 1 < m; ++k) {
    auto lp = want_mixed ? log_matmul(alpha[k], logK, &r[k], &D) : log_matmul(alpha[k], logK);
    alpha[k + 1] = logu[k + 1] + lp.log;
    if (want_mixed) r[k + 1] = std::move(lp.mean);
  }
  beta[m - 1] = Matrix::Zero(n, n);
  s[m - 1] = Matrix::Zero(n, n);
  for (int k = m - 2; k >= 1; --k) {
    const Matrix next = logu[k + 1] + beta[k + 1];
    auto lp = want_mixed ? log_matmul(next, logK, &s[k + 1], &D) : log_matmul(next, logK);
    beta[k] = std::move(lp.log);
    if (want_mixed) s[k] = std::move(lp.mean);
  }

  ChainContraction out;
  out.m = m;
  out.one = Matrix::Zero(m, n);
  if (want_mixed) out.cost_weighted = Matrix::Zero(m, n);

  std::vector<Matrix> node(m);  // exp(lw + alpha + beta): joint law of (x^1, x^k)
  for (int k = 1; k < m; ++k) {
    node[k] = ((alpha[k] + beta[k]).colwise() + lw).array().exp().matrix();
    out.one.row(k) = node[k].colwise().sum();
    if (want_mixed) out.cost_weighted.row(k) = node[k].cwiseProduct(r[k] + s[k]).colwise().sum();
  }
  out.one.row(0) = node[1].rowwise().sum().transpose();
  out.mass = out.one.row(0).sum();
  if (want_mixed) {
    out.cost_weighted.row(0) = node[1].cwiseProduct(s[1]).rowwise().sum().transpose();
  }

  if (flags & kChainPairs) {
    out.pair.resize(static_cast<std::size_t>(m * (m - 1) / 2));
    for (int k = 1; k < m; ++k) out.pair[out.pair_index(0, k)] = node[k];
    for (int i = 1; i < m; ++i) {
      const Matrix Ai = (alpha[i].colwise() + lw).transpose();  // (x, a)
      Matrix logT = logK;
      for (int j = i + 1; j < m; ++j) {
        const Matrix Bj = logu[j] + beta[j];
        const auto joint = log_matmul(Ai, Bj);
        out.pair[out.pair_index(i, j)] = (joint.log + logT).array().exp().matrix();
        if (j + 1 < m) {
          // node j is interior, so its weight does not depend on x^1
          logT = log_matmul(logT.rowwise() + logu[j].row(0), logK).log;
        }
      }
    }
  }
  return out;
}

EulerDerivatives euler_derivatives(const EulerProblem& problem, const PotentialStack& phi,
                                   double eps, unsigned flags) {
  const int m = problem.m;
  const Index n = problem.n();
  const double eta = problem.eta;
  const auto c = chain_contract(problem, phi, eps, flags);
  EulerDerivatives d;
  d.value = eta * c.mass;
  for (int i = 0; i < m; ++i) d.value -= phi.row(i).dot(problem.rho().transpose());
  d.grad.resize(m * n);
  for (int i = 0; i < m; ++i) d.grad.segment(i * n, n) = c.one.row(i).transpose() - problem.rho();
  if (flags & kChainPairs) {
    d.hess = Matrix::Zero(m * n, m * n);
    for (int i = 0; i < m; ++i) {
      d.hess.block(i * n, i * n, n, n).diagonal() = c.one.row(i).transpose() / eta;
      for (int j = i + 1; j < m; ++j) {
        const Matrix& p = c.pair[c.pair_index(i, j)];
        d.hess.block(i * n, j * n, n, n) = p / eta;
        d.hess.block(j * n, i * n, n, n) = p.transpose() / eta;
      }
    }
  }
  if (flags & kChainMixed) {
    d.mixed.resize(m * n);
    for (int i = 0; i < m; ++i) d.mixed.segment(i * n, n) = -c.cost_weighted.row(i).transpose() / eta;
  }
  return d;
}

PotentialStack euler_initial_stack(const EulerProblem& problem, double tol) {
  const int m = problem.m;
  const Index n = problem.n();
  const Matrix sq = squared_distances(problem);
  Matrix closing(n, n);
  for (Index a = 0; a < n; ++a) closing.row(a) = problem.beta * sq.row(problem.final_map[a]);

  SinkhornOptions opts;
  opts.tol = tol;
  opts.anchor = problem.anchor;
  const auto first = sinkhorn_two_marginal(problem.rho(), problem.kinetic() * sq, problem.eta, opts);
  const auto last = sinkhorn_two_marginal(problem.rho(), closing, problem.eta, opts);

  PotentialStack phi = PotentialStack::Zero(m, n);
  phi.row(0) = (first.psi + last.psi).transpose();
  phi.row(1) = first.phi.transpose();
  phi.row(m - 1) = last.phi.transpose();
  return phi;
}

namespace {

struct RhsResult {
  Vector direction;
  double grad_norm;
};

RhsResult rhs_with_residual(const EulerProblem& problem, const PotentialStack& phi, double eps) {
  const auto d = euler_derivatives(problem, phi, eps, kChainAll);
  const auto keep = kept_indices(problem.m, problem.n(), problem.anchor);
  const Matrix H = d.hess(keep, keep);
  const Vector b = -d.mixed(keep);
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) throw NotSPDError(eps);
  Vector dir = llt.solve(b);
  if (!dir.allFinite() || !d.grad.allFinite()) throw NonFiniteError("euler rhs", eps);
  return {std::move(dir), d.grad.cwiseAbs().maxCoeff()};
}

}  // namespace

Vector euler_rhs(const EulerProblem& problem, const PotentialStack& phi, double eps) {
  return rhs_with_residual(problem, phi, eps).direction;
}

EulerTrajectory euler_ode_solve(const EulerProblem& problem, Scheme scheme, double h,
                                std::optional<PotentialStack> phi0) {
  const long n_steps = step_count(h);
  const double step = 1.0 / static_cast<double>(n_steps);
  const int m = problem.m;
  const Index n = problem.n();
  const ButcherTableau& tab = tableau(scheme);

  EulerTrajectory traj;
  traj.scheme = scheme;
  traj.h = step;
  Vector y = reduce_stack(gauge_fix(phi0 ? *phi0 : euler_initial_stack(problem), problem.anchor),
                          problem.anchor);

  for (long k = 0; k < n_steps; ++k) {
    bool first_stage = true;
    auto f = [&](double t, const Vector& state) {
      ++traj.rhs_evaluations;
      const PotentialStack phi = embed_stack(state, m, n, problem.anchor);
      auto res = rhs_with_residual(problem, phi, std::min(t, 1.0));
      if (first_stage) traj.steps.push_back({t, phi, res.grad_norm});
      first_stage = false;
      return res.direction;
    };
    y = rk_step(tab, f, static_cast<double>(k) * step, y, step);
  }
  const PotentialStack end = embed_stack(y, m, n, problem.anchor);
  const auto d = euler_derivatives(problem, end, 1.0, kChainMarginals);
  traj.steps.push_back({1.0, end, d.grad.cwiseAbs().maxCoeff()});
  return traj;
}

ChainSinkhornResult solve_chain_sinkhorn(const EulerProblem& problem, double eps, double tol,
                                         long max_sweeps, std::optional<PotentialStack> phi0) {
  const int m = problem.m;
  const Index n = problem.n();
  const Vector log_rho = problem.rho().array().log();
  ChainSinkhornResult out;
  out.phi = phi0 ? *phi0 : PotentialStack::Zero(m, n);
  if (out.phi.rows() != m || out.phi.cols() != n) throw std::invalid_argument("potential stack shape");

  for (out.sweeps = 0;; ++out.sweeps) {
    auto c = chain_contract(problem, out.phi, eps, kChainMarginals);
    out.residual = (c.one.rowwise() - problem.rho().transpose()).cwiseAbs().maxCoeff();
    if (!std::isfinite(out.residual)) throw NonFiniteError("chain sinkhorn", eps);
    if (out.residual <= tol) break;
    if (out.sweeps >= max_sweeps) throw MaxIterExceeded("chain sinkhorn", out.sweeps, out.residual);
    for (int i = 0; i < m; ++i) {
      if (i > 0) c = chain_contract(problem, out.phi, eps, kChainMarginals);
      const Vector log_one = c.one.row(i).transpose().array().log();
      out.phi.row(i) -= (problem.eta * (log_one - log_rho)).transpose();
    }
  }
  out.phi = gauge_fix(out.phi, problem.anchor);
  return out;
}

}  // namespace mmot
