#include "mmot/ode_integrator.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace mmot {

Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::kEuler;
  if (name == "rk3") return Scheme::kRK3;
  if (name == "rk5") return Scheme::kRK5;
  if (name == "rk8") return Scheme::kRK8;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::kEuler: return "euler";
    case Scheme::kRK3: return "rk3";
    case Scheme::kRK5: return "rk5";
    case Scheme::kRK8: return "rk8";
  }
  return "unknown";
}

namespace {

ButcherTableau make_euler() { return {"euler", 1, {{}}, {1.0}, {0.0}}; }

ButcherTableau make_kutta3() {
  return {"kutta3", 3, {{}, {0.5}, {-1.0, 2.0}}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {0.0, 0.5, 1.0}};
}

// The seventh Dormand-Prince stage only feeds the embedded error estimate.
ButcherTableau make_dopri5() {
  ButcherTableau t;
  t.name = "dopri5";
  t.order = 5;
  t.a = {{},
         {1.0 / 5},
         {3.0 / 40, 9.0 / 40},
         {44.0 / 45, -56.0 / 15, 32.0 / 9},
         {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
         {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656}};
  t.b = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
  t.c = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0};
  return t;
}

ButcherTableau make_dop853() {
  ButcherTableau t;
  t.name = "dop853";
  t.order = 8;
  t.c = {0.0,
         0.526001519587677318785587544488e-01,
         0.789002279381515978178381316732e-01,
         0.118350341907227396726757197510e+00,
         0.281649658092772603273242802490e+00,
         0.333333333333333333333333333333e+00,
         0.25e+00,
         0.307692307692307692307692307692e+00,
         0.651282051282051282051282051282e+00,
         0.6e+00,
         0.857142857142857142857142857142e+00,
         1.0};
  t.a = {
      {},
      {5.26001519587677318785587544488e-2},
      {1.97250569845378994544595329183e-2, 5.91751709536136983633785987549e-2},
      {2.95875854768068491816892993775e-2, 0, 8.87627564304205475450678981324e-2},
      {2.41365134159266685502369798665e-1, 0, -8.84549479328286085344864962717e-1,
       9.24834003261792003115737966543e-1},
      {3.7037037037037037037037037037e-2, 0, 0, 1.70828608729473871279604482173e-1,
       1.25467687566822425016691814123e-1},
      {3.7109375e-2, 0, 0, 1.70252211019544039314978060272e-1,
       6.02165389804559606850219397283e-2, -1.7578125e-2},
      {3.70920001185047927108779319836e-2, 0, 0, 1.70383925712239993810214054705e-1,
       1.07262030446373284651809199168e-1, -1.53194377486244017527936158236e-2,
       8.27378916381402288758473766002e-3},
      {6.24110958716075717114429577812e-1, 0, 0, -3.36089262944694129406857109825e0,
       -8.68219346841726006818189891453e-1, 2.75920996994467083049415600797e1,
       2.01540675504778934086186788979e1, -4.34898841810699588477366255144e1},
      {4.77662536438264365890433908527e-1, 0, 0, -2.48811461997166764192642586468e0,
       -5.90290826836842996371446475743e-1, 2.12300514481811942347288949897e1,
       1.52792336328824235832596922938e1, -3.32882109689848629194453265587e1,
       -2.03312017085086261358222928593e-2},
      {-9.3714243008598732571704021658e-1, 0, 0, 5.18637242884406370830023853209e0,
       1.09143734899672957818500254654e0, -8.14978701074692612513997267357e0,
       -1.85200656599969598641566180701e1, 2.27394870993505042818970056734e1,
       2.49360555267965238987089396762e0, -3.0467644718982195003823669022e0},
      {2.27331014751653820792359768449e0, 0, 0, -1.05344954667372501984066689879e1,
       -2.00087205822486249909675718444e0, -1.79589318631187989172765950534e1,
       2.79488845294199600508499808837e1, -2.85899827713502369474065508674e0,
       -8.87285693353062954433549289258e0, 1.23605671757943030647266201528e1,
       6.43392746015763530355970484046e-1}};
  t.b = {5.42937341165687622380535766363e-2, 0, 0, 0, 0,
         4.45031289275240888144113950566e0, 1.89151789931450038304281599044e0,
         -5.8012039600105847814672114227e0, 3.1116436695781989440891606237e-1,
         -1.52160949662516078556178806805e-1, 2.01365400804030348374776537501e-1,
         4.47106157277725905176885569043e-2};
  return t;
}

}  // namespace

const ButcherTableau& tableau(Scheme scheme) {
  static const ButcherTableau euler = make_euler();
  static const ButcherTableau rk3 = make_kutta3();
  static const ButcherTableau rk5 = make_dopri5();
  static const ButcherTableau rk8 = make_dop853();
  switch (scheme) {
    case Scheme::kEuler: return euler;
    case Scheme::kRK3: return rk3;
    case Scheme::kRK5: return rk5;
    case Scheme::kRK8: return rk8;
  }
  throw std::invalid_argument("unknown scheme");
}

Vector rk_step(const ButcherTableau& tab,
               const std::function<Vector(double, const Vector&)>& f, double t,
               const Vector& y, double h) {
  std::vector<Vector> k;
  k.reserve(tab.stages());
  Vector out = y;
  for (int s = 0; s < tab.stages(); ++s) {
    Vector stage = y;
    for (int j = 0; j < s; ++j) {
      if (tab.a[s][j] != 0.0) stage.noalias() += h * tab.a[s][j] * k[j];
    }
    k.push_back(f(t + tab.c[s] * h, stage));
    if (tab.b[s] != 0.0) out.noalias() += h * tab.b[s] * k.back();
  }
  return out;
}

RhsEvaluation evaluate_rhs(const ProblemParams& params, const Vector& phi, double eps,
                           bool eigen_diagnostics) {
  const auto d = evaluate_dual(params, phi, eps, kGradient | kHessian | kMixed);
  const Matrix reduced = reduce(d.hess, params.anchor);
  Eigen::LLT<Matrix> llt(reduced);
  if (llt.info() != Eigen::Success) throw NotSPDError(eps);
  RhsEvaluation out;
  out.direction = embed(llt.solve(-reduce(d.mixed, params.anchor)), params.anchor);
  out.grad_norm = d.grad.cwiseAbs().maxCoeff();
  out.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  if (eigen_diagnostics) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(reduced, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = es.eigenvalues().minCoeff();
    if (!(out.min_eigenvalue > 0.0)) throw NotSPDError(eps);
  }
  return out;
}

long step_count(double h) {
  if (!(h > 0.0 && h <= 1.0)) throw std::invalid_argument("step size must lie in (0, 1]");
  const double steps = 1.0 / h;
  const long n = std::lround(steps);
  if (std::abs(steps - static_cast<double>(n)) > 1e-9 * steps) {
    throw std::invalid_argument("1/h must be an integer");
  }
  return n;
}

Trajectory integrate(const ProblemParams& params, const Vector& phi0, Scheme scheme,
                     double h, const IntegrateOptions& opts) {
  const long n_steps = step_count(h);
  const double step = 1.0 / static_cast<double>(n_steps);
  const ButcherTableau& tab = tableau(scheme);
  const double bound = 4.0 * params.bundle.M + opts.bound_slack * params.bundle.M;

  Trajectory traj;
  traj.scheme = scheme;
  traj.h = step;
  Vector phi = anchor_shift(phi0, params.anchor);

  // The bound is checked before the Hessian so that a blown-up iterate
  // reports the bound rather than an underflowed factorisation.
  auto check = [&](double eps, const Vector& y) {
    const double sup = y.cwiseAbs().maxCoeff();
    if (opts.check_bound && sup > bound) throw BoundViolation(eps, sup, bound);
    return sup;
  };
  auto record = [&](double eps, const RhsEvaluation& ev, double sup) {
    traj.steps.push_back({eps, phi, ev.grad_norm, ev.min_eigenvalue, sup});
  };

  for (long k = 0; k < n_steps; ++k) {
    const double eps = static_cast<double>(k) * step;
    const double sup = check(eps, phi);
    bool first_stage = true;
    auto f = [&](double t, const Vector& y) {
      ++traj.rhs_evaluations;
      const bool at_step_point = first_stage;
      first_stage = false;
      auto ev = evaluate_rhs(params, y, std::min(t, 1.0), at_step_point && opts.eigen_diagnostics);
      if (at_step_point) record(t, ev, sup);
      return ev.direction;
    };
    phi = anchor_shift(rk_step(tab, f, eps, phi, step), params.anchor);
  }
  const double sup = check(1.0, phi);
  ++traj.rhs_evaluations;
  record(1.0, evaluate_rhs(params, phi, 1.0, opts.eigen_diagnostics), sup);
  return traj;
}

}  // namespace mmot
