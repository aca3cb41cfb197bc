#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mmot/refsolve.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace mmot;

TEST_CASE("zero cost needs no iterations") {
  auto grid = Grid::uniform(6);
  ProblemParams p(0.5, DiscreteMarginal::uniform(grid), make_cost_bundle(Matrix::Zero(6, 6), 3), 0);
  const auto r = minimize_backtracking(p, 1.0, Vector::Zero(6));
  CHECK(r.report.iterations == 0);
  CHECK(r.phi.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("accepted steps strictly decrease the objective") {
  auto p = oracle::uniform_problem(10, 3, 0.5, CostKind::kNegHarmonic);
  BacktrackingOptions opts;
  opts.tol = 1e-12;
  const auto r = minimize_backtracking(p, 1.0, Vector::Zero(10), opts);
  CHECK(r.report.iterations > 0);
  CHECK(r.report.decreases.size() == static_cast<std::size_t>(r.report.iterations));
  for (double d : r.report.decreases) CHECK(d < 0.0);
  CHECK(r.report.residual <= opts.tol);
}

TEST_CASE("stable objective difference agrees with plain subtraction") {
  std::mt19937_64 rng(51);
  for (int m : {3, 4}) {
    auto p = oracle::random_problem(rng, 5, m, 0.3);
    const Vector phi = oracle::random_vector(rng, 5);
    const Vector delta = oracle::random_vector(rng, 5, 0.2);
    const double plain = objective(p, phi + delta, 0.4) - objective(p, phi, 0.4);
    CHECK(objective_difference(p, phi, delta, 0.4) == doctest::Approx(plain).epsilon(1e-10));
    // tiny steps: first-order behaviour is resolved far below rounding of PhiTilde
    const Vector g = gradient(p, phi, 0.4);
    const Vector tiny = 1e-10 * g;
    CHECK(objective_difference(p, phi, tiny, 0.4) ==
          doctest::Approx(1e-10 * g.squaredNorm()).epsilon(1e-6));
  }
}

TEST_CASE("minimizer does not depend on the starting point") {
  std::mt19937_64 rng(52);
  auto p = oracle::uniform_problem(8, 3, 0.3, CostKind::kLog);
  BacktrackingOptions opts;
  opts.tol = 1e-12;
  const auto ref = minimize_backtracking(p, 0.7, Vector::Zero(8), opts);
  for (int trial = 0; trial < 5; ++trial) {
    const auto r = minimize_backtracking(p, 0.7, oracle::random_vector(rng, 8, 3.0), opts);
    CHECK((r.phi.values - ref.phi.values).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("iteration cap") {
  auto p = oracle::uniform_problem(8, 3, 0.3, CostKind::kLog);
  BacktrackingOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-14;
  CHECK_THROWS_AS(minimize_backtracking(p, 1.0, Vector::Zero(8), opts), MaxIterExceeded);
}

TEST_CASE("reference potential agrees with descent from zero") {
  auto p = oracle::uniform_problem(10, 3, 0.2, CostKind::kNegHarmonic);
  const auto ref = reference_potential(p, 0.9, 1e-12);
  CHECK(ref.report.residual <= 1e-12);
  CHECK(ref.phi.values(p.anchor) == 0.0);
  BacktrackingOptions opts;
  opts.tol = 1e-12;
  const auto cold = minimize_backtracking(p, 0.9, Vector::Zero(10), opts);
  CHECK((ref.phi.values - cold.phi.values).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(ref.report.iterations < cold.report.iterations);
}
