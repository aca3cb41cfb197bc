#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace mmot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors. Every solver failure derives from SolverError so the CLI can map it
// to a single exit code; argument validation uses std::invalid_argument.

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Brute-force enumeration would exceed the configured tuple budget.
class SizeGuardError : public SolverError {
 public:
  SizeGuardError(double requested, double budget);
  double requested() const { return requested_; }
  double budget() const { return budget_; }

 private:
  double requested_;
  double budget_;
};

class MaxIterExceeded : public SolverError {
 public:
  MaxIterExceeded(const std::string& who, long iterations, double residual);
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  long iterations_;
  double residual_;
};

/// The reduced Hessian failed to factor: the trajectory left the region where
/// the continuation ODE is well posed.
class NotSPDError : public SolverError {
 public:
  explicit NotSPDError(double epsilon);
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
};

class LineSearchStall : public SolverError {
 public:
  LineSearchStall(long iteration, double residual);
};

/// A trajectory point violated the a-priori sup-norm bound on the potential.
class BoundViolation : public SolverError {
 public:
  BoundViolation(double epsilon, double sup_norm, double bound);
};

/// A solver produced NaN or inf, typically from exp overflow in the Gibbs sums.
class NonFiniteError : public SolverError {
 public:
  NonFiniteError(const std::string& who, double epsilon);
};

class NegativeEntry : public SolverError {
 public:
  using SolverError::SolverError;
};

// ---------------------------------------------------------------------------
// Numerics helpers.

/// log(sum(exp(v))) with max subtraction; -inf for an all -inf input.
double log_sum_exp(const Eigen::Ref<const Vector>& v);

/// Number of worker threads used by the parallel loops (>= 1).
int num_threads();
void set_num_threads(int k);

/// Splits [0, n) into num_threads() contiguous blocks and runs
/// body(begin, end, block) on each. Block b always covers the same range for a
/// fixed thread count, so block-ordered reductions are reproducible.
int parallel_blocks(Index n,
                    const std::function<void(Index, Index, int)>& body);

}  // namespace mmot
