#include "mmot/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>
#include <vector>

namespace mmot {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::atomic<int> g_threads{0};

}  // namespace

SizeGuardError::SizeGuardError(double requested, double budget)
    : SolverError("size guard: enumeration of " + format_double(requested) +
                  " tuples exceeds budget " + format_double(budget)),
      requested_(requested),
      budget_(budget) {}

MaxIterExceeded::MaxIterExceeded(const std::string& who, long iterations,
                                 double residual)
    : SolverError(who + ": no convergence after " + std::to_string(iterations) +
                  " iterations (residual " + format_double(residual) + ")"),
      iterations_(iterations),
      residual_(residual) {}

NotSPDError::NotSPDError(double epsilon)
    : SolverError("reduced Hessian not positive definite at epsilon=" +
                  format_double(epsilon)),
      epsilon_(epsilon) {}

LineSearchStall::LineSearchStall(long iteration, double residual)
    : SolverError("line search stalled at iteration " +
                  std::to_string(iteration) + " (residual " +
                  format_double(residual) + ")") {}

BoundViolation::BoundViolation(double epsilon, double sup_norm, double bound)
    : SolverError("potential bound violated at epsilon=" +
                  format_double(epsilon) + ": |phi|_inf=" +
                  format_double(sup_norm) + " > " + format_double(bound)) {}

NonFiniteError::NonFiniteError(const std::string& who, double epsilon)
    : SolverError(who + ": non-finite value at epsilon=" + format_double(epsilon)) {}

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) return -std::numeric_limits<double>::infinity();
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

int num_threads() {
  int k = g_threads.load();
  if (k <= 0) {
    k = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  return k;
}

void set_num_threads(int k) { g_threads.store(std::max(1, k)); }

int parallel_blocks(Index n,
                    const std::function<void(Index, Index, int)>& body) {
  const int blocks =
      static_cast<int>(std::max<Index>(1, std::min<Index>(num_threads(), n)));
  if (blocks == 1) {
    body(0, n, 0);
    return 1;
  }
  std::vector<std::exception_ptr> failures(blocks);
  {
    std::vector<std::jthread> workers;
    workers.reserve(blocks);
    const Index chunk = (n + blocks - 1) / blocks;
    for (int b = 0; b < blocks; ++b) {
      const Index begin = std::min(n, b * chunk);
      const Index end = std::min(n, begin + chunk);
      workers.emplace_back([&body, &failures, begin, end, b] {
        try {
          body(begin, end, b);
        } catch (...) {
          failures[b] = std::current_exception();
        }
      });
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return blocks;
}

}  // namespace mmot
