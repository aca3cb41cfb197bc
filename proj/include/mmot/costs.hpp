#pragma once

#include "mmot/common.hpp"

#include <optional>
#include <span>
#include <string>

namespace mmot {

/// Finite support: N distinct points in R^d, stored row-wise.
class Grid {
 public:
  explicit Grid(Matrix points);

  /// Cell-centred uniform grid on [lo, hi]: x_i = lo + (i + 1/2)(hi - lo)/n.
  static Grid uniform(Index n, double lo = 0.0, double hi = 1.0);

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  double distance(Index i, Index j) const;
  /// First coordinate of point i (the only one used by d=1 outputs).
  double coordinate(Index i) const { return points_(i, 0); }
  double min_spacing() const;

 private:
  Matrix points_;
};

/// Strictly positive probability weights on a grid.
class DiscreteMarginal {
 public:
  DiscreteMarginal(Grid grid, Vector weights);
  static DiscreteMarginal uniform(Grid grid);

  const Grid& grid() const { return grid_; }
  const Vector& weights() const { return weights_; }
  Index size() const { return weights_.size(); }

 private:
  Grid grid_;
  Vector weights_;
};

enum class CostKind { kLog, kNegHarmonic, kCoulombTruncated, kSquaredDistance };

CostKind parse_cost_kind(const std::string& name);
std::string to_string(CostKind kind);

struct CostParams {
  double log_offset = 0.1;               // a in -log(a + |x-y|)
  std::optional<double> coulomb_cap;     // defaults to 10 / min spacing
};

/// Pairwise interaction matrix W together with the sup-norm bound M on the
/// epsilon-interpolated m-marginal cost.
struct CostBundle {
  CostKind kind = CostKind::kLog;
  CostParams params;
  Matrix W;
  double M = 0.0;
  int m = 3;

  Index size() const { return W.rows(); }
};

/// Builds W[i][j] = w(x_i, x_j) for the requested family. Throws
/// std::invalid_argument for bad parameters or a non-finite entry.
CostBundle build_cost_matrix(const Grid& grid, CostKind kind,
                             const CostParams& params, int m);

/// Wraps an arbitrary symmetric finite W (used for random test instances).
CostBundle make_cost_bundle(Matrix W, int m);

/// Sup-norm bound valid for all epsilon in [0, 1]:
/// (m-1)|W| + (m-1)(m-2)/2 |W|.
double cost_bound(const Matrix& W, int m);

struct EpsilonCost {
  double value = 0.0;
  double d_eps = 0.0;
};

/// c_eps(x^1..x^m) = eps * sum_{2<=i<j} W[x^i][x^j] + sum_{i>=2} W[x^1][x^i],
/// and its (constant) epsilon derivative.
EpsilonCost epsilon_cost(const CostBundle& bundle, std::span<const int> indices,
                         double eps);

}  // namespace mmot
