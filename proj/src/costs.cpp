#include "mmot/costs.hpp"

#include <cmath>
#include <limits>

namespace mmot {

Grid::Grid(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 2) {
    throw std::invalid_argument("grid needs at least two points");
  }
  if (points_.cols() < 1) {
    throw std::invalid_argument("grid points need at least one coordinate");
  }
  if (!points_.allFinite()) {
    throw std::invalid_argument("grid points must be finite");
  }
  if (min_spacing() <= 0.0) {
    throw std::invalid_argument("grid points must be pairwise distinct");
  }
}

Grid Grid::uniform(Index n, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("grid domain must have hi > lo");
  Matrix pts(n, 1);
  const double step = (hi - lo) / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) pts(i, 0) = lo + (static_cast<double>(i) + 0.5) * step;
  return Grid(std::move(pts));
}

double Grid::distance(Index i, Index j) const {
  return (points_.row(i) - points_.row(j)).norm();
}

double Grid::min_spacing() const {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < size(); ++i) {
    for (Index j = i + 1; j < size(); ++j) best = std::min(best, distance(i, j));
  }
  return best;
}

DiscreteMarginal::DiscreteMarginal(Grid grid, Vector weights)
    : grid_(std::move(grid)), weights_(std::move(weights)) {
  if (weights_.size() != grid_.size()) {
    throw std::invalid_argument("marginal weights do not match grid size");
  }
  if (!(weights_.array() > 0.0).all() || !weights_.allFinite()) {
    throw std::invalid_argument("marginal weights must be finite and > 0");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("marginal weights must sum to 1");
  }
}

DiscreteMarginal DiscreteMarginal::uniform(Grid grid) {
  const Index n = grid.size();
  return DiscreteMarginal(std::move(grid),
                          Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

CostKind parse_cost_kind(const std::string& name) {
  if (name == "log") return CostKind::kLog;
  if (name == "neg_harmonic") return CostKind::kNegHarmonic;
  if (name == "coulomb_truncated") return CostKind::kCoulombTruncated;
  if (name == "squared_distance") return CostKind::kSquaredDistance;
  throw std::invalid_argument("unknown cost kind '" + name + "'");
}

std::string to_string(CostKind kind) {
  switch (kind) {
    case CostKind::kLog: return "log";
    case CostKind::kNegHarmonic: return "neg_harmonic";
    case CostKind::kCoulombTruncated: return "coulomb_truncated";
    case CostKind::kSquaredDistance: return "squared_distance";
  }
  return "unknown";
}

double cost_bound(const Matrix& W, int m) {
  const double sup = W.cwiseAbs().maxCoeff();
  const double pairs_to_first = m - 1;
  const double inner_pairs = 0.5 * (m - 1) * (m - 2);
  return (pairs_to_first + inner_pairs) * sup;
}

CostBundle make_cost_bundle(Matrix W, int m) {
  if (W.rows() != W.cols() || W.rows() < 2) {
    throw std::invalid_argument("cost matrix must be square with N >= 2");
  }
  if (!W.allFinite()) throw std::invalid_argument("cost matrix has a non-finite entry");
  if ((W - W.transpose()).cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("cost matrix must be symmetric");
  }
  if (m < 2) throw std::invalid_argument("need at least two marginals");
  CostBundle bundle;
  bundle.M = cost_bound(W, m);
  bundle.W = std::move(W);
  bundle.m = m;
  return bundle;
}

CostBundle build_cost_matrix(const Grid& grid, CostKind kind,
                             const CostParams& params, int m) {
  CostParams resolved = params;
  if (kind == CostKind::kLog && !(params.log_offset > 0.0)) {
    throw std::invalid_argument("log cost offset must be > 0");
  }
  if (kind == CostKind::kCoulombTruncated) {
    if (!resolved.coulomb_cap) resolved.coulomb_cap = 10.0 / grid.min_spacing();
    if (!(*resolved.coulomb_cap > 0.0)) {
      throw std::invalid_argument("Coulomb truncation cap must be > 0");
    }
  }

  const Index n = grid.size();
  Matrix W(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      const double r = grid.distance(i, j);
      double w = 0.0;
      switch (kind) {
        case CostKind::kLog: w = -std::log(resolved.log_offset + r); break;
        case CostKind::kNegHarmonic: w = -r * r; break;
        case CostKind::kCoulombTruncated:
          w = r > 0.0 ? std::min(1.0 / r, *resolved.coulomb_cap) : *resolved.coulomb_cap;
          break;
        case CostKind::kSquaredDistance: w = r * r; break;
      }
      W(i, j) = w;
      W(j, i) = w;
    }
  }
  if (!W.allFinite()) {
    throw std::invalid_argument("cost matrix has a non-finite entry; check parameters");
  }
  CostBundle bundle = make_cost_bundle(std::move(W), m);
  bundle.kind = kind;
  bundle.params = resolved;
  return bundle;
}

EpsilonCost epsilon_cost(const CostBundle& bundle, std::span<const int> indices,
                         double eps) {
  const auto m = indices.size();
  if (m != static_cast<std::size_t>(bundle.m)) {
    throw std::invalid_argument("index tuple length must equal m");
  }
  for (int k : indices) {
    if (k < 0 || k >= bundle.size()) throw std::out_of_range("grid index out of range");
  }
  double star = 0.0;
  double inner = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    star += bundle.W(indices[0], indices[i]);
    for (std::size_t j = i + 1; j < m; ++j) inner += bundle.W(indices[i], indices[j]);
  }
  return {star + eps * inner, inner};
}

}  // namespace mmot
