#pragma once

#include "mmot/common.hpp"

#include <span>
#include <vector>

namespace mmot {

/// Dense m-way tensor over [0, n)^m, row-major (last index fastest).
/// Only meant for small instances; construction enforces an entry budget.
class DenseTensor {
 public:
  DenseTensor(Index n, int m, double budget = 1e6);

  Index n() const { return n_; }
  int order() const { return m_; }
  std::size_t size() const { return data_.size(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }
  double& at(std::span<const int> idx) { return data_[flatten(idx)]; }
  double at(std::span<const int> idx) const { return data_[flatten(idx)]; }

  std::size_t flatten(std::span<const int> idx) const;
  /// Writes the multi-index of a flat position into idx (size m).
  void unflatten(std::size_t flat, std::span<int> idx) const;

  /// One-fold marginal along axis k.
  Vector marginal(int k) const;
  /// Two-fold marginal along axes (i, j), i != j.
  Matrix pair_marginal(int i, int j) const;
  double total() const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  Index n_;
  int m_;
  std::vector<double> data_;
};

}  // namespace mmot
