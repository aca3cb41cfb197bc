#include "mmot/tensor.hpp"

#include <cmath>
#include <numeric>

namespace mmot {

DenseTensor::DenseTensor(Index n, int m, double budget) : n_(n), m_(m) {
  const double entries = std::pow(static_cast<double>(n), m);
  if (entries > budget) throw SizeGuardError(entries, budget);
  data_.assign(static_cast<std::size_t>(entries), 0.0);
}

std::size_t DenseTensor::flatten(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (int k = 0; k < m_; ++k) flat = flat * n_ + idx[k];
  return flat;
}

void DenseTensor::unflatten(std::size_t flat, std::span<int> idx) const {
  for (int k = m_ - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(flat % n_);
    flat /= n_;
  }
}

Vector DenseTensor::marginal(int k) const {
  Vector out = Vector::Zero(n_);
  std::vector<int> idx(m_);
  for (std::size_t f = 0; f < data_.size(); ++f) {
    unflatten(f, idx);
    out(idx[k]) += data_[f];
  }
  return out;
}

Matrix DenseTensor::pair_marginal(int i, int j) const {
  Matrix out = Matrix::Zero(n_, n_);
  std::vector<int> idx(m_);
  for (std::size_t f = 0; f < data_.size(); ++f) {
    unflatten(f, idx);
    out(idx[i], idx[j]) += data_[f];
  }
  return out;
}

double DenseTensor::total() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

}  // namespace mmot
