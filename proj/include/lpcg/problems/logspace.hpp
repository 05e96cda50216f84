#pragma once

// Dense test matrices A = U diag(s) V^T with prescribed singular values.

#include "lpcg/linop.hpp"

#include <cstdint>
#include <random>

namespace lpcg::problems {

// k = min(m, n) values 10^e, e running linearly from exp_hi to exp_lo.
inline Vector logspace(double exp_hi, double exp_lo, Index k) {
  if (k < 1) throw std::invalid_argument("logspace: need at least one value");
  Vector s(k);
  for (Index i = 0; i < k; ++i) {
    const double e = k == 1 ? exp_hi : exp_hi + (exp_lo - exp_hi) * static_cast<double>(i) / static_cast<double>(k - 1);
    s[i] = std::pow(10.0, e);
  }
  return s;
}

// Orthonormal columns from the QR factorization of a seeded Gaussian matrix.
inline Eigen::MatrixXd random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

inline DenseMatrix logspace_matrix(Index m, Index n, double exp_hi, double exp_lo, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("logspace_matrix: dimensions must be >= 1");
  const Index k = std::min(m, n);
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd u = random_orthonormal(m, k, rng);
  const Eigen::MatrixXd v = random_orthonormal(n, k, rng);
  const Vector s = logspace(exp_hi, exp_lo, k);
  return DenseMatrix(Eigen::MatrixXd(u * s.asDiagonal() * v.transpose()));
}

// Vector with `nonzeros` N(0, 1) entries at uniformly chosen positions.
inline Vector sparse_vector(Index n, Index nonzeros, std::uint64_t seed) {
  if (nonzeros < 0 || nonzeros > n) throw std::invalid_argument("sparse_vector: need 0 <= nonzeros <= n");
  std::mt19937_64 rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x = Vector::Zero(n);
  for (Index k = 0; k < nonzeros; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    x[idx[static_cast<std::size_t>(k)]] = normal(rng);
  }
  return x;
}

}  // namespace lpcg::problems
