#pragma once

// Linear operators (dense, compressed-row sparse, type-erased, scaled), the
// conjugate-gradient inner solver and power-iteration norm estimation.

#include "lpcg/core.hpp"

#include <algorithm>
#include <concepts>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <type_traits>
#include <utility>
#include <vector>

namespace lpcg {

// Anything that can apply A and A^T with known dimensions. Implementations
// check operand lengths and throw DimensionError on mismatch.
template <class T>
concept LinearOperator = requires(const T& op, const Vector& v) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.cols() } -> std::convertible_to<Index>;
  { op.apply(v) } -> std::convertible_to<Vector>;
  { op.apply_transpose(v) } -> std::convertible_to<Vector>;
};

template <LinearOperator Op>
Vector apply(const Op& op, const Vector& x) {
  detail::require_size(x.size(), op.cols(), "apply");
  return op.apply(x);
}

template <LinearOperator Op>
Vector apply_transpose(const Op& op, const Vector& y) {
  detail::require_size(y.size(), op.rows(), "apply_transpose");
  return op.apply_transpose(y);
}

// Row-major contiguous dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseMatrix(Index rows, Index cols, std::vector<double> row_major)
      : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    detail::require_size(static_cast<Index>(data_.size()), rows * cols, "DenseMatrix storage");
  }
  explicit DenseMatrix(const Eigen::MatrixXd& m) : DenseMatrix(m.rows(), m.cols()) {
    for (Index i = 0; i < rows_; ++i)
      for (Index j = 0; j < cols_; ++j) (*this)(i, j) = m(i, j);
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  double& operator()(Index i, Index j) { return data_[i * cols_ + j]; }
  double operator()(Index i, Index j) const { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const noexcept { return data_; }

  Vector apply(const Vector& x) const {
    detail::require_size(x.size(), cols_, "DenseMatrix::apply");
    Vector y(rows_);
    const double* a = data_.data();
    for (Index i = 0; i < rows_; ++i) {
      const double* row = a + i * cols_;
      double sum = 0.0;
      for (Index j = 0; j < cols_; ++j) sum += row[j] * x[j];
      y[i] = sum;
    }
    return y;
  }

  Vector apply_transpose(const Vector& y) const {
    detail::require_size(y.size(), rows_, "DenseMatrix::apply_transpose");
    Vector x = Vector::Zero(cols_);
    const double* a = data_.data();
    for (Index i = 0; i < rows_; ++i) {
      const double* row = a + i * cols_;
      const double yi = y[i];
      for (Index j = 0; j < cols_; ++j) x[j] += row[j] * yi;
    }
    return x;
  }

  Eigen::MatrixXd to_eigen() const {
    Eigen::MatrixXd m(rows_, cols_);
    for (Index i = 0; i < rows_; ++i)
      for (Index j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  static DenseMatrix identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

// Compressed-row sparse matrix. Column indices are sorted within each row and
// duplicate (row, col) triplets are summed on construction, so products
// accumulate in the same order as DenseMatrix and agree with it bit for bit.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(Index rows, Index cols, std::vector<Triplet> triplets) : rows_(rows), cols_(cols) {
    for (const auto& t : triplets) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw std::out_of_range("CsrMatrix: triplet index out of range");
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    row_ptr_.assign(rows + 1, 0);
    for (std::size_t k = 0; k < triplets.size(); ++k) {
      const auto& t = triplets[k];
      if (!col_idx_.empty() && k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
        values_.back() += t.value;
        continue;
      }
      col_idx_.push_back(t.col);
      values_.push_back(t.value);
      ++row_ptr_[t.row + 1];
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  }

  static CsrMatrix from_dense(const DenseMatrix& d) {
    std::vector<Triplet> t;
    for (Index i = 0; i < d.rows(); ++i)
      for (Index j = 0; j < d.cols(); ++j)
        if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
    return CsrMatrix(d.rows(), d.cols(), std::move(t));
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nonzeros() const noexcept { return static_cast<Index>(values_.size()); }

  const std::vector<Index>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<Index>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double row_sum(Index i) const {
    double s = 0.0;
    for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k];
    return s;
  }

  Vector apply(const Vector& x) const {
    detail::require_size(x.size(), cols_, "CsrMatrix::apply");
    Vector y(rows_);
    for (Index i = 0; i < rows_; ++i) {
      double sum = 0.0;
      for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) sum += values_[k] * x[col_idx_[k]];
      y[i] = sum;
    }
    return y;
  }

  Vector apply_transpose(const Vector& y) const {
    detail::require_size(y.size(), rows_, "CsrMatrix::apply_transpose");
    Vector x = Vector::Zero(cols_);
    for (Index i = 0; i < rows_; ++i) {
      const double yi = y[i];
      for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) x[col_idx_[k]] += values_[k] * yi;
    }
    return x;
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (Index i = 0; i < rows_; ++i)
      for (Index k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) = values_[k];
    return d;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

// Type-erased, shareable operator handle. Copies share the same immutable
// underlying operator.
class Operator {
 public:
  Operator() = default;

  template <LinearOperator Op>
    requires(!std::same_as<std::remove_cvref_t<Op>, Operator>)
  explicit Operator(Op op) : self_(std::make_shared<Model<Op>>(std::move(op))) {}

  Index rows() const { return self_->rows(); }
  Index cols() const { return self_->cols(); }
  Vector apply(const Vector& x) const {
    detail::require_size(x.size(), cols(), "Operator::apply");
    return self_->apply(x);
  }
  Vector apply_transpose(const Vector& y) const {
    detail::require_size(y.size(), rows(), "Operator::apply_transpose");
    return self_->apply_transpose(y);
  }

  explicit operator bool() const noexcept { return static_cast<bool>(self_); }

 private:
  struct Concept {
    virtual ~Concept() = default;
    virtual Index rows() const = 0;
    virtual Index cols() const = 0;
    virtual Vector apply(const Vector&) const = 0;
    virtual Vector apply_transpose(const Vector&) const = 0;
  };
  template <class Op>
  struct Model final : Concept {
    explicit Model(Op o) : op(std::move(o)) {}
    Index rows() const override { return op.rows(); }
    Index cols() const override { return op.cols(); }
    Vector apply(const Vector& x) const override { return op.apply(x); }
    Vector apply_transpose(const Vector& y) const override { return op.apply_transpose(y); }
    Op op;
  };

  std::shared_ptr<const Concept> self_;
};

// x -> scale * A x. Holds the wrapped operator by value.
template <LinearOperator Op>
class ScaledOperator {
 public:
  ScaledOperator(Op op, double scale) : op_(std::move(op)), scale_(scale) {}

  Index rows() const { return op_.rows(); }
  Index cols() const { return op_.cols(); }
  double scale() const noexcept { return scale_; }
  Vector apply(const Vector& x) const { return scale_ * op_.apply(x); }
  Vector apply_transpose(const Vector& y) const { return scale_ * op_.apply_transpose(y); }

 private:
  Op op_;
  double scale_;
};

// Non-owning view; lets templated solvers wrap an operator without copying.
template <LinearOperator Op>
class OperatorRef {
 public:
  explicit OperatorRef(const Op& op) : op_(&op) {}
  Index rows() const { return op_->rows(); }
  Index cols() const { return op_->cols(); }
  Vector apply(const Vector& x) const { return op_->apply(x); }
  Vector apply_transpose(const Vector& y) const { return op_->apply_transpose(y); }

 private:
  const Op* op_;
};

// Symmetric positive-definite system M x = rhs, with M applied matrix-free.
struct SpdSystem {
  std::function<Vector(const Vector&)> apply;
  Vector rhs;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  // ||M x - rhs|| / ||rhs|| from the CG residual recurrence (||M x - rhs|| when
  // rhs = 0).
  double relres = 0.0;
};

// Plain (unpreconditioned) conjugate gradients from x0. Stops after max_iter
// steps or once the relative residual drops to tol. Throws CgBreakdown when a
// search direction has non-positive curvature.
inline CgResult cg_solve(const SpdSystem& sys, const Vector& x0, int max_iter, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("cg_solve: tol must be positive");
  detail::require_size(x0.size(), sys.rhs.size(), "cg_solve initial guess");

  CgResult out;
  out.x = x0;
  const double rhs_norm = sys.rhs.norm();
  const double scale = rhs_norm > 0.0 ? rhs_norm : 1.0;

  Vector r = sys.rhs - sys.apply(out.x);
  double rr = r.squaredNorm();
  out.relres = std::sqrt(rr) / scale;
  if (out.relres <= tol || rr == 0.0) return out;

  Vector p = r;
  for (int k = 0; k < max_iter; ++k) {
    const Vector mp = sys.apply(p);
    const double curvature = p.dot(mp);
    if (!(curvature > 0.0)) throw CgBreakdown(k, curvature);
    const double step = rr / curvature;
    out.x.noalias() += step * p;
    r.noalias() -= step * mp;
    const double rr_new = r.squaredNorm();
    out.iterations = k + 1;
    out.relres = std::sqrt(rr_new) / scale;
    if (out.relres <= tol || rr_new == 0.0) break;
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return out;
}

// Power iteration on A^T A from a seeded Gaussian start; returns ||A v|| for
// the final unit iterate v, an estimate of the largest singular value.
template <LinearOperator Op>
double spectral_norm_estimate(const Op& op, int iters, std::uint64_t seed = 0) {
  if (iters < 1) throw std::invalid_argument("spectral_norm_estimate: iters must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(op.cols());
  for (Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
  double nv = v.norm();
  if (nv == 0.0) return 0.0;
  v /= nv;
  for (int it = 0; it < iters; ++it) {
    Vector u = op.apply_transpose(op.apply(v));
    const double nu = u.norm();
    if (nu == 0.0) return 0.0;
    v = u / nu;
  }
  return op.apply(v).norm();
}

}  // namespace lpcg
