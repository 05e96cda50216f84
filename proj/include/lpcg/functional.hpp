#pragma once

// F_{l,p}(x) = ||Ax - b||_l^l + lambda ||x||_p^p, lp norms and the
// sparsifying operators (soft/hard threshold, optimality pruning).

#include "lpcg/linop.hpp"

#include <string>

namespace lpcg {

// Weights of the two-parameter objective. l shapes the residual penalty, p the
// solution penalty. Exponents below 1 make the problem non-convex and are only
// accepted with allow_nonconvex set.
struct Penalty {
  double lambda = 0.0;
  double l = 2.0;
  double p = 1.0;
  bool allow_nonconvex = false;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("Penalty: lambda must be finite and >= 0");
    const double lo = allow_nonconvex ? 0.0 : 1.0;
    auto check = [&](double e, const char* name) {
      const bool ok = allow_nonconvex ? (e > lo && e <= 2.0) : (e >= lo && e <= 2.0);
      if (!ok)
        throw std::invalid_argument(std::string("Penalty: ") + name + " must lie in " +
                                    (allow_nonconvex ? "(0, 2]" : "[1, 2]"));
    };
    check(l, "l");
    check(p, "p");
  }
};

// sum_k |x_k|^p (the p-th power of the lp norm).
inline double lp_power_norm(const Vector& x, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("lp_power_norm: p must be positive");
  double s = 0.0;
  if (p == 2.0) return x.squaredNorm();
  if (p == 1.0) return x.cwiseAbs().sum();
  for (Index k = 0; k < x.size(); ++k) s += std::pow(std::abs(x[k]), p);
  return s;
}

// (sum_k |x_k|^p)^{1/p}.
inline double lp_norm(const Vector& x, double p) {
  const double s = lp_power_norm(x, p);
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

template <LinearOperator Op>
double eval_flp(const Op& A, const Vector& b, const Vector& x, const Penalty& pen) {
  detail::require_size(b.size(), A.rows(), "eval_flp: b");
  const Vector r = apply(A, x) - b;
  return lp_power_norm(r, pen.l) + pen.lambda * lp_power_norm(x, pen.p);
}

// Same value from a precomputed residual r = Ax - b.
inline double eval_flp_residual(const Vector& r, const Vector& x, const Penalty& pen) {
  return lp_power_norm(r, pen.l) + pen.lambda * lp_power_norm(x, pen.p);
}

// Componentwise sgn(x_k) max(0, |x_k| - tau). |x_k| == tau maps to 0.
inline Vector soft_threshold(const Vector& x, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  Vector y(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    const double a = std::abs(x[k]);
    y[k] = a > tau ? detail::sign(x[k]) * (a - tau) : 0.0;
  }
  return y;
}

// Keeps x_k when |x_k| > tau, else 0.
inline Vector hard_threshold(const Vector& x, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("hard_threshold: tau must be >= 0");
  Vector y(x.size());
  for (Index k = 0; k < x.size(); ++k) y[k] = std::abs(x[k]) > tau ? x[k] : 0.0;
  return y;
}

// Zeroes x_k wherever |v_k| <= lambda/2 for v = A^T (b - A x), the l1
// optimality test for ||Ax - b||_2^2 + lambda ||x||_1.
template <LinearOperator Op>
Vector optimality_prune(const Vector& x, const Op& A, const Vector& b, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("optimality_prune: lambda must be > 0");
  detail::require_size(b.size(), A.rows(), "optimality_prune: b");
  const Vector v = apply_transpose(A, Vector(b - apply(A, x)));
  Vector y = x;
  const double cut = 0.5 * lambda;
  for (Index k = 0; k < y.size(); ++k)
    if (std::abs(v[k]) <= cut) y[k] = 0.0;
  return y;
}

}  // namespace lpcg
