#pragma once

// Gaussian smoothing of |t| and the smoothed objective
//
//   H_{p,sigma}(x) = ||Ax - b||_2^2 + lambda sum_k phi_sigma(x_k)^p,
//   phi_sigma(t)   = (K_sigma * |.|)(t)
//                  = t erf(t / (sqrt(2) sigma)) + sqrt(2/pi) sigma exp(-t^2 / (2 sigma^2)),
//
// with its gradient, Hessian diagonal and Hessian-vector product.

#include "lpcg/functional.hpp"

#include <numbers>

namespace lpcg {

inline double erf(double t) { return std::erf(t); }

enum class SmoothVariant {
  plain,           // phi_sigma
  subtract_const,  // phi_sigma(t) - phi_sigma(0)
  subtract_gauss,  // phi_sigma(t) - sqrt(2/pi) sigma exp(-t^2)
  drop_term,       // t erf(t / (sqrt(2) sigma))
};

class SmoothAbs {
 public:
  static constexpr double min_sigma = 1e-10;

  explicit SmoothAbs(double sigma, SmoothVariant variant = SmoothVariant::plain)
      : sigma_(sigma), variant_(variant) {
    if (!(sigma >= min_sigma) || !std::isfinite(sigma))
      throw std::domain_error("SmoothAbs: sigma must be finite and >= 1e-10");
  }

  double sigma() const noexcept { return sigma_; }
  SmoothVariant variant() const noexcept { return variant_; }

 private:
  double sigma_;
  SmoothVariant variant_;
};

namespace detail {

inline constexpr double sqrt_2_over_pi = 0.79788456080286535588;  // sqrt(2/pi)

// exp(-e) for e >= 0, returning a clean 0 once the result would underflow.
inline double gauss(double e) { return e > 745.0 ? 0.0 : std::exp(-e); }

}  // namespace detail

inline double phi(double t, const SmoothAbs& s) {
  const double sg = s.sigma();
  const double u = t / (std::numbers::sqrt2 * sg);
  const double lin = t * std::erf(u);
  const double c = detail::sqrt_2_over_pi * sg;
  switch (s.variant()) {
    case SmoothVariant::plain:
      return lin + c * detail::gauss(u * u);
    case SmoothVariant::subtract_const:
      return lin + c * detail::gauss(u * u) - c;
    case SmoothVariant::subtract_gauss:
      return lin + c * detail::gauss(u * u) - c * detail::gauss(t * t);
    case SmoothVariant::drop_term:
      return lin;
  }
  return lin;
}

inline double phi_prime(double t, const SmoothAbs& s) {
  const double sg = s.sigma();
  const double u = t / (std::numbers::sqrt2 * sg);
  const double e = std::erf(u);
  switch (s.variant()) {
    case SmoothVariant::plain:
    case SmoothVariant::subtract_const:
      return e;
    case SmoothVariant::subtract_gauss:
      return e + detail::sqrt_2_over_pi * sg * 2.0 * t * detail::gauss(t * t);
    case SmoothVariant::drop_term:
      return e + t * detail::sqrt_2_over_pi / sg * detail::gauss(u * u);
  }
  return e;
}

inline double phi_second(double t, const SmoothAbs& s) {
  const double sg = s.sigma();
  const double u = t / (std::numbers::sqrt2 * sg);
  const double g = detail::sqrt_2_over_pi / sg * detail::gauss(u * u);
  switch (s.variant()) {
    case SmoothVariant::plain:
    case SmoothVariant::subtract_const:
      return g;
    case SmoothVariant::subtract_gauss:
      return g + detail::sqrt_2_over_pi * sg * (2.0 - 4.0 * t * t) * detail::gauss(t * t);
    case SmoothVariant::drop_term:
      return g * (2.0 - t * t / (sg * sg));
  }
  return g;
}

namespace detail {

inline double phi_pow(double f, double p) {
  if (p == 1.0) return f;
  if (p == 2.0) return f * f;
  return std::pow(f, p);
}

// d/dt phi(t)^p / p = phi^{p-1} phi'
inline double penalty_slope(double t, double p, const SmoothAbs& s) {
  const double d = phi_prime(t, s);
  if (p == 1.0) return d;
  return std::pow(phi(t, s), p - 1.0) * d;
}

// d^2/dt^2 phi(t)^p / p = (p-1) phi^{p-2} phi'^2 + phi^{p-1} phi''
inline double penalty_curvature(double t, double p, const SmoothAbs& s) {
  const double f = phi(t, s);
  const double d = phi_prime(t, s);
  double w = (p == 1.0 ? 1.0 : std::pow(f, p - 1.0)) * phi_second(t, s);
  if (p != 1.0 && d != 0.0) w += (p - 1.0) * std::pow(f, p - 2.0) * d * d;
  return w;
}

inline double smoothed_penalty_sum(const Vector& x, double p, const SmoothAbs& s) {
  double acc = 0.0;
  for (Index k = 0; k < x.size(); ++k) acc += phi_pow(phi(x[k], s), p);
  return acc;
}

}  // namespace detail

// H from a precomputed residual r = Ax - b.
inline double eval_H_residual(const Vector& r, const Vector& x, const Penalty& pen, const SmoothAbs& s) {
  return r.squaredNorm() + pen.lambda * detail::smoothed_penalty_sum(x, pen.p, s);
}

template <LinearOperator Op>
double eval_H(const Op& A, const Vector& b, const Vector& x, const Penalty& pen, const SmoothAbs& s) {
  detail::require_size(b.size(), A.rows(), "eval_H: b");
  return eval_H_residual(Vector(apply(A, x) - b), x, pen, s);
}

// sum_i |r_i|^l + lambda sum_k phi(x_k)^p, the generalized-l smoothed objective.
inline double eval_H_general_residual(const Vector& r, const Vector& x, const Penalty& pen, const SmoothAbs& s) {
  return lp_power_norm(r, pen.l) + pen.lambda * detail::smoothed_penalty_sum(x, pen.p, s);
}

// v(x)_j = phi(x_j)^{p-1} phi'(x_j)
inline Vector penalty_gradient_vector(const Vector& x, double p, const SmoothAbs& s) {
  Vector v(x.size());
  for (Index k = 0; k < x.size(); ++k) v[k] = detail::penalty_slope(x[k], p, s);
  return v;
}

// grad H = 2 A^T (Ax - b) + lambda p v(x)
template <LinearOperator Op>
Vector grad_H(const Op& A, const Vector& b, const Vector& x, const Penalty& pen, const SmoothAbs& s) {
  detail::require_size(b.size(), A.rows(), "grad_H: b");
  Vector g = apply_transpose(A, Vector(2.0 * (apply(A, x) - b)));
  g += pen.lambda * pen.p * penalty_gradient_vector(x, pen.p, s);
  return g;
}

// w(x)_j = (p-1) phi^{p-2} phi'^2 + phi^{p-1} phi'', so that
// hess H = 2 A^T A + lambda p diag(w(x)).
inline Vector hessian_penalty_diag(const Vector& x, const Penalty& pen, const SmoothAbs& s) {
  Vector w(x.size());
  for (Index k = 0; k < x.size(); ++k) w[k] = detail::penalty_curvature(x[k], pen.p, s);
  return w;
}

template <LinearOperator Op>
Vector apply_hessian(const Op& A, const Vector& x_point, const Penalty& pen, const SmoothAbs& s,
                     const Vector& dir) {
  detail::require_size(dir.size(), x_point.size(), "apply_hessian: dir");
  Vector h = apply_transpose(A, Vector(2.0 * apply(A, dir)));
  h.array() += pen.lambda * pen.p * hessian_penalty_diag(x_point, pen, s).array() * dir.array();
  return h;
}

// R_i = l max(|r_i|, eps_r)^{l-2}; at l = 2 this is 2 for every i.
inline Vector general_residual_weights(const Vector& r, double l, double eps_r) {
  Vector out(r.size());
  if (l == 2.0) return out.setConstant(2.0);
  for (Index i = 0; i < r.size(); ++i) out[i] = l * std::pow(std::max(std::abs(r[i]), eps_r), l - 2.0);
  return out;
}

// grad H_{l,p,sigma} = A^T R (Ax - b) + lambda p v(x)
template <LinearOperator Op>
Vector grad_H_general(const Op& A, const Vector& b, const Vector& x, const Penalty& pen, const SmoothAbs& s,
                      double eps_r) {
  if (!(eps_r > 0.0)) throw std::invalid_argument("grad_H_general: eps_r must be > 0");
  detail::require_size(b.size(), A.rows(), "grad_H_general: b");
  const Vector r = apply(A, x) - b;
  Vector g = apply_transpose(A, Vector(general_residual_weights(r, pen.l, eps_r).cwiseProduct(r)));
  g += pen.lambda * pen.p * penalty_gradient_vector(x, pen.p, s);
  return g;
}

}  // namespace lpcg
