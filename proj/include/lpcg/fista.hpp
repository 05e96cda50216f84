#pragma once

// Soft-thresholded Landweber iteration (ISTA) and its accelerated variant
// (FISTA) for ||Ax - b||_2^2 + lambda ||x||_1.

#include "lpcg/functional.hpp"
#include "lpcg/trace.hpp"

#include <optional>

namespace lpcg {

struct FistaConfig {
  double lambda = 0.0;
  int iters = 100;
  double step_scale = 1.0;          // step = step_scale / L
  std::optional<double> lipschitz;  // L = 2 ||A||^2; estimated when absent
  int power_iters = 100;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("FistaConfig: lambda must be >= 0");
    if (iters < 1) throw std::invalid_argument("FistaConfig: iters must be >= 1");
    if (!(step_scale > 0.0 && step_scale <= 1.0))
      throw std::invalid_argument("FistaConfig: step_scale must lie in (0, 1]");
    if (lipschitz && !(*lipschitz > 0.0)) throw std::invalid_argument("FistaConfig: lipschitz must be > 0");
    if (power_iters < 1) throw std::invalid_argument("FistaConfig: power_iters must be >= 1");
  }
};

struct FistaResult {
  Vector x;
  SolveTrace trace;
};

// S_{lambda step}(x - 2 step A^T (Ax - b)).
template <LinearOperator Op>
Vector ista_step(const Op& A, const Vector& b, const Vector& x, double lambda, double step) {
  detail::require_size(b.size(), A.rows(), "ista_step: b");
  const Vector g = apply_transpose(A, Vector(apply(A, x) - b));
  return soft_threshold(Vector(x - (2.0 * step) * g), lambda * step);
}

namespace detail {

template <LinearOperator Op>
double fista_step_size(const Op& A, const FistaConfig& cfg) {
  double L = 0.0;
  if (cfg.lipschitz) {
    L = *cfg.lipschitz;
  } else {
    const double s = spectral_norm_estimate(A, cfg.power_iters, 0);
    L = 2.0 * s * s;
  }
  // A = 0: any step is exact; 1/2 matches the unit-norm case.
  return L > 0.0 ? cfg.step_scale / L : 0.5;
}

}  // namespace detail

// Plain ISTA with step 1/L, recorded for comparison runs.
template <LinearOperator Op>
FistaResult ista_solve(const Op& A, const Vector& b, const FistaConfig& cfg, const Vector& x0) {
  cfg.validate();
  detail::require_size(x0.size(), A.cols(), "ista_solve: x0");
  const double step = detail::fista_step_size(A, cfg);
  const Penalty pen{cfg.lambda, 2.0, 1.0};
  FistaResult out;
  out.x = x0;
  for (int k = 1; k <= cfg.iters; ++k) {
    out.x = ista_step(A, b, out.x, cfg.lambda, step);
    out.trace.push(make_record(k, Vector(apply(A, out.x) - b), out.x, pen));
  }
  return out;
}

template <LinearOperator Op>
FistaResult fista_solve(const Op& A, const Vector& b, const FistaConfig& cfg, const Vector& x0) {
  cfg.validate();
  detail::require_size(x0.size(), A.cols(), "fista_solve: x0");
  const double step = detail::fista_step_size(A, cfg);
  const Penalty pen{cfg.lambda, 2.0, 1.0};

  FistaResult out;
  Vector x = x0;
  Vector y = x0;
  double t = 1.0;
  for (int k = 1; k <= cfg.iters; ++k) {
    Vector x_new = ista_step(A, b, y, cfg.lambda, step);
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    x = std::move(x_new);
    t = t_new;
    TraceRecord rec = make_record(k, Vector(apply(A, x) - b), x, pen);
    if (!std::isfinite(rec.F)) throw SolverError("fista_solve: non-finite objective", k);
    out.trace.push(rec);
  }
  out.x = std::move(x);
  return out;
}

}  // namespace lpcg
