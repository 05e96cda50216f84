#pragma once

// Nonlinear conjugate gradients on the smoothed objective H_{p,sigma}
// (CONV CG): Polak-Ribiere+ directions, a second-order Taylor line search,
// per-iteration thresholding and a decaying smoothing width sigma.
//
// For l != 2 the residual term sum |r_i|^l is handled with the reweighted
// gradient A^T R (Ax - b), R_i = l max(|r_i|, eps_r)^{l-2}, and the line search
// uses the Gauss-Newton curvature s^T A^T R A s in place of the exact Hessian.

#include "lpcg/mollifier.hpp"
#include "lpcg/trace.hpp"

#include <functional>
#include <optional>

namespace lpcg {

enum class ThresholdMode { soft, hard, optimality, none };
enum class SigmaMode { geometric, distance_tied };
enum class LineSearch { taylor, backtracking };

struct ConvCgConfig {
  Penalty pen{};
  std::optional<double> tau;                    // threshold level; see effective_tau()
  // Iteration n thresholds at min(tau, tau_sigma_ratio * sigma_n); nullopt
  // thresholds at tau throughout. Thresholding at a fixed lambda/2 on top of
  // the smoothed penalty gradient shrinks twice, so the fixed point of the
  // orthogonal case drifts to S_{lambda/2 + tau} and large-norm operators stall at 0.
  std::optional<double> tau_sigma_ratio = 0.25;
  double sigma0 = 0.1;
  double alpha = 0.8;
  int iters = 50;                               // N
  std::optional<ThresholdMode> threshold_mode;  // see effective_threshold_mode()
  SigmaMode sigma_mode = SigmaMode::geometric;
  double sigma_floor = 1e-6;
  LineSearch line_search = LineSearch::taylor;
  int prune_cadence = 1;                        // optimality mode: prune every k-th iteration
  double eps_residual = 1e-6;                   // l != 2 only
  SmoothVariant variant = SmoothVariant::plain;
  // p = 1 only: coordinates that are exactly 0 and satisfy |(grad data)_j| <= lambda
  // get a zero search component. The smoothed penalty has zero slope at 0, so
  // without this every thresholded coordinate is pushed off 0 into the region of
  // curvature ~lambda/sigma, which caps the Taylor step for all coordinates.
  bool freeze_zeros = true;

  // soft for p = 1, hard for p < 1, none for p > 1.
  ThresholdMode effective_threshold_mode() const {
    if (threshold_mode) return *threshold_mode;
    if (pen.p < 1.0) return ThresholdMode::hard;
    if (pen.p == 1.0) return ThresholdMode::soft;
    return ThresholdMode::none;
  }

  double effective_tau() const { return tau.value_or(default_tau()); }

  double default_tau() const { return 0.5 * pen.lambda; }

  void validate() const {
    pen.validate();
    if (!(sigma0 >= SmoothAbs::min_sigma)) throw std::invalid_argument("ConvCgConfig: sigma0 must be >= 1e-10");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ConvCgConfig: alpha must lie in (0, 1)");
    if (!(sigma_floor >= SmoothAbs::min_sigma && sigma_floor <= sigma0))
      throw std::invalid_argument("ConvCgConfig: need 1e-10 <= sigma_floor <= sigma0");
    if (iters < 0) throw std::invalid_argument("ConvCgConfig: iters must be >= 0");
    if (prune_cadence < 1) throw std::invalid_argument("ConvCgConfig: prune_cadence must be >= 1");
    if (!(eps_residual > 0.0)) throw std::invalid_argument("ConvCgConfig: eps_residual must be > 0");
    if (!(effective_tau() >= 0.0)) throw std::invalid_argument("ConvCgConfig: tau must be >= 0");
    if (tau_sigma_ratio && !(*tau_sigma_ratio > 0.0))
      throw std::invalid_argument("ConvCgConfig: tau_sigma_ratio must be > 0");
  }
};

struct ConvCgResult {
  Vector x;
  SolveTrace trace;
  double sigma = 0.0;  // smoothing width the next iteration would use
};

// Polak-Ribiere+ coefficient. nullopt when g_old = 0 (converged).
inline std::optional<double> pr_beta(const Vector& g_new, const Vector& g_old) {
  detail::require_size(g_new.size(), g_old.size(), "pr_beta");
  const double den = g_old.squaredNorm();
  if (den == 0.0) return std::nullopt;
  return std::max(g_new.dot(g_new - g_old) / den, 0.0);
}

inline double sigma_update(double sigma, const ConvCgConfig& cfg, double step_dist) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma_update: sigma must be > 0");
  const double next = cfg.sigma_mode == SigmaMode::geometric ? cfg.alpha * sigma
                                                             : std::min(cfg.sigma0, cfg.alpha * step_dist);
  return std::max(next, cfg.sigma_floor);
}

using HessianApply = std::function<Vector(const Vector&)>;
// mu -> H(x + mu s)
using LineObjective = std::function<double(double)>;

namespace detail {

inline constexpr int max_halvings = 30;
inline constexpr double armijo_c = 1e-4;

// Halve mu from 1 until H(x + mu s) <= H(x) - c mu |g^T s|; 0 if that never happens.
inline double backtracking_mu(double gs, double h0, const LineObjective& along) {
  double mu = 1.0;
  for (int k = 0; k <= max_halvings; ++k, mu *= 0.5)
    if (along(mu) <= h0 - armijo_c * mu * std::abs(gs)) return mu;
  return 0.0;
}

}  // namespace detail

// mu = -(g^T s) / (s^T hess s). Falls back to backtracking (which needs
// `along`) when the curvature is <= 1e-14 ||s||^2.
inline double line_search_mu(const Vector& g, const Vector& s, const HessianApply& hess,
                             const LineObjective& along = {}) {
  detail::require_size(s.size(), g.size(), "line_search_mu");
  const double ss = s.squaredNorm();
  if (ss == 0.0) throw std::invalid_argument("line_search_mu: zero search direction");
  const double gs = g.dot(s);
  const double curv = s.dot(hess(s));
  if (curv > 1e-14 * ss) return -gs / curv;
  if (!along) throw std::invalid_argument("line_search_mu: non-positive curvature and no objective for backtracking");
  return detail::backtracking_mu(gs, along(0.0), along);
}

namespace detail {

struct ResidualTerm {
  double l;
  double eps_r;

  Vector weights(const Vector& r) const { return general_residual_weights(r, l, eps_r); }
  double value(const Vector& r) const { return l == 2.0 ? r.squaredNorm() : lp_power_norm(r, l); }
};

template <LinearOperator Op>
Vector apply_threshold(const Vector& z, ThresholdMode mode, double tau, const Op& A, const Vector& b,
                       double lambda, bool prune_now) {
  switch (mode) {
    case ThresholdMode::soft:
      return soft_threshold(z, tau);
    case ThresholdMode::hard:
      return hard_threshold(z, tau);
    case ThresholdMode::optimality:
      return prune_now && lambda > 0.0 ? optimality_prune(z, A, b, lambda) : z;
    case ThresholdMode::none:
      return z;
  }
  return z;
}

// Zeroes g_j where x_j = 0 and 0 lies in the subdifferential of lambda |x_j|.
inline void freeze_optimal_zeros(Vector& g, const Vector& x, const Vector& data_grad, double lambda) {
  for (Index j = 0; j < g.size(); ++j)
    if (x[j] == 0.0 && std::abs(data_grad[j]) <= lambda) g[j] = 0.0;
}

template <LinearOperator Op>
ConvCgResult conv_cg_run(const Op& A, const Vector& b, const ConvCgConfig& cfg, const Vector& x0, bool steepest) {
  cfg.validate();
  detail::require_size(b.size(), A.rows(), "conv_cg_solve: b");
  detail::require_size(x0.size(), A.cols(), "conv_cg_solve: x0");

  const Penalty& pen = cfg.pen;
  const double lp = pen.lambda * pen.p;
  const ThresholdMode mode = cfg.effective_threshold_mode();
  const double tau = cfg.effective_tau();
  const ResidualTerm data{pen.l, cfg.eps_residual};

  ConvCgResult out;
  double sigma = cfg.sigma0;
  Vector x = x0;
  Vector r = A.apply(x) - b;
  Vector R = data.weights(r);
  Vector data_grad = A.apply_transpose(Vector(R.cwiseProduct(r)));
  Vector s;
  const bool freeze = cfg.freeze_zeros && pen.p == 1.0 && mode != ThresholdMode::none;

  for (int n = 0; n < cfg.iters; ++n) {
    const SmoothAbs sm(sigma, cfg.variant);
    Vector g = data_grad + lp * penalty_gradient_vector(x, pen.p, sm);
    if (freeze) freeze_optimal_zeros(g, x, data_grad, pen.lambda);
    if (g.squaredNorm() == 0.0) break;
    if (n == 0) s = -g;
    double gs = g.dot(s);
    if (!(gs < 0.0)) {
      s = -g;
      gs = -g.squaredNorm();
    }

    const Vector As = A.apply(s);
    const Vector hw = hessian_penalty_diag(x, pen, sm);
    const double curv = (R.array() * As.array().square()).sum() + lp * (hw.array() * s.array().square()).sum();
    const double h0 = data.value(r) + pen.lambda * detail::smoothed_penalty_sum(x, pen.p, sm);
    const LineObjective along = [&](double mu) {
      return data.value(Vector(r + mu * As)) + pen.lambda * detail::smoothed_penalty_sum(Vector(x + mu * s), pen.p, sm);
    };

    double mu = 0.0;
    if (cfg.line_search == LineSearch::taylor && curv > 1e-14 * s.squaredNorm()) {
      mu = -gs / curv;
      int k = 0;
      while (along(mu) > h0 && k++ < max_halvings) mu *= 0.5;
      if (k > max_halvings) mu = 0.0;
    } else {
      mu = backtracking_mu(gs, h0, along);
    }

    const bool prune_now = (n + 1) % cfg.prune_cadence == 0;
    const double tau_n = cfg.tau_sigma_ratio ? std::min(tau, *cfg.tau_sigma_ratio * sigma) : tau;
    Vector x_new = apply_threshold(Vector(x + mu * s), mode, tau_n, A, b, pen.lambda, prune_now);
    Vector r_new = A.apply(x_new) - b;
    Vector R_new = data.weights(r_new);
    data_grad = A.apply_transpose(Vector(R_new.cwiseProduct(r_new)));
    Vector g_new = data_grad + lp * penalty_gradient_vector(x_new, pen.p, sm);
    if (freeze) freeze_optimal_zeros(g_new, x_new, data_grad, pen.lambda);

    double beta = 0.0;
    if (!steepest) beta = pr_beta(g_new, g).value_or(0.0);
    s = -g_new + beta * s;
    if (freeze)
      for (Index j = 0; j < s.size(); ++j)
        if (g_new[j] == 0.0 && x_new[j] == 0.0) s[j] = 0.0;

    TraceRecord rec = make_record(n + 1, r_new, x_new, pen);
    rec.H = data.value(r_new) + pen.lambda * detail::smoothed_penalty_sum(x_new, pen.p, sm);
    rec.sigma = sigma;
    rec.mu = mu;
    rec.beta = beta;
    if (!std::isfinite(rec.F) || !std::isfinite(*rec.H) || !all_finite(x_new))
      throw SolverError("conv_cg_solve: non-finite value", n + 1);
    out.trace.push(rec);

    const double step = (x_new - x).norm();
    x = std::move(x_new);
    r = std::move(r_new);
    R = std::move(R_new);
    sigma = sigma_update(sigma, cfg, step);
    if (g_new.squaredNorm() == 0.0) break;
  }
  out.x = std::move(x);
  out.sigma = sigma;
  return out;
}

}  // namespace detail

template <LinearOperator Op>
ConvCgResult conv_cg_solve(const Op& A, const Vector& b, const ConvCgConfig& cfg, const Vector& x0) {
  return detail::conv_cg_run(A, b, cfg, x0, false);
}

// Same loop with beta fixed at 0 (steepest descent on H with the Taylor step).
template <LinearOperator Op>
ConvCgResult steepest_descent_solve(const Op& A, const Vector& b, const ConvCgConfig& cfg, const Vector& x0) {
  return detail::conv_cg_run(A, b, cfg, x0, true);
}

}  // namespace lpcg
