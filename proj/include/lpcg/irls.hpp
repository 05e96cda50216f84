#pragma once

// Iteratively reweighted least squares for F_{l,p}: weights, diagonal
// assembly, epsilon schedules, the surrogate functional, the damped Landweber
// scheme and the CG-accelerated outer loop.
//
// Each IRLS-CG outer iteration replaces |x_k|^p by (p/2) w_k x_k^2 and
// |r_i|^l by a reweighted square, then takes a few warm-started CG steps on
//
//   (A^T R A + diag(lambda p w / l)) x = A^T R b,   R_i = max(|r_i|, eps_r)^{l-2}.
//
// At l = 2 the penalty diagonal is d_k^2 = lambda p w_k / 2 and the system is
// (A^T A + D^T D) x = A^T b.

#include "lpcg/functional.hpp"
#include "lpcg/trace.hpp"

#include <deque>

namespace lpcg {

// distance:      eps_n = min(eps_{n-1}, sqrt(||x^n - x^{n-1}|| + alpha)), floored near sqrt(alpha)
// step_norm:     eps_n = min(eps_{n-1}, ||x^n - x^{n-1}||)
// surrogate_gap: eps_n = min(eps_{n-1}, |G_{n-2} - G_{n-1}|^{gamma/2} + alpha^n)
// fixed:         eps_n = eps0
// All but fixed are clamped below at eps_floor.
enum class EpsilonMode { distance, step_norm, surrogate_gap, fixed };

struct IrlsConfig {
  Penalty pen{};
  double eps0 = 0.1;
  EpsilonMode eps_mode = EpsilonMode::distance;
  double alpha = 0.1;
  double gamma = 0.5;            // surrogate_gap mode only
  double eps_residual = 1e-6;    // floor for |r_i| in the residual weights
  double eps_floor = 1e-8;
  int outer_iters = 30;          // N
  int inner_iters = 5;           // N_l
  double inner_tol = 1e-12;

  void validate() const {
    pen.validate();
    if (!(eps_floor > 0.0 && eps_floor <= eps0 && eps0 < 1.0))
      throw std::invalid_argument("IrlsConfig: need 0 < eps_floor <= eps0 < 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("IrlsConfig: alpha must lie in (0, 1)");
    if (!(eps_residual > 0.0)) throw std::invalid_argument("IrlsConfig: eps_residual must be > 0");
    if (eps_mode == EpsilonMode::surrogate_gap) {
      const double gmax = 2.0 / (4.0 - pen.p * pen.p);
      if (!(gamma > 0.0 && gamma < gmax))
        throw std::invalid_argument("IrlsConfig: gamma must lie in (0, 2/(4 - p^2))");
    }
    if (outer_iters < 0) throw std::invalid_argument("IrlsConfig: outer_iters must be >= 0");
    if (inner_iters < 1) throw std::invalid_argument("IrlsConfig: inner_iters must be >= 1");
    if (!(inner_tol > 0.0)) throw std::invalid_argument("IrlsConfig: inner_tol must be > 0");
  }
};

struct IrlsState {
  Vector x;
  double eps = 0.0;
  Vector w;
  Vector d_diag;
  Vector r_diag;
  int iteration = 0;
};

// What update_epsilon needs from earlier iterations: the previous iterate and
// the two most recent surrogate values.
struct EpsilonHistory {
  Vector prev_x;
  std::deque<double> surrogate;

  void push_surrogate(double g) {
    surrogate.push_back(g);
    while (surrogate.size() > 2) surrogate.pop_front();
  }
};

struct IrlsResult {
  Vector x;
  SolveTrace trace;
  double eps = 0.0;  // smoothing parameter the next outer iteration would use
};

// w_k = ((x_k)^2 + eps^2)^{-(2-p)/2}
inline Vector irls_weights(const Vector& x, double eps, double p) {
  if (!(eps > 0.0)) throw std::invalid_argument("irls_weights: eps must be > 0");
  Vector w(x.size());
  if (p == 2.0) return w.setOnes();
  const double expo = -(2.0 - p) / 2.0;
  const double e2 = eps * eps;
  for (Index k = 0; k < x.size(); ++k) w[k] = std::pow(x[k] * x[k] + e2, expo);
  return w;
}

// d_k = sqrt(lambda p w_k / 2)
inline Vector build_penalty_diag(const Vector& w, double lambda, double p) {
  return (0.5 * lambda * p * w.array()).sqrt().matrix();
}

// R_i = max(|r_i|, eps_r)^{l-2}
inline Vector build_residual_diag(const Vector& r, double l, double eps_r) {
  Vector out(r.size());
  if (l == 2.0) return out.setOnes();
  for (Index i = 0; i < r.size(); ++i) out[i] = std::pow(std::max(std::abs(r[i]), eps_r), l - 2.0);
  return out;
}

// Surrogate G(x, w, eps) = ||Ax - b||_l^l
//                          + lambda sum_k [p w_k (x_k^2 + eps^2) + (2 - p) w_k^{p/(p-2)}].
// With w = irls_weights(x, eps, p) the bracket collapses to 2 (x_k^2 + eps^2)^{p/2}.
inline double eval_surrogate_residual(const Vector& r, const Vector& x, const Vector& w, double eps,
                                      const Penalty& pen) {
  const double p = pen.p;
  double acc = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    acc += p * w[k] * (x[k] * x[k] + eps * eps);
    if (p != 2.0) acc += (2.0 - p) * std::pow(w[k], p / (p - 2.0));
  }
  return lp_power_norm(r, pen.l) + pen.lambda * acc;
}

template <LinearOperator Op>
double eval_surrogate(const Op& A, const Vector& b, const Vector& x, const Vector& w, double eps,
                      const Penalty& pen) {
  detail::require_size(w.size(), x.size(), "eval_surrogate: w");
  return eval_surrogate_residual(Vector(apply(A, x) - b), x, w, eps, pen);
}

// Next smoothing parameter. state.x is the newest iterate, history.prev_x the
// one before it, state.iteration the 1-based outer index just completed.
inline double update_epsilon(const IrlsState& state, const IrlsConfig& cfg, const EpsilonHistory& history) {
  double candidate = state.eps;
  switch (cfg.eps_mode) {
    case EpsilonMode::fixed:
      return cfg.eps0;
    case EpsilonMode::distance:
      candidate = std::sqrt((state.x - history.prev_x).norm() + cfg.alpha);
      break;
    case EpsilonMode::step_norm:
      candidate = (state.x - history.prev_x).norm();
      break;
    case EpsilonMode::surrogate_gap:
      if (history.surrogate.size() >= 2) {
        const double gap = std::abs(history.surrogate[0] - history.surrogate[1]);
        candidate = std::pow(gap, cfg.gamma / 2.0) + std::pow(cfg.alpha, state.iteration);
      }
      break;
  }
  return std::max(cfg.eps_floor, std::min(state.eps, candidate));
}

// x_k <- (x_k - (A^T A x)_k + (A^T b)_k) / (1 + lambda p w_k / 2). Assumes ||A|| <= 1.
template <LinearOperator Op>
Vector irls_landweber_step(const Op& A, const Vector& b, const Vector& x, const Vector& w, const Penalty& pen) {
  detail::require_size(w.size(), x.size(), "irls_landweber_step: w");
  const Vector g = x + apply_transpose(A, Vector(b - apply(A, x)));
  return (g.array() / (1.0 + 0.5 * pen.lambda * pen.p * w.array())).matrix();
}

// Runs cfg.outer_iters damped Landweber steps (l = 2 only). A and b are
// rescaled by 1/s, s = estimated ||A||, with lambda -> lambda / s^2, which
// leaves the minimizer unchanged. The trace reports unscaled F.
template <LinearOperator Op>
IrlsResult irls_landweber_solve(const Op& A, const Vector& b, const IrlsConfig& cfg, const Vector& x0) {
  cfg.validate();
  if (cfg.pen.l != 2.0) throw std::invalid_argument("irls_landweber_solve: requires l = 2");
  detail::require_size(b.size(), A.rows(), "irls_landweber_solve: b");
  detail::require_size(x0.size(), A.cols(), "irls_landweber_solve: x0");

  const double s = spectral_norm_estimate(A, 200, 0);
  const double inv = s > 0.0 ? 1.0 / s : 1.0;
  ScaledOperator<OperatorRef<Op>> As(OperatorRef<Op>(A), inv);
  const Vector bs = inv * b;
  Penalty scaled = cfg.pen;
  scaled.lambda = cfg.pen.lambda * inv * inv;

  IrlsResult out;
  IrlsState state;
  state.x = x0;
  state.eps = cfg.eps0;
  EpsilonHistory hist;
  hist.prev_x = x0;
  for (int n = 1; n <= cfg.outer_iters; ++n) {
    state.iteration = n;
    state.w = irls_weights(state.x, state.eps, cfg.pen.p);
    if (cfg.eps_mode == EpsilonMode::surrogate_gap)
      hist.push_surrogate(eval_surrogate(As, bs, state.x, state.w, state.eps, scaled));
    Vector next = irls_landweber_step(As, bs, state.x, state.w, scaled);
    const Vector r = apply(A, next) - b;
    TraceRecord rec = make_record(n, r, next, cfg.pen);
    rec.eps = state.eps;
    if (!std::isfinite(rec.F)) throw SolverError("irls_landweber_solve: non-finite objective", n);
    out.trace.push(rec);
    hist.prev_x = std::move(state.x);
    state.x = std::move(next);
    state.eps = update_epsilon(state, cfg, hist);
  }
  out.x = std::move(state.x);
  out.eps = state.eps;
  return out;
}

// IRLS-CG outer loop. Inner CG is warm-started from the current iterate and
// limited to cfg.inner_iters steps. The trace holds F_{l,p} of every new
// iterate.
template <LinearOperator Op>
IrlsResult irls_cg_solve(const Op& A, const Vector& b, const IrlsConfig& cfg, const Vector& x0) {
  cfg.validate();
  detail::require_size(b.size(), A.rows(), "irls_cg_solve: b");
  detail::require_size(x0.size(), A.cols(), "irls_cg_solve: x0");
  const Penalty& pen = cfg.pen;

  IrlsResult out;
  IrlsState state;
  state.x = x0;
  state.eps = cfg.eps0;
  EpsilonHistory hist;
  hist.prev_x = x0;
  Vector r = apply(A, state.x) - b;

  for (int n = 1; n <= cfg.outer_iters; ++n) {
    state.iteration = n;
    state.w = irls_weights(state.x, state.eps, pen.p);
    state.d_diag = build_penalty_diag(state.w, pen.lambda, pen.p);
    state.r_diag = build_residual_diag(r, pen.l, cfg.eps_residual);
    if (cfg.eps_mode == EpsilonMode::surrogate_gap)
      hist.push_surrogate(eval_surrogate_residual(r, state.x, state.w, state.eps, pen));

    const Vector pen_diag = state.d_diag.cwiseAbs2() * (2.0 / pen.l);
    const Vector& rd = state.r_diag;
    SpdSystem sys{
        [&](const Vector& v) -> Vector {
          Vector av = A.apply(v);
          av.array() *= rd.array();
          Vector out_v = A.apply_transpose(av);
          out_v.array() += pen_diag.array() * v.array();
          return out_v;
        },
        A.apply_transpose(Vector(rd.cwiseProduct(b)))};

    CgResult cg;
    try {
      cg = cg_solve(sys, state.x, cfg.inner_iters, cfg.inner_tol);
    } catch (const CgBreakdown& e) {
      throw CgBreakdown(e.cg_iteration(), e.curvature(), n);
    }

    r = apply(A, cg.x) - b;
    TraceRecord rec = make_record(n, r, cg.x, pen);
    rec.eps = state.eps;
    if (!std::isfinite(rec.F) || !all_finite(cg.x))
      throw SolverError("irls_cg_solve: non-finite objective", n);
    out.trace.push(rec);

    hist.prev_x = std::move(state.x);
    state.x = std::move(cg.x);
    state.eps = update_epsilon(state, cfg, hist);
  }
  out.x = std::move(state.x);
  out.eps = state.eps;
  return out;
}

}  // namespace lpcg
