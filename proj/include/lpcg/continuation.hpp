#pragma once

// Lambda continuation with warm starts, L-curve assembly, curvature by finite
// differences in log10(lambda), corner selection and discrepancy stopping.

#include "lpcg/convcg.hpp"
#include "lpcg/fista.hpp"
#include "lpcg/irls.hpp"
#include "lpcg/matrix_market.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

namespace lpcg {

enum class SolverKind { irls_cg, conv_cg, fista };

// A solver failure inside a continuation run, tagged with the grid index.
class ContinuationError : public std::runtime_error {
 public:
  ContinuationError(const std::string& what, std::size_t lambda_index)
      : std::runtime_error(what + " (lambda index " + std::to_string(lambda_index) + ")"),
        lambda_index_(lambda_index) {}

  std::size_t lambda_index() const noexcept { return lambda_index_; }

 private:
  std::size_t lambda_index_;
};

// Geometric grid from lambda_max down to lambda_min with exact endpoints.
inline std::vector<double> lambda_grid(double lambda_max, double lambda_min, int count) {
  if (!(lambda_min > 0.0 && lambda_max > lambda_min) || !std::isfinite(lambda_max))
    throw std::invalid_argument("lambda_grid: need lambda_max > lambda_min > 0");
  if (count < 2) throw std::invalid_argument("lambda_grid: count must be >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double lo = std::log(lambda_min);
  const double hi = std::log(lambda_max);
  g.front() = lambda_max;
  g.back() = lambda_min;
  for (int i = 1; i + 1 < count; ++i) g[i] = std::exp(hi + (lo - hi) * i / (count - 1));
  return g;
}

// ||A^T b||_inf / 1.2, the top of the default grid. x = 0 minimizes the l = 2,
// p = 1 objective exactly when lambda >= 2 ||A^T b||_inf.
template <LinearOperator Op>
double default_lambda_max(const Op& A, const Vector& b) {
  detail::require_size(b.size(), A.rows(), "default_lambda_max: b");
  const Vector g = A.apply_transpose(b);
  return (g.size() ? g.cwiseAbs().maxCoeff() : 0.0) / 1.2;
}

// Per-solver configuration. The penalty lambda and the iteration budget are
// overwritten at each grid point.
struct SolverSettings {
  SolverKind kind = SolverKind::conv_cg;
  IrlsConfig irls{};
  ConvCgConfig conv{};
  FistaConfig fista{};

  Penalty penalty() const {
    switch (kind) {
      case SolverKind::irls_cg:
        return irls.pen;
      case SolverKind::conv_cg:
        return conv.pen;
      case SolverKind::fista:
        return Penalty{fista.lambda, 2.0, 1.0};
    }
    return {};
  }
};

struct ContinuationOptions {
  int iters_per_lambda = 3;
  bool warm_start = true;
  // Carry IRLS epsilon and CONV CG sigma from one lambda to the next.
  bool carry_state = true;
  bool keep_solutions = false;
  // When set, percent_error[i] = 100 ||to_model(x_i) - truth|| / ||truth||.
  std::optional<Vector> truth;
  std::function<Vector(const Vector&)> to_model;
};

struct LCurve {
  std::vector<double> lambdas;
  std::vector<double> log_residual;   // log10 ||Ax - b||_l
  std::vector<double> log_penalty;    // log10 ||x||_p
  std::vector<double> residual_norm;  // ||Ax - b||_2
  std::vector<double> F;
  std::vector<Index> nnz;
  std::vector<double> percent_error;
  std::vector<Vector> solutions;      // only with keep_solutions
  std::vector<double> curvature;      // filled by compute_curvature
  std::vector<std::size_t> monotonicity_violations;  // indices i where residual grew vs i-1
  Vector final_x;
  SolveTrace trace;                   // every iteration, tagged with its lambda

  std::size_t size() const noexcept { return lambdas.size(); }
};

namespace detail {

inline constexpr double monotone_slack = 1e-6;

inline double safe_log10(double v) {
  return v > 0.0 ? std::log10(v) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

template <LinearOperator Op>
LCurve run_continuation(const Op& A, const Vector& b, const std::vector<double>& grid,
                        const SolverSettings& settings, const ContinuationOptions& opts = {}) {
  if (grid.empty()) throw std::invalid_argument("run_continuation: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1])) throw std::invalid_argument("run_continuation: grid must be strictly decreasing");
  if (opts.iters_per_lambda < 0) throw std::invalid_argument("run_continuation: iters_per_lambda must be >= 0");
  detail::require_size(b.size(), A.rows(), "run_continuation: b");
  if (opts.truth && !(opts.truth->norm() > 0.0)) throw std::invalid_argument("run_continuation: zero truth");

  LCurve lc;
  lc.lambdas = grid;
  const Vector zero = Vector::Zero(A.cols());
  Vector x = zero;
  double eps = settings.irls.eps0;
  double sigma = settings.conv.sigma0;
  int iter_offset = 0;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double lam = grid[i];
    const Vector& x0 = opts.warm_start ? x : zero;
    SolveTrace step;
    try {
      switch (settings.kind) {
        case SolverKind::irls_cg: {
          IrlsConfig cfg = settings.irls;
          cfg.pen.lambda = lam;
          cfg.outer_iters = opts.iters_per_lambda;
          if (opts.carry_state) cfg.eps0 = std::max(eps, cfg.eps_floor);
          auto res = irls_cg_solve(A, b, cfg, x0);
          x = std::move(res.x);
          eps = res.eps;
          step = std::move(res.trace);
          break;
        }
        case SolverKind::conv_cg: {
          ConvCgConfig cfg = settings.conv;
          cfg.pen.lambda = lam;
          cfg.iters = opts.iters_per_lambda;
          if (opts.carry_state) cfg.sigma0 = std::max(sigma, cfg.sigma_floor);
          auto res = conv_cg_solve(A, b, cfg, x0);
          x = std::move(res.x);
          sigma = res.sigma;
          step = std::move(res.trace);
          break;
        }
        case SolverKind::fista: {
          FistaConfig cfg = settings.fista;
          cfg.lambda = lam;
          cfg.iters = opts.iters_per_lambda;
          if (cfg.iters == 0) {
            x = x0;
            break;
          }
          if (!cfg.lipschitz) {
            const double s = spectral_norm_estimate(A, cfg.power_iters, 0);
            cfg.lipschitz = s > 0.0 ? 2.0 * s * s : 1.0;
          }
          auto res = fista_solve(A, b, cfg, x0);
          x = std::move(res.x);
          step = std::move(res.trace);
          break;
        }
      }
    } catch (const std::exception& e) {
      throw ContinuationError(e.what(), i);
    }

    for (auto& rec : step.records) {
      rec.iter += iter_offset;
      rec.lambda = lam;
      lc.trace.push(std::move(rec));
    }
    iter_offset += opts.iters_per_lambda;

    Penalty pen = settings.penalty();
    pen.lambda = lam;
    const Vector r = A.apply(x) - b;
    const double rl = lp_norm(r, pen.l);
    lc.log_residual.push_back(detail::safe_log10(rl));
    lc.log_penalty.push_back(detail::safe_log10(lp_norm(x, pen.p)));
    lc.residual_norm.push_back(r.norm());
    lc.F.push_back(eval_flp_residual(r, x, pen));
    lc.nnz.push_back(count_nonzeros(x));
    if (i > 0 && lc.log_residual[i] > lc.log_residual[i - 1] + detail::monotone_slack / std::log(10.0))
      lc.monotonicity_violations.push_back(i);
    if (opts.truth) {
      const Vector model = opts.to_model ? opts.to_model(x) : x;
      lc.percent_error.push_back(100.0 * (model - *opts.truth).norm() / opts.truth->norm());
    }
    if (opts.keep_solutions) lc.solutions.push_back(x);
  }
  lc.final_x = std::move(x);
  return lc;
}

namespace detail {

// First and second derivative at `at` of the parabola through (t_j, f_j).
inline std::pair<double, double> parabola_derivs(const double t[3], const double f[3], double at) {
  double d1 = 0.0;
  double d2 = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double a = t[(j + 1) % 3];
    const double c = t[(j + 2) % 3];
    const double den = (t[j] - a) * (t[j] - c);
    d1 += f[j] * (2.0 * at - a - c) / den;
    d2 += f[j] * 2.0 / den;
  }
  return {d1, d2};
}

}  // namespace detail

// Signed curvature of the curve (xi, eta) parameterized by log10(lambda).
// Interior points use centered three-point stencils, the two ends one-sided
// ones. Stencils touching a non-finite coordinate yield NaN.
inline std::vector<double> curvature(const std::vector<double>& lambdas, const std::vector<double>& xi,
                                     const std::vector<double>& eta, bool smooth = false) {
  const std::size_t n = lambdas.size();
  if (xi.size() != n || eta.size() != n) throw std::invalid_argument("curvature: length mismatch");
  if (n < 5) throw std::invalid_argument("curvature: need at least 5 points");
  std::vector<double> kappa(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    double t[3], fx[3], fy[3];
    for (int j = 0; j < 3; ++j) {
      t[j] = std::log10(lambdas[c - 1 + j]);
      fx[j] = xi[c - 1 + j];
      fy[j] = eta[c - 1 + j];
    }
    if (!std::isfinite(fx[0] + fx[1] + fx[2] + fy[0] + fy[1] + fy[2])) {
      kappa[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double at = std::log10(lambdas[i]);
    const auto [x1, x2] = detail::parabola_derivs(t, fx, at);
    const auto [y1, y2] = detail::parabola_derivs(t, fy, at);
    const double speed2 = x1 * x1 + y1 * y1;
    kappa[i] = speed2 > 0.0 ? (x1 * y2 - x2 * y1) / std::pow(speed2, 1.5) : 0.0;
  }
  if (!smooth) return kappa;
  std::vector<double> out = kappa;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (kappa[i - 1] + kappa[i] + kappa[i + 1]) / 3.0;
  return out;
}

inline void compute_curvature(LCurve& lc, bool smooth = false) {
  lc.curvature = curvature(lc.lambdas, lc.log_residual, lc.log_penalty, smooth);
}

struct GridPick {
  double lambda = 0.0;
  std::size_t index = 0;
  // pick_corner: a curvature maximum above flat_tol exists.
  // discrepancy_stop: some residual reached the noise level.
  bool found = false;
};

// Interior index of maximum |kappa|; ties go to the larger lambda. Curves whose
// interior |kappa| never exceeds flat_tol report found = false and index 1.
inline GridPick pick_corner(const std::vector<double>& lambdas, const std::vector<double>& kappa,
                            double flat_tol = 1e-8) {
  const std::size_t n = lambdas.size();
  if (kappa.size() != n || n < 3) throw std::invalid_argument("pick_corner: need >= 3 points with curvature");
  GridPick pick{lambdas[1], 1, false};
  double best = flat_tol;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double k = std::abs(kappa[i]);
    if (std::isfinite(k) && k > best) {
      best = k;
      pick = {lambdas[i], i, true};
    }
  }
  return pick;
}

inline GridPick pick_corner(const LCurve& lc, double flat_tol = 1e-8) {
  return pick_corner(lc.lambdas, lc.curvature, flat_tol);
}

// First lambda (descending) whose residual 2-norm is <= noise_norm.
inline GridPick discrepancy_stop(const LCurve& lc, double noise_norm) {
  if (!(noise_norm >= 0.0)) throw std::invalid_argument("discrepancy_stop: noise_norm must be >= 0");
  if (lc.size() == 0) throw std::invalid_argument("discrepancy_stop: empty curve");
  for (std::size_t i = 0; i < lc.size(); ++i)
    if (lc.residual_norm[i] <= noise_norm) return {lc.lambdas[i], i, true};
  return {lc.lambdas.back(), lc.size() - 1, false};
}

// Columns: lambda, log_residual, log_penalty, curvature, [percent_error,] nnz.
inline void write_lcurve_csv(std::ostream& os, const LCurve& lc) {
  const bool err = !lc.percent_error.empty();
  os << "lambda,log_residual,log_penalty,curvature," << (err ? "percent_error," : "") << "nnz\n";
  auto num = [&](double v) { os << io::format_double(v); };
  for (std::size_t i = 0; i < lc.size(); ++i) {
    num(lc.lambdas[i]);
    os << ',';
    num(lc.log_residual[i]);
    os << ',';
    num(lc.log_penalty[i]);
    os << ',';
    num(i < lc.curvature.size() ? lc.curvature[i] : std::numeric_limits<double>::quiet_NaN());
    os << ',';
    if (err) {
      num(lc.percent_error[i]);
      os << ',';
    }
    os << lc.nnz[i] << '\n';
  }
}

}  // namespace lpcg
