// Sparse recovery on a small ill-conditioned problem: the same lambda solved
// by IRLS-CG, CONV-CG and FISTA, then a short continuation run with its
// L-curve corner.

#include "lpcg/lpcg.hpp"

#include <cstdio>

int main() {
  using namespace lpcg;
  const Index n = 200;
  const auto A = problems::logspace_matrix(n, n, 0.0, -2.0, 1);
  const Vector x_true = problems::sparse_vector(n, 20, 2);
  problems::NoiseModel noise;
  noise.gauss_rel_std = 0.01;
  noise.outlier_frac = 0.0;
  noise.seed = 3;
  const Vector b = problems::add_noise_and_outliers(A.apply(x_true), noise).b_noisy;
  const double lambda = 0.02 * default_lambda_max(A, b);
  const Vector x0 = Vector::Zero(n);

  IrlsConfig irls;
  irls.pen = Penalty{lambda, 2.0, 1.0};
  irls.eps_mode = EpsilonMode::step_norm;
  irls.outer_iters = 50;
  irls.inner_iters = 10;
  const Vector xi = irls_cg_solve(A, b, irls, x0).x;

  ConvCgConfig conv;
  conv.pen = irls.pen;
  conv.iters = 200;
  const Vector xc = conv_cg_solve(A, b, conv, x0).x;

  FistaConfig fista;
  fista.lambda = lambda;
  fista.iters = 500;
  const Vector xf = fista_solve(A, b, fista, x0).x;

  std::printf("lambda = %.4g\n", lambda);
  for (const auto& [name, x] : {std::pair{"irls-cg", &xi}, std::pair{"conv-cg", &xc}, std::pair{"fista", &xf}})
    std::printf("%-8s F = %.6f  nnz = %3ld  rel. error = %.3f\n", name, eval_flp(A, b, *x, irls.pen),
                static_cast<long>(count_nonzeros(*x)), (*x - x_true).norm() / x_true.norm());

  SolverSettings settings;
  settings.kind = SolverKind::conv_cg;
  ContinuationOptions opt;
  opt.iters_per_lambda = 5;
  opt.truth = x_true;
  const auto grid = lambda_grid(default_lambda_max(A, b), default_lambda_max(A, b) * 1e-5, 30);
  LCurve lc = run_continuation(A, b, grid, settings, opt);
  compute_curvature(lc);
  const GridPick corner = pick_corner(lc);
  std::printf("L-curve corner at index %zu (lambda = %.4g), percent error there %.2f\n", corner.index, corner.lambda,
              lc.percent_error[corner.index]);
}
