// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails. Tolerances, problem sizes and budgets are pinned
// below and are not configurable.

#include "lpcg/lpcg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace lpcg;

namespace {

// Pinned tolerances.
constexpr double kPhiQuadTol = 1e-8;
constexpr double kPhiZeroTol = 1e-12;
constexpr double kGradFdTol = 1e-5;
constexpr double kHessFdTol = 1e-4;
constexpr double kTikhonovTol = 1e-8;
constexpr double kKktTolFactor = 1e-3;  // times lambda
constexpr double kObjectiveAgreeTol = 1e-3;
constexpr int kTomoMinWins = 9;
constexpr int kCornerWindow = 5;
constexpr double kAdjointTol = 1e-9;
constexpr double kReconstructionTol = 1e-10;
constexpr double kRayLengthTol = 1e-10;

// Pinned runtime budgets in seconds.
constexpr double kBudget[9] = {0, 5, 10, 5, 10, 120, 180, 300, 60};

struct Outcome {
  bool pass = true;
  std::string detail;
};

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Vector gaussian_vector(Index n, std::mt19937_64& rng) { return gaussian_matrix(n, 1, rng).col(0); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Closed-form phi against adaptive Simpson quadrature of
//    integral |t - u| K_sigma(u) du, K_sigma the N(0, sigma^2) density.

double simpson(const std::function<double(double)>& f, double a, double b) {
  return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double left = simpson(f, a, m);
  const double right = simpson(f, m, b);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, left, 0.5 * tol, depth - 1) + adaptive_simpson(f, m, b, right, 0.5 * tol, depth - 1);
}

double phi_by_quadrature(double t, double sigma) {
  const auto integrand = [&](double u) {
    return std::abs(t - u) * std::exp(-u * u / (2.0 * sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  };
  // The kink of |t - u| sits at u = t; integrate each smooth piece separately.
  const double lo = -14.0 * sigma;
  const double hi = 14.0 * sigma;
  double total = 0.0;
  const double cut = std::clamp(t, lo, hi);
  if (cut > lo) total += adaptive_simpson(integrand, lo, cut, simpson(integrand, lo, cut), 1e-13, 50);
  if (cut < hi) total += adaptive_simpson(integrand, cut, hi, simpson(integrand, cut, hi), 1e-13, 50);
  return total;
}

Outcome criterion_mollifier() {
  double worst = 0.0;
  for (double sigma : {0.01, 0.1, 1.0})
    for (int k = 0; k <= 200; ++k) {
      const double t = -5.0 + 0.05 * k;
      worst = std::max(worst, std::abs(phi(t, SmoothAbs(sigma)) - phi_by_quadrature(t, sigma)));
    }
  double worst0 = 0.0;
  for (double sigma : {0.01, 0.1, 1.0})
    worst0 = std::max(worst0, std::abs(phi(0.0, SmoothAbs(sigma)) - std::sqrt(2.0 / std::numbers::pi) * sigma));
  return {worst <= kPhiQuadTol && worst0 <= kPhiZeroTol,
          "max |phi - quad| = " + fmt("%.2e", worst) + ", max |phi(0) - sqrt(2/pi) sigma| = " + fmt("%.2e", worst0)};
}

// ---------------------------------------------------------------------------
// 2. Gradient and Hessian diagonal against central differences.

Outcome criterion_derivatives() {
  std::mt19937_64 rng(2);
  const double sigma = 0.1;
  const double ps[3] = {1.0, 1.5, 2.0};
  double worst_g = 0.0;
  double worst_h = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const double p = ps[inst % 3];
    const Index n = 20;
    const DenseMatrix A(gaussian_matrix(15, n, rng));
    const Vector b = gaussian_vector(15, rng);
    const Vector x = 0.3 * gaussian_vector(n, rng);
    const Penalty pen{0.7, 2.0, p};
    const SmoothAbs s(sigma);

    const Vector g = grad_H(A, b, x, pen, s);
    Vector fd(n);
    for (Index j = 0; j < n; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd[j] = (eval_H(A, b, xp, pen, s) - eval_H(A, b, xm, pen, s)) / (2.0 * h);
    }
    worst_g = std::max(worst_g, (g - fd).norm() / fd.norm());

    // Penalty part only: d/dx_j of p phi^{p-1} phi' against p w_j.
    const Vector w = hessian_penalty_diag(x, pen, s);
    Vector fdh(n);
    for (Index j = 0; j < n; ++j) {
      const double h = 1e-6;
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fdh[j] = (penalty_gradient_vector(xp, p, s)[j] - penalty_gradient_vector(xm, p, s)[j]) / (2.0 * h);
    }
    worst_h = std::max(worst_h, (w - fdh).norm() / fdh.norm());
  }
  return {worst_g <= kGradFdTol && worst_h <= kHessFdTol,
          "max rel grad err = " + fmt("%.2e", worst_g) + ", max rel Hessian-diag err = " + fmt("%.2e", worst_h)};
}

// ---------------------------------------------------------------------------
// 3. IRLS-CG at l = p = 2 against a direct solve of (A^T A + lambda I) x = A^T b.

Outcome criterion_tikhonov() {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd m = gaussian_matrix(50, 30, rng);
  const Vector b = gaussian_vector(50, rng);
  double worst = 0.0;
  for (double lambda : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    IrlsConfig cfg;
    cfg.pen = Penalty{lambda, 2.0, 2.0};
    cfg.outer_iters = 2;
    cfg.inner_iters = 200;
    cfg.inner_tol = 1e-14;
    const Vector x = irls_cg_solve(DenseMatrix(m), b, cfg, Vector::Zero(30)).x;
    const Eigen::MatrixXd normal = m.transpose() * m + lambda * Eigen::MatrixXd::Identity(30, 30);
    const Vector direct = normal.ldlt().solve(m.transpose() * b);
    worst = std::max(worst, (x - direct).norm() / direct.norm());
  }
  return {worst <= kTikhonovTol, "max rel err over 5 lambdas = " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------
// 4. l1 optimality of IRLS-CG and FISTA on 10x4 instances.

double kkt_violation(const Eigen::MatrixXd& a, const Vector& b, const Vector& x, double lambda, double zero_tol) {
  const Vector g = 2.0 * a.transpose() * (a * x - b);
  double worst = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    const double v = std::abs(x[k]) > zero_tol ? std::abs(g[k] + lambda * (x[k] > 0 ? 1.0 : -1.0))
                                               : std::max(0.0, std::abs(g[k]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

Outcome criterion_l1_optimality() {
  std::mt19937_64 rng(4);
  double worst_irls = 0.0, worst_fista = 0.0, worst_gap = 0.0;
  bool pass = true;
  for (int inst = 0; inst < 10; ++inst) {
    const Eigen::MatrixXd m = gaussian_matrix(10, 4, rng);
    const Vector b = gaussian_vector(10, rng);
    const double lambda = 0.3 * 2.0 * (m.transpose() * b).cwiseAbs().maxCoeff();
    const DenseMatrix A(m);

    IrlsConfig ic;
    ic.pen = Penalty{lambda, 2.0, 1.0};
    // The sqrt rule of distance mode leaves eps near 1e-3 after 200 iterations,
    // too coarse for a 1e-3 lambda stationarity check; step_norm tracks ||dx||.
    ic.eps_mode = EpsilonMode::step_norm;
    ic.eps0 = 0.1;
    ic.outer_iters = 200;
    ic.inner_iters = 10;
    const IrlsResult ir = irls_cg_solve(A, b, ic, Vector::Zero(4));

    FistaConfig fc;
    fc.lambda = lambda;
    fc.iters = 2000;
    const FistaResult fr = fista_solve(A, b, fc, Vector::Zero(4));

    // IRLS never produces exact zeros: off-support entries decay like eps.
    // Entries under 1e-4 count as zero.
    const double vi = kkt_violation(m, b, ir.x, lambda, 1e-4) / lambda;
    const double vf = kkt_violation(m, b, fr.x, lambda, 0.0) / lambda;
    const double fi = eval_flp(A, b, ir.x, Penalty{lambda, 2.0, 1.0});
    const double ff = eval_flp(A, b, fr.x, Penalty{lambda, 2.0, 1.0});
    const double gap = std::abs(fi - ff) / std::max(fi, ff);
    worst_irls = std::max(worst_irls, vi);
    worst_fista = std::max(worst_fista, vf);
    worst_gap = std::max(worst_gap, gap);
    pass = pass && vi <= kKktTolFactor && vf <= kKktTolFactor && gap <= kObjectiveAgreeTol;
  }
  return {pass, "max KKT/lambda irls = " + fmt("%.2e", worst_irls) + ", fista = " + fmt("%.2e", worst_fista) +
                    ", max rel F gap = " + fmt("%.2e", worst_gap)};
}

// ---------------------------------------------------------------------------
// 5. Tomography with outliers: robust residual norms against damped least squares.
// Each l is given its best lambda from a common grid of
// f * ||A||^2 * rms(b)^{l-2}, the factor that puts ||Ax - b||_l^l and
// lambda ||x||^2 on the same scale.

Outcome criterion_tomography() {
  const int g = 32;
  const int m = 400;
  const double ls[3] = {1.0, 1.8, 2.0};
  const double fs[] = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0, 3.0, 10.0};
  std::vector<double> rmse[3];
  int wins = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const auto geo = problems::build_tomography(g, m, 100 + static_cast<std::uint64_t>(seed));
    const Vector xt = problems::checkerboard(g, 4, 0.03);
    problems::NoiseModel nm;
    nm.seed = 200 + static_cast<std::uint64_t>(seed);
    const auto data = problems::add_noise_and_outliers(geo.A.apply(xt), nm);
    const double norm2 = std::pow(spectral_norm_estimate(geo.A, 50), 2);
    const double rb = problems::rms(data.b_outliers);
    double best[3] = {INFINITY, INFINITY, INFINITY};
    for (int k = 0; k < 3; ++k)
      for (double f : fs) {
        IrlsConfig c;
        c.pen = Penalty{f * norm2 * std::pow(rb, ls[k] - 2.0), ls[k], 2.0};
        c.eps_mode = EpsilonMode::fixed;
        c.outer_iters = ls[k] == 2.0 ? 1 : 30;
        c.inner_iters = ls[k] == 2.0 ? 200 : 20;
        const Vector x = irls_cg_solve(geo.A, data.b_outliers, c, Vector::Zero(g * g)).x;
        best[k] = std::min(best[k], problems::rms(Vector(x - xt)));
      }
    for (int k = 0; k < 3; ++k) rmse[k].push_back(best[k]);
    wins += best[0] < best[2];
  }
  const double m1 = median(rmse[0]), m18 = median(rmse[1]), m2 = median(rmse[2]);
  const bool between = std::min(m1, m2) <= m18 && m18 <= std::max(m1, m2);
  return {wins >= kTomoMinWins && between,
          "l=1 beats DLS on " + std::to_string(wins) + "/10 seeds; median RMSE l=1 " + fmt("%.5f", m1) + ", l=1.8 " +
              fmt("%.5f", m18) + ", DLS " + fmt("%.5f", m2)};
}

// ---------------------------------------------------------------------------
// 6. Cost reduction along the first 10 lambda steps, 3 iterations per lambda.
// Truth: 10% of entries nonzero N(0,1); data noise 1% of rms(b).

Outcome criterion_cost_reduction() {
  const Index n = 300;
  const int steps = 10;
  const int trials = 10;
  SolverSettings fista;
  fista.kind = SolverKind::fista;
  SolverSettings irls;
  irls.kind = SolverKind::irls_cg;
  irls.irls.eps0 = 0.003;
  irls.irls.alpha = 1e-4;
  irls.irls.inner_iters = 20;
  SolverSettings conv;
  conv.kind = SolverKind::conv_cg;
  conv.conv.sigma0 = 0.05;
  const SolverSettings* sets[3] = {&fista, &irls, &conv};

  std::vector<std::vector<double>> F[3];
  for (auto& f : F) f.assign(steps, {});
  for (int t = 0; t < trials; ++t) {
    const auto A = problems::logspace_matrix(n, n, 0.0, -2.5, 100 + static_cast<std::uint64_t>(t));
    const Vector x = problems::sparse_vector(n, n / 10, 200 + static_cast<std::uint64_t>(t));
    problems::NoiseModel nm;
    nm.outlier_frac = 0.0;
    nm.gauss_rel_std = 0.01;
    nm.seed = 300 + static_cast<std::uint64_t>(t);
    const Vector b = problems::add_noise_and_outliers(A.apply(x), nm).b_noisy;
    const double top = A.apply_transpose(b).cwiseAbs().maxCoeff();
    auto grid = lambda_grid(top / 1.2, top / 1e6, 50);
    grid.resize(steps);
    ContinuationOptions opt;
    opt.iters_per_lambda = 3;
    for (int k = 0; k < 3; ++k) {
      const LCurve lc = run_continuation(A, b, grid, *sets[k], opt);
      for (int i = 0; i < steps; ++i) F[k][i].push_back(lc.F[static_cast<std::size_t>(i)]);
    }
  }
  std::ostringstream os;
  bool pass = true;
  std::string lost_irls, lost_conv;
  for (int i = 0; i < steps; ++i) {
    const double mf = median(F[0][i]), mi = median(F[1][i]), mc = median(F[2][i]);
    if (mi > mf) lost_irls += (lost_irls.empty() ? "" : ",") + std::to_string(i);
    if (mc > mf) lost_conv += (lost_conv.empty() ? "" : ",") + std::to_string(i);
    pass = pass && mi <= mf && mc <= mf;
  }
  os << "steps where median F exceeds FISTA: irls-cg [" << lost_irls << "], conv-cg [" << lost_conv << "]";
  os << "; step 0 medians fista " << fmt("%.4f", median(F[0][0])) << ", irls " << fmt("%.4f", median(F[1][0]))
     << ", conv " << fmt("%.4f", median(F[2][0]));
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 7. Wavelet L-curve: corner against error minimum, CONV-CG against FISTA.

struct WaveletRun {
  std::size_t corner = 0;
  std::size_t err_min = 0;
  double best_conv = 0.0;
  double best_fista = 0.0;
};

WaveletRun wavelet_experiment(double decay, std::uint64_t seed) {
  const Index n = 1024;
  const Vector xt = problems::multiscale_model(n, 11 + seed);
  const auto A = problems::logspace_matrix(n, n, 0.0, decay, 12 + seed);
  const problems::WaveletBasis W(n, 5);
  const auto op = problems::compose_awinv(OperatorRef<DenseMatrix>(A), W);
  problems::NoiseModel nm;
  nm.outlier_frac = 0.0;
  nm.gauss_rel_std = 0.05;
  nm.seed = 13 + seed;
  const Vector b = problems::add_noise_and_outliers(A.apply(xt), nm).b_noisy;
  const double top = op.apply_transpose(b).cwiseAbs().maxCoeff();
  const auto grid = lambda_grid(top / 1.2, top / 1e6, 50);

  ContinuationOptions opt;
  opt.iters_per_lambda = 5;
  opt.truth = xt;
  opt.to_model = [&](const Vector& w) { return W.inverse(w); };
  // Each lambda restarts the smoothing at sigma0; see the README.
  opt.carry_state = false;

  SolverSettings conv;
  conv.kind = SolverKind::conv_cg;
  conv.conv.sigma0 = 3.0;
  SolverSettings fista;
  fista.kind = SolverKind::fista;

  WaveletRun out;
  LCurve lc = run_continuation(op, b, grid, conv, opt);
  compute_curvature(lc);
  out.corner = pick_corner(lc).index;
  out.err_min = static_cast<std::size_t>(std::min_element(lc.percent_error.begin(), lc.percent_error.end()) -
                                         lc.percent_error.begin());
  out.best_conv = lc.percent_error[out.err_min];
  const LCurve lf = run_continuation(op, b, grid, fista, opt);
  out.best_fista = *std::min_element(lf.percent_error.begin(), lf.percent_error.end());
  return out;
}

Outcome criterion_wavelet_lcurve() {
  std::ostringstream os;
  bool pass = true;
  os << "logspace(0,-0.5) corner/errmin:";
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const WaveletRun r = wavelet_experiment(-0.5, seed);
    const long d = static_cast<long>(r.corner) - static_cast<long>(r.err_min);
    pass = pass && std::abs(d) <= kCornerWindow;
    os << ' ' << r.corner << '/' << r.err_min;
  }
  os << "; logspace(0,-1.5) best % error conv/fista:";
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const WaveletRun r = wavelet_experiment(-1.5, seed);
    pass = pass && r.best_conv <= r.best_fista;
    os << ' ' << fmt("%.3f", r.best_conv) << '/' << fmt("%.3f", r.best_fista);
  }
  return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// 8. Structural invariants.

template <class Op>
double adjoint_gap(const Op& op, std::mt19937_64& rng) {
  const Vector x = gaussian_vector(op.cols(), rng);
  const Vector y = gaussian_vector(op.rows(), rng);
  const double lhs = op.apply(x).dot(y);
  return std::abs(lhs - x.dot(op.apply_transpose(y))) / std::max(1.0, std::abs(lhs));
}

Outcome criterion_invariants() {
  std::mt19937_64 rng(8);
  std::vector<std::string> failed;
  const auto check = [&](bool ok, const char* name) {
    if (!ok) failed.emplace_back(name);
  };

  {  // adjointness
    const DenseMatrix d(gaussian_matrix(30, 20, rng));
    const auto tomo = problems::build_tomography(16, 100, 1);
    const DenseMatrix sq(gaussian_matrix(40, 64, rng));
    const auto comp = problems::compose_awinv(OperatorRef<DenseMatrix>(sq), problems::WaveletBasis(64, 3));
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      worst = std::max(worst, adjoint_gap(d, rng));
      worst = std::max(worst, adjoint_gap(CsrMatrix::from_dense(d), rng));
      worst = std::max(worst, adjoint_gap(tomo.A, rng));
      worst = std::max(worst, adjoint_gap(comp, rng));
    }
    check(worst <= kAdjointTol, "adjointness");
  }
  {  // CG finite termination. Q diag(1..10) Q^T keeps rounding from eroding the
     // n-step property; at condition ~70, n = 20 ends near 2e-7.
    bool ok = true;
    for (Index n : {5, 10, 20, 50}) {
      const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian_matrix(n, n, rng)).householderQ();
      const Vector ev = Vector::LinSpaced(n, 1.0, 10.0);
      const Eigen::MatrixXd spd = q * ev.asDiagonal() * q.transpose();
      const Vector rhs = gaussian_vector(n, rng);
      SpdSystem sys{[&](const Vector& v) -> Vector { return spd * v; }, rhs};
      const CgResult r = cg_solve(sys, Vector::Zero(n), static_cast<int>(n), 1e-14);
      ok = ok && r.iterations <= n && (spd * r.x - rhs).norm() <= 1e-8 * rhs.norm();
    }
    check(ok, "CG finite termination");
  }
  {  // threshold properties
    bool ok = true;
    for (int k = 0; k < 100; ++k) {
      const Vector x = gaussian_vector(10, rng), y = gaussian_vector(10, rng);
      const Vector sx = soft_threshold(x, 0.4), sy = soft_threshold(y, 0.4);
      ok = ok && (sx - sy).norm() <= (x - y).norm() * (1.0 + 1e-15);
      ok = ok && (sx.cwiseAbs().array() <= x.cwiseAbs().array()).all();
      const Vector hx = hard_threshold(x, 0.4);
      ok = ok && hard_threshold(hx, 0.4) == hx;
    }
    check(ok, "threshold properties");
  }
  {  // weight positivity
    Vector x = gaussian_vector(50, rng);
    x.head(10).setZero();
    bool ok = true;
    for (double p : {0.5, 1.0, 1.5, 2.0}) ok = ok && (irls_weights(x, 1e-8, p).array() > 0.0).all();
    check(ok, "weight positivity");
  }
  {  // epsilon monotonicity
    const Eigen::MatrixXd m = gaussian_matrix(30, 20, rng);
    const Vector b = gaussian_vector(30, rng);
    bool ok = true;
    for (EpsilonMode mode : {EpsilonMode::distance, EpsilonMode::surrogate_gap}) {
      IrlsConfig cfg;
      cfg.pen = Penalty{0.3 * (m.transpose() * b).cwiseAbs().maxCoeff(), 2.0, 1.0};
      cfg.eps_mode = mode;
      cfg.alpha = 1e-4;
      cfg.outer_iters = 40;
      const auto recs = irls_cg_solve(DenseMatrix(m), b, cfg, Vector::Zero(20)).trace.records;
      for (std::size_t k = 1; k < recs.size(); ++k)
        ok = ok && *recs[k].eps <= *recs[k - 1].eps && *recs[k].eps >= cfg.eps_floor;
    }
    check(ok, "epsilon monotonicity");
  }
  {  // sigma schedule
    ConvCgConfig cfg;
    cfg.sigma0 = 1.0;
    double s = cfg.sigma0;
    for (int k = 0; k < 200; ++k) s = sigma_update(s, cfg, 0.0);
    double expected = cfg.sigma0;
    for (int k = 0; k < 200; ++k) expected = std::max(cfg.alpha * expected, cfg.sigma_floor);
    bool ok = s == expected;
    const Eigen::MatrixXd m = gaussian_matrix(30, 40, rng);
    const Vector b = gaussian_vector(30, rng);
    cfg.pen = Penalty{0.2 * (m.transpose() * b).cwiseAbs().maxCoeff(), 2.0, 1.0};
    cfg.iters = 40;
    const auto recs = conv_cg_solve(DenseMatrix(m), b, cfg, Vector::Zero(40)).trace.records;
    for (std::size_t k = 1; k < recs.size(); ++k) ok = ok && *recs[k].sigma <= *recs[k - 1].sigma;
    check(ok, "sigma schedule");
  }
  {  // wavelet perfect reconstruction
    double worst = 0.0;
    for (int levels : {1, 3, 5}) {
      const Vector x = gaussian_vector(256, rng);
      worst = std::max(worst, (problems::cdf97_inverse(problems::cdf97_forward(x, levels), levels) - x)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    check(worst <= kReconstructionTol, "wavelet perfect reconstruction");
  }
  {  // ray length conservation
    const auto geo = problems::build_tomography(32, 400, 7);
    double worst = 0.0;
    for (Index i = 0; i < geo.A.rows(); ++i)
      worst = std::max(worst, std::abs(geo.A.row_sum(i) - geo.rays[static_cast<std::size_t>(i)].length()));
    check(worst <= kRayLengthTol, "ray length conservation");
  }

  std::string detail = "8 suites";
  if (failed.empty()) return {true, detail + " hold"};
  detail += "; failed:";
  for (const auto& f : failed) detail += " " + f;
  return {false, detail};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries = {
      {1, "mollifier exactness", criterion_mollifier},
      {2, "derivative fidelity", criterion_derivatives},
      {3, "Tikhonov equivalence", criterion_tikhonov},
      {4, "l1 optimality", criterion_l1_optimality},
      {5, "tomography robustness", criterion_tomography},
      {6, "cost-reduction dominance", criterion_cost_reduction},
      {7, "L-curve corner vs error", criterion_wavelet_lcurve},
      {8, "structural invariants", criterion_invariants},
  };
  int failures = 0;
  for (const auto& e : entries) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > kBudget[e.id]) {
      o.pass = false;
      o.detail += "; over time budget";
    }
    failures += !o.pass;
    std::printf("%s  %d %-26s %s (%.1f s, budget %.0f s)\n", o.pass ? "PASS" : "FAIL", e.id, e.name, o.detail.c_str(),
                secs, kBudget[e.id]);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(entries.size()) - failures, entries.size());
  return failures == 0 ? 0 : 1;
}
