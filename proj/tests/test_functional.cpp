#include "lpcg/functional.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lpcg;
using lpcg::testing::random_matrix;
using lpcg::testing::random_vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double e : v) out[k++] = e;
  return out;
}

}  // namespace

TEST(Penalty, AcceptsConvexRangeOnly) {
  EXPECT_NO_THROW((Penalty{1.0, 1.0, 2.0}).validate());
  EXPECT_THROW((Penalty{-1.0, 2.0, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((Penalty{1.0, 2.5, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((Penalty{1.0, 2.0, 0.5}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((Penalty{1.0, 2.0, 0.5, true}).validate());
  EXPECT_THROW((Penalty{1.0, 2.0, 0.0, true}).validate(), std::invalid_argument);
}

TEST(EvalFlp, HandArithmetic) {
  const DenseMatrix I = DenseMatrix::identity(2);
  EXPECT_DOUBLE_EQ(eval_flp(I, vec({0, 0}), vec({1, -1}), Penalty{1.0, 2.0, 1.0}), 4.0);
}

TEST(EvalFlp, ZeroIterateGivesDataNorm) {
  const DenseMatrix A(random_matrix(6, 4, 1));
  const Vector b = random_vector(6, 2);
  const Penalty pen{3.0, 1.5, 1.0};
  EXPECT_NEAR(eval_flp(A, b, Vector::Zero(4), pen), lp_power_norm(b, 1.5), 1e-14);
}

TEST(EvalFlp, MatchesLiteralSummation) {
  const Eigen::MatrixXd m = random_matrix(5, 3, 3);
  const Vector b = random_vector(5, 4);
  const Vector x = random_vector(3, 5);
  const Penalty pen{0.7, 1.5, 1.2};
  double oracle = 0.0;
  for (Index i = 0; i < 5; ++i) {
    double ri = -b[i];
    for (Index j = 0; j < 3; ++j) ri += m(i, j) * x[j];
    oracle += std::pow(std::fabs(ri), 1.5);
  }
  for (Index j = 0; j < 3; ++j) oracle += 0.7 * std::pow(std::fabs(x[j]), 1.2);
  EXPECT_NEAR(eval_flp(DenseMatrix(m), b, x, pen), oracle, 1e-12);
}

TEST(EvalFlp, QuadraticCase) {
  const Eigen::MatrixXd m = random_matrix(8, 5, 6);
  const Vector b = random_vector(8, 7);
  const Vector x = random_vector(5, 8);
  const double expected = (m * x - b).squaredNorm() + 0.3 * x.squaredNorm();
  EXPECT_NEAR(eval_flp(DenseMatrix(m), b, x, Penalty{0.3, 2.0, 2.0}) / expected, 1.0, 1e-12);
}

TEST(EvalFlp, NonNegativeAndZeroOnlyAtExactFit) {
  const Eigen::MatrixXd m = random_matrix(6, 6, 9);
  const Vector x = random_vector(6, 10);
  const Vector b = m * x;
  EXPECT_NEAR(eval_flp(DenseMatrix(m), b, x, Penalty{0.0, 1.0, 1.0}), 0.0, 1e-12);
  EXPECT_GT(eval_flp(DenseMatrix(m), b, x, Penalty{0.1, 1.0, 1.0}), 0.0);
  for (std::uint64_t s = 0; s < 20; ++s)
    EXPECT_GE(eval_flp(DenseMatrix(m), random_vector(6, 100 + s), random_vector(6, 200 + s), Penalty{0.5, 1.3, 1.7}),
              0.0);
}

TEST(LpPowerNorm, HandValues) {
  EXPECT_DOUBLE_EQ(lp_power_norm(vec({3, -4}), 2.0), 25.0);
  EXPECT_DOUBLE_EQ(lp_power_norm(vec({3, -4}), 1.0), 7.0);
  for (double p : {0.5, 1.0, 1.3, 2.0}) EXPECT_DOUBLE_EQ(lp_power_norm(vec({1, 0, 0}), p), 1.0);
  EXPECT_DOUBLE_EQ(lp_norm(vec({3, -4}), 2.0), 5.0);
  EXPECT_THROW(lp_power_norm(vec({1}), 0.0), std::invalid_argument);
}

TEST(SoftThreshold, HandValues) {
  const Vector y = soft_threshold(vec({2.5, -0.3, -1.7}), 1.0);
  EXPECT_DOUBLE_EQ(y[0], 1.5);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_NEAR(y[2], -0.7, 1e-15);
  const Vector x = random_vector(10, 11);
  EXPECT_EQ(soft_threshold(x, 0.0), x);
  EXPECT_EQ(soft_threshold(vec({1.0, -1.0}), 1.0), Vector::Zero(2));
  EXPECT_THROW(soft_threshold(x, -1.0), std::invalid_argument);
}

TEST(SoftThreshold, MagnitudeMatchesDefinitionOnRandomDraws) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> t(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = Vector::NullaryExpr(4, [&](Index) { return u(rng); });
    const double tau = t(rng);
    const Vector y = soft_threshold(x, tau);
    for (Index k = 0; k < 4; ++k) {
      EXPECT_DOUBLE_EQ(std::fabs(y[k]), std::max(std::fabs(x[k]) - tau, 0.0));
      if (y[k] != 0.0) {
        EXPECT_GT(std::fabs(x[k]), tau);
        EXPECT_EQ(std::signbit(y[k]), std::signbit(x[k]));
      }
    }
  }
}

TEST(SoftThreshold, NonExpansive) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Vector x = random_vector(7, 300 + s);
    const Vector y = random_vector(7, 600 + s);
    const double tau = 0.01 * static_cast<double>(s);
    EXPECT_LE((soft_threshold(x, tau) - soft_threshold(y, tau)).norm(), (x - y).norm() + 1e-15);
  }
}

TEST(HardThreshold, HandValuesAndIdempotence) {
  EXPECT_EQ(hard_threshold(vec({2.5, -0.3, -1.7}), 1.0), vec({2.5, 0.0, -1.7}));
  EXPECT_EQ(hard_threshold(vec({0.0, 1e-300, -2.0}), 0.0), vec({0.0, 1e-300, -2.0}));
  EXPECT_EQ(hard_threshold(vec({1.0, -1.0}), 1.0), Vector::Zero(2));
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Vector x = random_vector(9, 900 + s);
    const Vector once = hard_threshold(x, 0.7);
    EXPECT_EQ(hard_threshold(once, 0.7), once);
  }
}

TEST(OptimalityPrune, MaskFollowsResidualCorrelation) {
  const Eigen::MatrixXd m = random_matrix(8, 6, 13);
  const Vector b = random_vector(8, 14);
  const Vector x = random_vector(6, 15);
  const Vector v = m.transpose() * (b - m * x);
  const double lambda = v.cwiseAbs().mean();
  const Vector out = optimality_prune(x, DenseMatrix(m), b, lambda);
  for (Index k = 0; k < 6; ++k) EXPECT_EQ(out[k], std::fabs(v[k]) <= 0.5 * lambda ? 0.0 : x[k]) << k;
  // x = 0 leaves nothing to keep; A = 0 gives v = 0 and prunes every entry.
  EXPECT_EQ(optimality_prune(Vector::Zero(6), DenseMatrix(m), b, lambda), Vector::Zero(6));
  EXPECT_EQ(optimality_prune(x, DenseMatrix(8, 6), b, lambda), Vector::Zero(6));
}

TEST(OptimalityPrune, KeepsEntriesAboveHalfLambda) {
  // A = I: v = b - x = [2, -0.6, -3, 0]; entries with |v_k| > lambda/2 = 1 survive.
  const Vector b = vec({3.0, 0.4, -2.0, 1.0});
  const Vector x = vec({1.0, 1.0, 1.0, 1.0});
  const Vector kept = optimality_prune(x, DenseMatrix::identity(4), b, 2.0);
  EXPECT_EQ(kept, vec({1.0, 0.0, 1.0, 0.0}));
}

TEST(OptimalityPrune, LargeLambdaZeroesEverything) {
  const Eigen::MatrixXd m = random_matrix(7, 5, 15);
  const Vector b = random_vector(7, 16);
  const Vector x = random_vector(5, 19);
  const Vector v = m.transpose() * (b - m * x);
  EXPECT_EQ(optimality_prune(x, DenseMatrix(m), b, 2.0 * v.cwiseAbs().maxCoeff()), Vector::Zero(5));
}

TEST(OptimalityPrune, PerfectFitPrunesAll) {
  const Vector x = random_vector(5, 18);
  EXPECT_EQ(optimality_prune(x, DenseMatrix::identity(5), x, 1e-6), Vector::Zero(5));
  EXPECT_THROW(optimality_prune(x, DenseMatrix::identity(5), x, 0.0), std::invalid_argument);
}
