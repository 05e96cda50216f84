#pragma once

// Shared vocabulary types and error classes for the lpcg solvers.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace lpcg {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown when an operand does not have the length an operation expects.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what, Index got, Index expected)
      : std::invalid_argument(what + ": got length " + std::to_string(got) +
                              ", expected " + std::to_string(expected)),
        got_(got),
        expected_(expected) {}

  Index got() const noexcept { return got_; }
  Index expected() const noexcept { return expected_; }

 private:
  Index got_;
  Index expected_;
};

// Conjugate gradients met a search direction with non-positive curvature,
// i.e. the system it was handed is not positive definite.
class CgBreakdown : public std::runtime_error {
 public:
  CgBreakdown(int cg_iteration, double curvature, int outer_iteration = -1)
      : std::runtime_error(format(cg_iteration, curvature, outer_iteration)),
        cg_iteration_(cg_iteration),
        outer_iteration_(outer_iteration),
        curvature_(curvature) {}

  int cg_iteration() const noexcept { return cg_iteration_; }
  int outer_iteration() const noexcept { return outer_iteration_; }
  double curvature() const noexcept { return curvature_; }

 private:
  static std::string format(int k, double c, int outer) {
    std::string s = "CG breakdown at inner iteration " + std::to_string(k) +
                    " (curvature " + std::to_string(c) + ")";
    if (outer >= 0) s += " during outer iteration " + std::to_string(outer);
    return s;
  }

  int cg_iteration_;
  int outer_iteration_;
  double curvature_;
};

// A solver produced a non-finite value or otherwise could not continue.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

namespace detail {

inline void require_size(Index got, Index expected, const char* what) {
  if (got != expected) throw DimensionError(what, got, expected);
}

inline double sign(double t) { return (t > 0.0) - (t < 0.0); }

}  // namespace detail

// Number of entries with |x_k| > rel_tol * max|x|. rel_tol = 0 counts exact
// nonzeros.
inline Index count_nonzeros(const Vector& x, double rel_tol = 1e-8) {
  if (x.size() == 0) return 0;
  const double cutoff = rel_tol * x.cwiseAbs().maxCoeff();
  Index n = 0;
  for (Index k = 0; k < x.size(); ++k)
    if (std::abs(x[k]) > cutoff) ++n;
  return n;
}

inline bool all_finite(const Vector& x) { return x.allFinite(); }

}  // namespace lpcg
