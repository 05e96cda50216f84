#pragma once

// CDF 9/7 wavelet transform by lifting, periodic boundaries. Each level splits
// the current approximation band into even (s) and odd (d) samples, runs the
// four lifting steps
//
//   d_i += a (s_i + s_{i+1}),  s_i += b (d_i + d_{i-1}),
//   d_i += c (s_i + s_{i+1}),  s_i += e (d_i + d_{i-1}),
//
// scales s by 1/K and d by K, and stores [s | d] in place. The transform is
// biorthogonal, so W^{-T} differs from W and gets its own routine built from
// the transposed lifting steps.

#include "lpcg/linop.hpp"

#include <vector>

namespace lpcg::problems {

namespace cdf97 {

inline constexpr double a = -1.586134342059924;
inline constexpr double b = -0.052980118572961;
inline constexpr double c = 0.882911075530934;
inline constexpr double e = 0.443506852043971;
inline constexpr double K = 1.230174104914001;

namespace detail {

// v[off], v[off + stride], ... with n entries: the strided view that one level
// operates on.
struct Line {
  double* base;
  Index stride;
  Index n;

  double& operator[](Index i) const { return base[i * stride]; }
};

// s_i += coef (d_i + d_{i-1})
inline void update_s(std::vector<double>& s, const std::vector<double>& d, double coef) {
  const std::size_t h = s.size();
  for (std::size_t i = 0; i < h; ++i) s[i] += coef * (d[i] + d[(i + h - 1) % h]);
}

// d_i += coef (s_i + s_{i+1})
inline void update_d(std::vector<double>& d, const std::vector<double>& s, double coef) {
  const std::size_t h = d.size();
  for (std::size_t i = 0; i < h; ++i) d[i] += coef * (s[i] + s[(i + 1) % h]);
}

inline void split(const Line& v, std::vector<double>& s, std::vector<double>& d) {
  const Index h = v.n / 2;
  s.resize(static_cast<std::size_t>(h));
  d.resize(static_cast<std::size_t>(h));
  for (Index i = 0; i < h; ++i) {
    s[static_cast<std::size_t>(i)] = v[2 * i];
    d[static_cast<std::size_t>(i)] = v[2 * i + 1];
  }
}

inline void merge(const Line& v, const std::vector<double>& s, const std::vector<double>& d) {
  const Index h = v.n / 2;
  for (Index i = 0; i < h; ++i) {
    v[2 * i] = s[static_cast<std::size_t>(i)];
    v[2 * i + 1] = d[static_cast<std::size_t>(i)];
  }
}

inline void read_bands(const Line& v, std::vector<double>& s, std::vector<double>& d) {
  const Index h = v.n / 2;
  s.resize(static_cast<std::size_t>(h));
  d.resize(static_cast<std::size_t>(h));
  for (Index i = 0; i < h; ++i) {
    s[static_cast<std::size_t>(i)] = v[i];
    d[static_cast<std::size_t>(i)] = v[h + i];
  }
}

inline void write_bands(const Line& v, const std::vector<double>& s, const std::vector<double>& d) {
  const Index h = v.n / 2;
  for (Index i = 0; i < h; ++i) {
    v[i] = s[static_cast<std::size_t>(i)];
    v[h + i] = d[static_cast<std::size_t>(i)];
  }
}

inline void scale(std::vector<double>& s, std::vector<double>& d, double fs, double fd) {
  for (double& t : s) t *= fs;
  for (double& t : d) t *= fd;
}

inline void forward_level(const Line& v) {
  std::vector<double> s, d;
  split(v, s, d);
  update_d(d, s, a);
  update_s(s, d, b);
  update_d(d, s, c);
  update_s(s, d, e);
  scale(s, d, 1.0 / K, K);
  write_bands(v, s, d);
}

inline void inverse_level(const Line& v) {
  std::vector<double> s, d;
  read_bands(v, s, d);
  scale(s, d, K, 1.0 / K);
  update_s(s, d, -e);
  update_d(d, s, -c);
  update_s(s, d, -b);
  update_d(d, s, -a);
  merge(v, s, d);
}

// Transpose of inverse_level. The transpose of "d_i += k (s_i + s_{i+1})" is
// "s_j += k (d_j + d_{j-1})" and vice versa; the order of steps reverses.
inline void inverse_adjoint_level(const Line& v) {
  std::vector<double> s, d;
  split(v, s, d);
  update_s(s, d, -a);
  update_d(d, s, -b);
  update_s(s, d, -c);
  update_d(d, s, -e);
  scale(s, d, K, 1.0 / K);
  write_bands(v, s, d);
}

}  // namespace detail
}  // namespace cdf97

enum class WaveletOp { forward, inverse, inverse_adjoint };

// Multi-level CDF 9/7 transform of a signal (cols = 1) or a row-major
// rows x cols image. Images use the separable scheme: at every level the
// current approximation block is transformed along rows, then along columns.
class WaveletBasis {
 public:
  WaveletBasis(Index length, int levels) : WaveletBasis(length, 1, levels) {}

  WaveletBasis(Index rows, Index cols, int levels) : rows_(rows), cols_(cols), levels_(levels) {
    if (levels < 0) throw std::invalid_argument("WaveletBasis: levels must be >= 0");
    if (rows < 1 || cols < 1) throw std::invalid_argument("WaveletBasis: empty shape");
    const Index q = Index{1} << levels;
    if (rows % q != 0 || (cols > 1 && cols % q != 0))
      throw std::invalid_argument("WaveletBasis: dimensions must be divisible by 2^levels");
  }

  Index size() const noexcept { return rows_ * cols_; }
  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  int levels() const noexcept { return levels_; }
  bool is_2d() const noexcept { return cols_ > 1; }

  Vector forward(const Vector& x) const { return run(x, WaveletOp::forward); }
  Vector inverse(const Vector& w) const { return run(w, WaveletOp::inverse); }
  Vector inverse_adjoint(const Vector& y) const { return run(y, WaveletOp::inverse_adjoint); }

  Vector run(const Vector& in, WaveletOp op) const {
    lpcg::detail::require_size(in.size(), size(), "WaveletBasis");
    Vector v = in;
    if (op == WaveletOp::inverse) {
      for (int lev = levels_ - 1; lev >= 0; --lev) level(v, lev, op);
    } else {
      for (int lev = 0; lev < levels_; ++lev) level(v, lev, op);
    }
    return v;
  }

 private:
  void level(Vector& v, int lev, WaveletOp op) const {
    const Index r = rows_ >> lev;
    const Index c = is_2d() ? cols_ >> lev : 1;
    auto step = [op](const cdf97::detail::Line& line) {
      switch (op) {
        case WaveletOp::forward:
          cdf97::detail::forward_level(line);
          break;
        case WaveletOp::inverse:
          cdf97::detail::inverse_level(line);
          break;
        case WaveletOp::inverse_adjoint:
          cdf97::detail::inverse_adjoint_level(line);
          break;
      }
    };
    if (!is_2d()) {
      step({v.data(), 1, r});
      return;
    }
    // Row pass then column pass; the inverse undoes them in the opposite order.
    auto rows_pass = [&] {
      for (Index i = 0; i < r; ++i) step({v.data() + i * cols_, 1, c});
    };
    auto cols_pass = [&] {
      for (Index j = 0; j < c; ++j) step({v.data() + j, cols_, r});
    };
    if (op == WaveletOp::inverse) {
      cols_pass();
      rows_pass();
    } else {
      rows_pass();
      cols_pass();
    }
  }

  Index rows_;
  Index cols_;
  int levels_;
};

inline Vector cdf97_forward(const Vector& x, int levels) { return WaveletBasis(x.size(), levels).forward(x); }
inline Vector cdf97_inverse(const Vector& w, int levels) { return WaveletBasis(w.size(), levels).inverse(w); }
inline Vector cdf97_inverse_adjoint(const Vector& y, int levels) {
  return WaveletBasis(y.size(), levels).inverse_adjoint(y);
}

// w -> A W^{-1} w, with transpose y -> W^{-T} A^T y.
template <LinearOperator Op>
class SynthesisOperator {
 public:
  SynthesisOperator(Op a, WaveletBasis w) : a_(std::move(a)), w_(std::move(w)) {
    lpcg::detail::require_size(w_.size(), a_.cols(), "compose_awinv: wavelet size");
  }

  Index rows() const { return a_.rows(); }
  Index cols() const { return a_.cols(); }
  Vector apply(const Vector& w) const { return a_.apply(w_.inverse(w)); }
  Vector apply_transpose(const Vector& y) const { return w_.inverse_adjoint(a_.apply_transpose(y)); }
  const WaveletBasis& basis() const noexcept { return w_; }

 private:
  Op a_;
  WaveletBasis w_;
};

template <LinearOperator Op>
SynthesisOperator<Op> compose_awinv(Op a, WaveletBasis w) {
  return SynthesisOperator<Op>(std::move(a), std::move(w));
}

}  // namespace lpcg::problems
