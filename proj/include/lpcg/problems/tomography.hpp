#pragma once

// Straight-ray travel-time tomography on the unit square split into g x g
// pixels. Pixel (ix, iy) covers [ix/g, (ix+1)/g] x [iy/g, (iy+1)/g] and has
// index iy * g + ix. A_ij is the length of ray i inside pixel j.

#include "lpcg/linop.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace lpcg::problems {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Ray {
  Point from;
  Point to;

  double length() const { return std::hypot(to.x - from.x, to.y - from.y); }
};

struct TomographyGeometry {
  int grid = 0;
  std::vector<Ray> rays;
  CsrMatrix A;
};

// (pixel, length) pairs of one ray, sorted by pixel. Segment breakpoints are
// the parameters where the ray meets a grid line; each segment is charged to
// the pixel containing its midpoint, so the lengths sum to the ray length.
inline std::vector<std::pair<Index, double>> ray_row(int g, const Ray& ray) {
  if (g < 1) throw std::invalid_argument("ray_row: grid must be >= 1");
  const double dx = ray.to.x - ray.from.x;
  const double dy = ray.to.y - ray.from.y;
  const double len = ray.length();
  std::vector<double> ts{0.0, 1.0};
  auto crossings = [&](double start, double delta) {
    if (delta == 0.0) return;
    for (int k = 0; k <= g; ++k) {
      const double t = (static_cast<double>(k) / g - start) / delta;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  };
  crossings(ray.from.x, dx);
  crossings(ray.from.y, dy);
  std::sort(ts.begin(), ts.end());

  std::map<Index, double> acc;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double dt = ts[k] - ts[k - 1];
    if (!(dt > 0.0)) continue;
    const double tm = 0.5 * (ts[k] + ts[k - 1]);
    const int ix = std::clamp(static_cast<int>(std::floor((ray.from.x + tm * dx) * g)), 0, g - 1);
    const int iy = std::clamp(static_cast<int>(std::floor((ray.from.y + tm * dy) * g)), 0, g - 1);
    acc[static_cast<Index>(iy) * g + ix] += dt * len;
  }
  return {acc.begin(), acc.end()};
}

namespace detail {

// Uniform point on side 0..3 (bottom, right, top, left) of the unit square.
inline Point boundary_point(int side, double u) {
  switch (side) {
    case 0:
      return {u, 0.0};
    case 1:
      return {1.0, u};
    case 2:
      return {u, 1.0};
    default:
      return {0.0, u};
  }
}

}  // namespace detail

// m rays between uniform points on two different sides of the square. Rays
// shorter than 1/g are redrawn.
inline TomographyGeometry build_tomography(int g, int m, std::uint64_t seed) {
  if (g < 2) throw std::invalid_argument("build_tomography: grid must be >= 2");
  if (m < 1) throw std::invalid_argument("build_tomography: need at least one ray");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> side(0, 3);
  std::uniform_int_distribution<int> other(1, 3);

  TomographyGeometry geo;
  geo.grid = g;
  geo.rays.reserve(static_cast<std::size_t>(m));
  std::vector<Triplet> trip;
  while (static_cast<int>(geo.rays.size()) < m) {
    const int s0 = side(rng);
    const int s1 = (s0 + other(rng)) % 4;
    const Point p0 = detail::boundary_point(s0, unit(rng));
    const Point p1 = detail::boundary_point(s1, unit(rng));
    const Ray ray{p0, p1};
    if (ray.length() < 1.0 / g) continue;
    const auto row = static_cast<Index>(geo.rays.size());
    for (const auto& [col, v] : ray_row(g, ray)) trip.push_back({row, col, v});
    geo.rays.push_back(ray);
  }
  const Index n = static_cast<Index>(g) * g;
  geo.A = CsrMatrix(m, n, trip);
  return geo;
}

// +amplitude / -amplitude in block x block tiles, +amplitude at pixel 0.
inline Vector checkerboard(int g, int block, double amplitude) {
  if (g < 1 || block < 1 || g % block != 0)
    throw std::invalid_argument("checkerboard: block must divide the grid side");
  Vector x(static_cast<Index>(g) * g);
  for (int iy = 0; iy < g; ++iy)
    for (int ix = 0; ix < g; ++ix)
      x[static_cast<Index>(iy) * g + ix] = ((ix / block + iy / block) % 2 == 0) ? amplitude : -amplitude;
  return x;
}

struct NoiseModel {
  double gauss_rel_std = 0.05;
  double outlier_frac = 0.10;
  double outlier_scale = 5.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gauss_rel_std >= 0.0)) throw std::invalid_argument("NoiseModel: gauss_rel_std must be >= 0");
    if (!(outlier_frac >= 0.0 && outlier_frac <= 1.0))
      throw std::invalid_argument("NoiseModel: outlier_frac must lie in [0, 1]");
    if (!(outlier_scale >= 0.0)) throw std::invalid_argument("NoiseModel: outlier_scale must be >= 0");
  }
};

struct NoisyData {
  Vector b_noisy;
  Vector b_outliers;
  double rms_clean = 0.0;
  double noise_norm = 0.0;            // ||b_noisy - b_clean||_2
  std::vector<Index> outlier_indices;  // sorted
};

inline double rms(const Vector& v) { return v.size() ? v.norm() / std::sqrt(static_cast<double>(v.size())) : 0.0; }

// b_noisy = b_clean + N(0, (gauss_rel_std rms)^2) per entry; b_outliers adds
// +-outlier_scale rms U[0.5, 1] on ceil(outlier_frac m) distinct entries.
inline NoisyData add_noise_and_outliers(const Vector& b_clean, const NoiseModel& model) {
  model.validate();
  const Index m = b_clean.size();
  std::mt19937_64 rng(model.seed);
  NoisyData out;
  out.rms_clean = rms(b_clean);

  out.b_noisy = b_clean;
  const double sd = model.gauss_rel_std * out.rms_clean;
  if (sd > 0.0) {
    std::normal_distribution<double> normal(0.0, sd);
    for (Index i = 0; i < m; ++i) out.b_noisy[i] += normal(rng);
  }
  out.noise_norm = (out.b_noisy - b_clean).norm();

  out.b_outliers = out.b_noisy;
  const auto count = static_cast<Index>(std::ceil(model.outlier_frac * static_cast<double>(m) - 1e-9));
  if (count > 0) {
    std::vector<Index> idx(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates: the first `count` slots form a uniform sample.
    for (Index k = 0; k < count; ++k) {
      std::uniform_int_distribution<Index> pick(k, m - 1);
      std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    std::uniform_real_distribution<double> mag(0.5, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (Index i : idx) {
      const double a = model.outlier_scale * out.rms_clean * mag(rng);
      out.b_outliers[i] += coin(rng) ? a : -a;
    }
    out.outlier_indices = std::move(idx);
  }
  return out;
}

}  // namespace lpcg::problems
