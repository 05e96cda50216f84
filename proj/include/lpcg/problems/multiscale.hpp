#pragma once

// A 1-D test signal with structure at several scales: a few piecewise-constant
// plateaus plus wide and narrow smooth bumps, scaled to unit max-norm.

#include "lpcg/linop.hpp"

#include <cstdint>
#include <random>

namespace lpcg::problems {

struct MultiscaleShape {
  int plateaus = 4;
  int wide_bumps = 2;
  int narrow_bumps = 3;
};

inline Vector multiscale_model(Index length, std::uint64_t seed, const MultiscaleShape& shape = {}) {
  if (length < 2 || (length & (length - 1)) != 0)
    throw std::invalid_argument("multiscale_model: length must be a power of two >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> height(-1.0, 1.0);
  const double n = static_cast<double>(length);
  Vector x = Vector::Zero(length);

  for (int k = 0; k < shape.plateaus; ++k) {
    const auto lo = static_cast<Index>(unit(rng) * n);
    const auto width = static_cast<Index>((0.05 + 0.2 * unit(rng)) * n);
    const double h = height(rng);
    for (Index i = lo; i < std::min(length, lo + width); ++i) x[i] += h;
  }
  auto bumps = [&](int count, double rel_width) {
    for (int k = 0; k < count; ++k) {
      const double centre = unit(rng) * n;
      const double w = rel_width * n * (0.75 + 0.5 * unit(rng));
      const double h = height(rng);
      for (Index i = 0; i < length; ++i) {
        const double u = (static_cast<double>(i) - centre) / w;
        x[i] += h * std::exp(-0.5 * u * u);
      }
    }
  };
  bumps(shape.wide_bumps, 1.0 / 12.0);
  bumps(shape.narrow_bumps, 1.0 / 96.0);

  const double peak = x.cwiseAbs().maxCoeff();
  if (peak > 0.0) x /= peak;
  return x;
}

}  // namespace lpcg::problems
