#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "turbcancel/grid.hpp"

namespace turbcancel::testing {

struct Moments {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;  // sqrt(2 <r^2>) about the centroid
};

inline Moments intensity_moments(const Grid2D& grid, std::span<const double> intensity) {
  const std::size_t n = grid.n();
  double sum = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double v = intensity[iy * n + ix];
      sum += v;
      sx += v * grid.coordinate(ix);
      sy += v * grid.coordinate(iy);
    }
  }
  Moments m;
  m.x = sx / sum;
  m.y = sy / sum;
  double r2 = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double dx = grid.coordinate(ix) - m.x;
      const double dy = grid.coordinate(iy) - m.y;
      r2 += intensity[iy * n + ix] * (dx * dx + dy * dy);
    }
  }
  m.width = std::sqrt(2.0 * r2 / sum);
  return m;
}

inline Moments field_moments(const ComplexField& field) {
  const auto intensity = field.intensity();
  return intensity_moments(field.grid(), intensity);
}

// Moments of the intensity inside |x|, |y| < extent/4. Circular convolution
// with a chirp kernel is only valid there; the wrapped tails land outside.
inline Moments central_moments(const ComplexField& field) {
  const Grid2D& grid = field.grid();
  const std::size_t n = grid.n();
  auto intensity = field.intensity();
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const bool inside = ix >= n / 4 && ix < 3 * n / 4 && iy >= n / 4 && iy < 3 * n / 4;
      if (!inside) intensity[iy * n + ix] = 0.0;
    }
  }
  return intensity_moments(grid, intensity);
}

inline double relative_l2(std::span<const cdouble> a, std::span<const cdouble> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

// Samples with |x|, |y| < extent/4.
inline std::vector<cdouble> central_half(const ComplexField& field) {
  const std::size_t n = field.grid().n();
  std::vector<cdouble> out;
  for (std::size_t iy = n / 4; iy < 3 * n / 4; ++iy) {
    for (std::size_t ix = n / 4; ix < 3 * n / 4; ++ix) out.push_back(field(ix, iy));
  }
  return out;
}

inline double max_abs_difference(std::span<const cdouble> a, std::span<const cdouble> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double max_abs(std::span<const cdouble> a) {
  double worst = 0.0;
  for (const auto& v : a) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace turbcancel::testing
