#include "turbcancel/turbulence.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "turbcancel/detail/fft.hpp"

namespace turbcancel {

namespace {

// Samples on the unpaired row/column (index 0) have no mirror partner on a
// centred even grid. Kernel samplers zero them so parity relations hold
// sample-for-sample.
void clear_unpaired(std::vector<double>& phase, const Grid2D& grid, Axis axis) {
  const std::size_t n = grid.n();
  if (axis == Axis::x || axis == Axis::both) {
    for (std::size_t iy = 0; iy < n; ++iy) phase[iy * n] = 0.0;
  }
  if (axis == Axis::y || axis == Axis::both) {
    for (std::size_t ix = 0; ix < n; ++ix) phase[ix] = 0.0;
  }
}

// Phase power spectral density per unit area of spatial frequency f in
// cycles/m (0.49 r0^{-5/3} kappa^{-11/3} in rad/m).
double kolmogorov_psd(double f, double r0) {
  return 0.023 * std::pow(r0, -5.0 / 3.0) * std::pow(f, -11.0 / 3.0);
}

// Integral of |u|^{-5/3} over the unit cell centred on (a, b).
double unit_cell_tilt_integral(int a, int b) {
  using Rule = boost::math::quadrature::gauss<double, 30>;
  return Rule::integrate(
      [&](double x) {
        return Rule::integrate([&](double y) { return std::pow(x * x + y * y, -5.0 / 6.0); },
                               b - 0.5, b + 0.5);
      },
      a - 0.5, a + 0.5);
}

// Integral of |u|^{-11/3} u_x^2 over the unit cell centred on the origin.
// In polar form: (1/2) int 3 rho(theta)^{1/3} dtheta, rho the distance to the cell edge.
double central_cell_tilt_integral() {
  using Rule = boost::math::quadrature::gauss<double, 30>;
  const double octant = Rule::integrate(
      [](double t) { return 1.5 * std::cbrt(0.5 / std::cos(t)); }, 0.0, 0.25 * kPi);
  return 8.0 * octant;
}

}  // namespace

KernelAberration zero_kernel(const Grid2D& grid, double k) {
  return {grid, std::vector<double>(grid.size(), 0.0), k};
}

PhaseScreen zero_screen(const Grid2D& grid, double k, double z_screen) {
  return {grid, std::vector<double>(grid.size(), 0.0), k, z_screen};
}

KernelAberration sample_tilt_kernel(const Grid2D& grid, double sigma_theta, double k,
                                    std::uint64_t seed, Axis axis) {
  if (sigma_theta < 0.0) throw std::invalid_argument("sigma_theta must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double theta_x = normal(rng) * sigma_theta;
  const double theta_y = normal(rng) * sigma_theta;
  const double kx = axis == Axis::y ? 0.0 : k * theta_x;
  const double ky = axis == Axis::x ? 0.0 : k * theta_y;

  const std::size_t n = grid.n();
  KernelAberration out{grid, std::vector<double>(grid.size()), k};
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      out.phase[iy * n + ix] = kx * grid.coordinate(ix) + ky * grid.coordinate(iy);
    }
  }
  clear_unpaired(out.phase, grid, axis);
  return out;
}

KernelAberration sample_polynomial_kernel(std::span<const double> coeffs, double u_scale,
                                          Axis axis, const Grid2D& grid, double k,
                                          std::uint64_t seed) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial kernel needs at least one order");
  if (!(u_scale > 0.0)) throw std::invalid_argument("u_scale must be positive");
  for (double c : coeffs) {
    if (c < 0.0) throw std::invalid_argument("polynomial coefficient std must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> ax(coeffs.size(), 0.0);
  std::vector<double> ay(coeffs.size(), 0.0);
  if (axis != Axis::y) {
    for (std::size_t m = 0; m < coeffs.size(); ++m) ax[m] = normal(rng) * coeffs[m];
  }
  if (axis != Axis::x) {
    for (std::size_t m = 0; m < coeffs.size(); ++m) ay[m] = normal(rng) * coeffs[m];
  }

  // Horner on u/u_scale, no constant term.
  auto poly = [&](const std::vector<double>& a, double t) {
    double acc = 0.0;
    for (std::size_t m = a.size(); m-- > 0;) acc = (acc + a[m]) * t;
    return acc;
  };

  const std::size_t n = grid.n();
  std::vector<double> px(n), py(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = grid.coordinate(i) / u_scale;
    px[i] = poly(ax, t);
    py[i] = poly(ay, t);
  }
  KernelAberration out{grid, std::vector<double>(grid.size()), k};
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) out.phase[iy * n + ix] = px[ix] + py[iy];
  }
  clear_unpaired(out.phase, grid, axis);
  return out;
}

PhaseScreen make_kolmogorov_screen(const Grid2D& grid, double r0, double k, std::uint64_t seed,
                                   int subharmonic_levels, double z_screen) {
  if (std::isinf(r0) && r0 > 0.0) return zero_screen(grid, k, z_screen);
  if (!(r0 > 2.0 * grid.dx())) {
    throw std::invalid_argument("Fried parameter r0 = " + std::to_string(r0) +
                                " m is unresolvable (need r0 > 2 dx = " +
                                std::to_string(2.0 * grid.dx()) + " m)");
  }
  if (subharmonic_levels < 0) throw std::invalid_argument("subharmonic_levels must be >= 0");

  const std::size_t n = grid.n();
  const double df = 1.0 / grid.extent();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<cdouble> spectrum(grid.size());
  for (std::size_t my = 0; my < n; ++my) {
    const double fy = static_cast<double>(detail::fft_index(my, n)) * df;
    for (std::size_t mx = 0; mx < n; ++mx) {
      const double fx = static_cast<double>(detail::fft_index(mx, n)) * df;
      const double re = normal(rng);
      const double im = normal(rng);
      const double f = std::hypot(fx, fy);
      if (f == 0.0) continue;
      spectrum[my * n + mx] = cdouble(re, im) * (std::sqrt(kolmogorov_psd(f, r0)) * df);
    }
  }
  detail::fft_2d(spectrum, n, detail::FftSign::backward);

  PhaseScreen out{grid, std::vector<double>(grid.size()), k, z_screen};
  for (std::size_t i = 0; i < grid.size(); ++i) out.phase[i] = spectrum[i].real();

  // Subharmonics: 3x3 frequency patches at df / 3^p around the origin. Point
  // sampling the steep spectrum near the origin underweights it, so each
  // subharmonic carries the tilt content of its whole cell, and the tilt of
  // the innermost cell left over after the last level is added explicitly.
  const double amplitude = 0.023 * std::pow(r0, -5.0 / 3.0);
  const double edge_cell = unit_cell_tilt_integral(1, 0);
  const double corner_cell = unit_cell_tilt_integral(1, 1);
  std::vector<double> low(grid.size(), 0.0);
  std::vector<cdouble> ex(n), ey(n);
  double scale = df;
  for (int p = 1; p <= subharmonic_levels; ++p) {
    scale /= 3.0;
    for (int sy = -1; sy <= 1; ++sy) {
      for (int sx = -1; sx <= 1; ++sx) {
        const double re = normal(rng);
        const double im = normal(rng);
        if (sx == 0 && sy == 0) continue;
        const double fx = sx * scale;
        const double fy = sy * scale;
        const bool corner = sx != 0 && sy != 0;
        const double variance = amplitude * std::cbrt(scale) * (corner ? corner_cell : edge_cell) /
                                (scale * scale * (corner ? 2.0 : 1.0));
        const cdouble c = cdouble(re, im) * std::sqrt(variance);
        const double kx = 2.0 * kPi * fx;
        const double ky = 2.0 * kPi * fy;
        for (std::size_t i = 0; i < n; ++i) {
          ex[i] = std::polar(1.0, kx * grid.coordinate(i));
          ey[i] = std::polar(1.0, ky * grid.coordinate(i));
        }
        for (std::size_t iy = 0; iy < n; ++iy) {
          const cdouble cy = c * ey[iy];
          for (std::size_t ix = 0; ix < n; ++ix) {
            low[iy * n + ix] += (cy * ex[ix]).real();
          }
        }
      }
    }
  }
  if (subharmonic_levels > 0) {
    const double sigma = std::sqrt(amplitude * std::cbrt(scale) * central_cell_tilt_integral());
    const double ax = 2.0 * kPi * sigma * normal(rng);
    const double ay = 2.0 * kPi * sigma * normal(rng);
    for (std::size_t iy = 0; iy < n; ++iy) {
      for (std::size_t ix = 0; ix < n; ++ix) {
        low[iy * n + ix] += ax * grid.coordinate(ix) + ay * grid.coordinate(iy);
      }
    }
  }

  double mean = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.phase[i] += low[i];
    mean += out.phase[i];
  }
  mean /= static_cast<double>(grid.size());
  for (auto& v : out.phase) v -= mean;
  return out;
}

PhaseScreen make_tilt_screen(const Grid2D& grid, double theta_x, double theta_y, double k,
                             double z_screen) {
  const std::size_t n = grid.n();
  PhaseScreen out{grid, std::vector<double>(grid.size()), k, z_screen};
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      out.phase[iy * n + ix] = k * (theta_x * grid.coordinate(ix) + theta_y * grid.coordinate(iy));
    }
  }
  return out;
}

PhaseScreen to_screen(const KernelAberration& kernel, double z_screen) {
  return {kernel.grid, kernel.phase, kernel.k_ref, z_screen};
}

std::vector<double> even_part(std::span<const double> phase, const Grid2D& grid, Axis axis) {
  const std::size_t n = grid.n();
  if (phase.size() != grid.size()) throw std::invalid_argument("phase size does not match grid");
  const bool mx = axis != Axis::y;
  const bool my = axis != Axis::x;
  std::vector<double> out(phase.size());
  for (std::size_t iy = 0; iy < n; ++iy) {
    const std::size_t ry = my ? grid.mirror(iy) : iy;
    for (std::size_t ix = 0; ix < n; ++ix) {
      const std::size_t rx = mx ? grid.mirror(ix) : ix;
      out[iy * n + ix] = 0.5 * (phase[iy * n + ix] + phase[ry * n + rx]);
    }
  }
  return out;
}

KernelAberration even_part(const KernelAberration& kernel, Axis axis) {
  return {kernel.grid, even_part(kernel.phase, kernel.grid, axis), kernel.k_ref};
}

PhaseScreen even_part(const PhaseScreen& screen, Axis axis) {
  return {screen.grid, even_part(screen.phase, screen.grid, axis), screen.k_ref, screen.z_screen};
}

KernelAberration scale_to_wavenumber(const KernelAberration& kernel, double k_new) {
  if (!(k_new > 0.0)) throw std::invalid_argument("wavenumber must be positive");
  KernelAberration out = kernel;
  const double factor = k_new / kernel.k_ref;
  for (auto& v : out.phase) v *= factor;
  out.k_ref = k_new;
  return out;
}

PhaseScreen scale_to_wavenumber(const PhaseScreen& screen, double k_new) {
  if (!(k_new > 0.0)) throw std::invalid_argument("wavenumber must be positive");
  PhaseScreen out = screen;
  const double factor = k_new / screen.k_ref;
  for (auto& v : out.phase) v *= factor;
  out.k_ref = k_new;
  return out;
}

}  // namespace turbcancel
