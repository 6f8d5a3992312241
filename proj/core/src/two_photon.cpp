#include "turbcancel/two_photon.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "turbcancel/propagation.hpp"

namespace turbcancel {

namespace {

void check_wavenumbers(double k_pump, double k_turbulence) {
  if (std::abs(k_pump - 2.0 * k_turbulence) > 0.01 * k_pump) {
    throw std::invalid_argument("wavenumber mismatch: pump k = " + std::to_string(k_pump) +
                                " but turbulence is expressed at k = " +
                                std::to_string(k_turbulence) + " (expected k_p / 2)");
  }
}

}  // namespace

Axis inversion_axis(CoincidenceMode mode) {
  return mode == CoincidenceMode::inverted_xy ? Axis::both : Axis::x;
}

SincCrystal sinc_crystal(double thickness, double k_pump) {
  if (!(thickness > 0.0) || !(k_pump > 0.0)) {
    throw std::invalid_argument("crystal thickness and pump wavenumber must be positive");
  }
  return {thickness / (4.0 * k_pump)};
}

ComplexField coincidence_fast(const KernelConvolver& pump_convolver,
                              const KernelAberration& kernel, CoincidenceMode mode) {
  check_wavenumbers(pump_convolver.k(), kernel.k_ref);
  if (mode == CoincidenceMode::direct) return pump_convolver.apply(kernel, 2.0);
  return pump_convolver.apply(even_part(kernel, inversion_axis(mode)), 2.0);
}

ComplexField coincidence_fast(const ComplexField& pump_source, const Turbulence& turbulence,
                              CoincidenceMode mode, double distance) {
  if (const auto* kernel = std::get_if<KernelAberration>(&turbulence)) {
    if (!same_sampling(kernel->grid, pump_source.grid())) {
      throw std::invalid_argument("kernel grid does not match pump grid");
    }
    return coincidence_fast(KernelConvolver(pump_source, distance), *kernel, mode);
  }

  const auto& screen = std::get<PhaseScreen>(turbulence);
  if (!same_sampling(screen.grid, pump_source.grid())) {
    throw std::invalid_argument("screen grid does not match pump grid");
  }
  return split_step_through_screen(pump_source, pair_screen(screen, mode, pump_source.k()),
                                   distance);
}

PhaseScreen pair_screen(const PhaseScreen& screen, CoincidenceMode mode, double k_pump) {
  check_wavenumbers(k_pump, screen.k_ref);
  // psi_2 = 2 psi at k: the doubled phase is what the pump-like amplitude sees.
  PhaseScreen doubled =
      mode == CoincidenceMode::direct ? screen : even_part(screen, inversion_axis(mode));
  for (auto& v : doubled.phase) v *= 2.0;
  doubled.k_ref = k_pump;
  return doubled;
}

std::vector<cdouble> coincidence_quadrature(const ComplexField& pump_source,
                                            const KernelAberration& kernel, CoincidenceMode mode,
                                            double distance,
                                            std::span<const DetectorPoint> detector_points) {
  const Grid2D& grid = pump_source.grid();
  if (!same_sampling(kernel.grid, grid)) {
    throw std::invalid_argument("kernel grid does not match pump grid");
  }
  check_wavenumbers(pump_source.k(), kernel.k_ref);
  const std::size_t n = grid.n();
  const double work = static_cast<double>(grid.size()) * static_cast<double>(detector_points.size());
  if (n > 256 || work > 4e8) {
    throw std::invalid_argument("coincidence_quadrature is O(n^2) per point; grid of " +
                                std::to_string(n) + " with " +
                                std::to_string(detector_points.size()) + " points is too large");
  }

  const double k = pump_source.k();
  const double lambda = 2.0 * kPi / k;
  const double dx = grid.dx();
  const cdouble prefactor = cdouble(0.0, -1.0) * (dx * dx / (lambda * distance));
  const long half = static_cast<long>(n / 2);
  const long nn = static_cast<long>(n);
  auto wrap = [&](long v) { return static_cast<std::size_t>(((v % nn) + nn) % nn); };
  auto to_index = [&](double coord) {
    const double idx = coord / dx + static_cast<double>(half);
    const long rounded = std::lround(idx);
    if (std::abs(idx - static_cast<double>(rounded)) > 1e-6 || rounded < 0 || rounded >= nn) {
      throw std::invalid_argument("detector point is not on the grid");
    }
    return rounded;
  };
  const bool reflect_x = mode != CoincidenceMode::direct;
  const bool reflect_y = mode == CoincidenceMode::inverted_xy;

  std::vector<cdouble> out;
  out.reserve(detector_points.size());
  for (const auto& point : detector_points) {
    const long dx_idx = to_index(point.x);
    const long dy_idx = to_index(point.y);
    cdouble acc = 0.0;
    for (std::size_t iy = 0; iy < n; ++iy) {
      const long vy = static_cast<long>(iy) - dy_idx;
      const double uy = grid.coordinate(iy) - point.y;
      for (std::size_t ix = 0; ix < n; ++ix) {
        const cdouble e = pump_source(ix, iy);
        if (e == 0.0) continue;
        const long vx = static_cast<long>(ix) - dx_idx;
        const double ux = grid.coordinate(ix) - point.x;
        const double phi = kernel.phase[wrap(half + vy) * n + wrap(half + vx)];
        double psi;
        if (mode == CoincidenceMode::direct) {
          psi = 2.0 * phi;
        } else {
          const long ry = reflect_y ? half - vy : half + vy;
          const long rx = reflect_x ? half - vx : half + vx;
          psi = phi + kernel.phase[wrap(ry) * n + wrap(rx)];
        }
        acc += e * std::polar(1.0, 0.5 * k * (ux * ux + uy * uy) / distance + psi);
      }
    }
    out.push_back(acc * prefactor);
  }
  return out;
}

}  // namespace turbcancel
