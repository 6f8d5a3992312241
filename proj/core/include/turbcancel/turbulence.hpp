#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "turbcancel/grid.hpp"

namespace turbcancel {

enum class Axis { x, y, both };

/// Difference-coordinate phase phi(u), u = rho' - rho, for the uniform
/// turbulence model. Sample (n/2, n/2) is u = 0. The complex factor applied
/// at use sites is exp(i phi).
struct KernelAberration {
  Grid2D grid;
  std::vector<double> phase;
  double k_ref;
};

/// Pure-phase screen at a plane z_screen along the path.
struct PhaseScreen {
  Grid2D grid;
  std::vector<double> phase;
  double k_ref;
  double z_screen;
};

/// Random wavefront tilt: phi(u) = k (theta . u) with each component of the
/// deflection theta drawn from N(0, sigma_theta^2). Components not selected
/// by `axis` are zero.
KernelAberration sample_tilt_kernel(const Grid2D& grid, double sigma_theta, double k,
                                    std::uint64_t seed, Axis axis = Axis::both);

/// phi(u) = sum_n a_n (u_axis / u_scale)^n with a_n ~ N(0, coeffs[n-1]^2).
/// For Axis::both each axis gets its own independent set of amplitudes.
KernelAberration sample_polynomial_kernel(std::span<const double> coeffs, double u_scale,
                                          Axis axis, const Grid2D& grid, double k,
                                          std::uint64_t seed);

/// Kernel with every sample zero (no turbulence).
KernelAberration zero_kernel(const Grid2D& grid, double k);

/// Kolmogorov phase screen by FFT spectral synthesis, D(r) = 6.88 (r/r0)^{5/3},
/// with `subharmonic_levels` rounds of 3x3 subharmonic sampling for the
/// low-order content the FFT grid misses. r0 = +inf gives the zero screen.
PhaseScreen make_kolmogorov_screen(const Grid2D& grid, double r0, double k, std::uint64_t seed,
                                   int subharmonic_levels = 3, double z_screen = 0.45);

/// Linear-phase screen deflecting by (theta_x, theta_y).
PhaseScreen make_tilt_screen(const Grid2D& grid, double theta_x, double theta_y, double k,
                             double z_screen);

PhaseScreen zero_screen(const Grid2D& grid, double k, double z_screen);

/// Reinterprets kernel samples as a screen (same grid, same phase values).
PhaseScreen to_screen(const KernelAberration& kernel, double z_screen);

/// [phi(u) + phi(-u)] / 2 with the reflection restricted to `axis`.
KernelAberration even_part(const KernelAberration& kernel, Axis axis);
PhaseScreen even_part(const PhaseScreen& screen, Axis axis);

/// Low-level form shared by both overloads.
std::vector<double> even_part(std::span<const double> phase, const Grid2D& grid, Axis axis);

/// Turbulence phase is k times an optical path, so re-expressing at another
/// wavenumber multiplies every sample by k_new / k_ref.
KernelAberration scale_to_wavenumber(const KernelAberration& kernel, double k_new);
PhaseScreen scale_to_wavenumber(const PhaseScreen& screen, double k_new);

struct StructureBin {
  double r;
  double d;
  double std_error;
  std::size_t lag_count;
};

/// Isotropically binned D(r) = <[phi(x+r) - phi(x)]^2> over an ensemble of
/// screens on a common grid. Bins are unit-pixel radial shells r = m dx,
/// m = 1..n/2; the standard error is across ensemble members.
std::vector<StructureBin> estimate_structure_function(std::span<const PhaseScreen> ensemble);

/// Streaming form of estimate_structure_function: screens are added one at a
/// time so large ensembles need not be held in memory.
class StructureFunctionAccumulator {
 public:
  explicit StructureFunctionAccumulator(const Grid2D& grid);

  void add(const PhaseScreen& screen);
  std::size_t count() const { return count_; }
  /// Requires at least 50 screens.
  std::vector<StructureBin> result() const;

 private:
  Grid2D grid_;
  std::vector<cdouble> w_hat_;
  std::vector<int> bin_of_;
  std::vector<double> den_bin_;
  std::vector<double> radius_bin_;
  std::vector<std::size_t> lags_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::size_t count_ = 0;
};

/// Theoretical Kolmogorov structure function.
inline double kolmogorov_structure_function(double r, double r0) {
  return 6.88 * std::pow(r / r0, 5.0 / 3.0);
}

}  // namespace turbcancel
