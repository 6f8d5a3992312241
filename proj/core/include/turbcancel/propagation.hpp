#pragma once

#include <vector>

#include "turbcancel/grid.hpp"
#include "turbcancel/turbulence.hpp"

namespace turbcancel {

/// Paraxial angular-spectrum propagation over `distance` (>= 0) with the
/// transfer function exp(-i pi lambda z (fx^2 + fy^2)); the common factor
/// exp(ikz) is dropped.
///
/// The transfer function must be sampled without aliasing: its phase step
/// between neighbouring frequency bins, pi lambda z / (n dx^2) at the band
/// edge, has to stay below pi. Otherwise NumericalGuardError.
ComplexField fresnel_propagate(const ComplexField& field, double distance);

/// Maximum distance fresnel_propagate accepts on this grid at wavenumber k.
double max_transfer_distance(const Grid2D& grid, double k);

/// Multiplies by exp(i phi k/k_ref); the screen's z is not used.
ComplexField apply_screen(const ComplexField& field, const PhaseScreen& screen);

/// Propagate to the screen plane, apply exp(i phi k/k_ref), propagate the rest.
ComplexField split_step_through_screen(const ComplexField& source, const PhaseScreen& screen,
                                       double total_distance);

/// Difference-kernel propagation:
///
///   out(rho) = (1 / i lambda L) sum_rho' E(rho') h(rho' - rho) dx^2,
///   h(u) = exp(i k |u|^2 / 2L) exp(i phi(u)),
///
/// evaluated as a circular FFT convolution. The sampled chirp must not alias
/// anywhere on the grid: n dx^2 <= lambda L.
ComplexField kernel_convolve(const ComplexField& source, const KernelAberration& kernel,
                             double total_distance);

/// Minimum distance kernel_convolve accepts on this grid at wavenumber k.
double min_kernel_distance(const Grid2D& grid, double k);

/// Reusable form of kernel_convolve for many kernels against one source.
class KernelConvolver {
 public:
  KernelConvolver(const ComplexField& source, double total_distance);

  ComplexField apply(const KernelAberration& kernel) const;
  /// Same, with the kernel phase multiplied by `phase_scale` on the fly.
  ComplexField apply(const KernelAberration& kernel, double phase_scale) const;

  const Grid2D& grid() const { return grid_; }
  double k() const { return k_; }

 private:
  Grid2D grid_;
  double k_;
  double distance_;
  std::vector<cdouble> source_spectrum_;
  std::vector<double> chirp_phase_;  // k|u|^2/2L at reflected FFT positions
  std::vector<std::size_t> reflected_;  // FFT position -> centred kernel index of -u
};

}  // namespace turbcancel
