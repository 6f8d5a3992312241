#pragma once

#include <span>
#include <variant>
#include <vector>

#include "turbcancel/grid.hpp"
#include "turbcancel/turbulence.hpp"

namespace turbcancel {

/// Which detector pairing the coincidence amplitude is evaluated for.
/// `direct`: both photons at rho. Inverted modes: one photon has its
/// transverse momentum reflected (along x, or along x and y) and is detected
/// at the mirrored point.
enum class CoincidenceMode { direct, inverted_x, inverted_xy };

/// Axis reflected by an inverted mode.
Axis inversion_axis(CoincidenceMode mode);

using Turbulence = std::variant<KernelAberration, PhaseScreen>;

/// Thin-crystal limit: the phase-matching kernel is a delta.
struct DeltaCrystal {};
/// Finite crystal: sinc(beta |q1 - q2|^2), beta = tau / (4 k_p).
struct SincCrystal {
  double beta;
};
using CrystalModel = std::variant<DeltaCrystal, SincCrystal>;

SincCrystal sinc_crystal(double thickness, double k_pump);

/// Two-photon coincidence amplitude on the detector grid in the thin-crystal
/// approximation. The pump is given at k_p and the turbulence at the
/// down-converted wavenumber k = k_p/2.
///
/// Direct mode propagates the pump with the turbulence phase doubled. The
/// inverted modes do the same with phi(m) + phi(-m) = 2 even_part(phi)(m),
/// the reflection taken along the inverted axes. Kernels go through
/// kernel_convolve; screens through split_step_through_screen, where the even
/// part is taken at the screen plane.
ComplexField coincidence_fast(const ComplexField& pump_source, const Turbulence& turbulence,
                              CoincidenceMode mode, double distance);

/// Screen seen by the pump-like pair amplitude: 2 phi (direct) or
/// 2 even_part(phi) (inverted), re-expressed at k_pump.
PhaseScreen pair_screen(const PhaseScreen& screen_at_k, CoincidenceMode mode, double k_pump);

class KernelConvolver;

/// Kernel-form coincidence_fast reusing a convolver built for the pump.
ComplexField coincidence_fast(const KernelConvolver& pump_convolver,
                              const KernelAberration& kernel, CoincidenceMode mode);

struct DetectorPoint {
  double x;
  double y;
};

/// Brute-force Riemann sum of the same single integral for a kernel, at the
/// given grid points. Difference coordinates outside the sampled window wrap
/// periodically. Intended as an oracle for coincidence_fast on small grids.
std::vector<cdouble> coincidence_quadrature(const ComplexField& pump_source,
                                            const KernelAberration& kernel, CoincidenceMode mode,
                                            double distance,
                                            std::span<const DetectorPoint> detector_points);

// --- one-dimensional finite-crystal path -------------------------------------

/// Complex samples on a centred 1-D grid (index n/2 is x = 0).
struct Field1D {
  double dx;
  double k;
  std::vector<cdouble> samples;

  double coordinate(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(samples.size() / 2)) * dx;
  }
};

Field1D converging_gaussian_1d(std::size_t n, double dx, double k, double waist_at_target,
                               double distance_to_target);

/// 1-D polynomial difference kernel phi(u) = sum_n a_n (u/u_scale)^n at k_ref.
struct PolynomialKernel1D {
  std::vector<double> amplitudes;  // a_1 .. a_m
  double u_scale = 1.0;
  double k_ref = 1.0;

  double operator()(double u) const;
};

/// Thin-crystal 1-D amplitude by direct summation.
std::vector<cdouble> coincidence_quadrature_1d(const Field1D& pump, const PolynomialKernel1D& kernel,
                                               CoincidenceMode mode, double distance,
                                               std::span<const double> detector_points);

struct SincQuadratureOptions {
  /// Spacing of the pair-separation coordinate; must divide the pump dx.
  double separation_step = 1e-6;
  /// Minimum number of separation samples (rounded up to a power of two).
  std::size_t min_separation_samples = 64;
};

/// Double integral over both source coordinates with the phase-matching
/// kernel S (the Fourier transform of the sinc spectrum, normalised to unit
/// area so that S -> delta recovers coincidence_quadrature_1d).
///
/// Inverted mode is evaluated in the frame of the reflected photon, where its
/// aberration enters as phi(-(rho'_2 - rho)).
std::vector<cdouble> spdc_sinc_amplitude(const Field1D& pump, const CrystalModel& crystal,
                                         const PolynomialKernel1D& kernel, CoincidenceMode mode,
                                         double distance, std::span<const double> detector_points,
                                         const SincQuadratureOptions& options = {});

/// Samples of the unit-area phase-matching kernel S(s) at s = j * step,
/// j = -n/2 .. n/2-1. Throws NumericalGuardError if the sinc spectrum's
/// chirp is not resolved by `n` samples.
std::vector<double> phase_matching_kernel(double beta, double step, std::size_t n);

/// Smallest power-of-two sample count that resolves S for this beta and step.
std::size_t phase_matching_samples(double beta, double step, std::size_t minimum = 64);

}  // namespace turbcancel
