#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace turbcancel {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

inline double wavenumber(double wavelength) { return 2.0 * kPi / wavelength; }

/// Experiment constants, SI units throughout.
///
/// `w0` is the calibration laser waist on the detection plane and `w_pump`
/// the pump waist on the same plane; the two are kept separate.
struct PhysicalSetup {
  double lambda_pump = 325e-9;
  double lambda_down = 650e-9;
  double lambda_cal = 632.8e-9;
  double distance = 0.90;
  double w0 = 59e-6;
  double w_pump = 60e-6;
  double crystal_thickness = 5e-3;
  double slit_width = 50e-6;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  double k_pump() const { return wavenumber(lambda_pump); }
  double k_down() const { return wavenumber(lambda_down); }
  double k_cal() const { return wavenumber(lambda_cal); }
};

/// Square sampling grid centred on the optical axis: index n/2 is coordinate 0.
class Grid2D {
 public:
  Grid2D(std::size_t n, double dx);

  std::size_t n() const { return n_; }
  double dx() const { return dx_; }
  double extent() const { return static_cast<double>(n_) * dx_; }
  std::size_t size() const { return n_ * n_; }

  double coordinate(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(n_ / 2)) * dx_;
  }
  /// Index of the sample at -coordinate(i), with the unpaired index 0 mapped
  /// onto itself (periodic wrap).
  std::size_t mirror(std::size_t i) const { return (n_ - i) % n_; }

  bool operator==(const Grid2D& other) const = default;

 private:
  std::size_t n_;
  double dx_;
};

Grid2D make_grid(std::size_t n, double extent);

bool same_sampling(const Grid2D& a, const Grid2D& b);

/// Complex samples on a Grid2D, row-major with x along rows: index = iy*n + ix.
class ComplexField {
 public:
  ComplexField(Grid2D grid, double k, std::vector<cdouble> samples);

  const Grid2D& grid() const { return grid_; }
  double k() const { return k_; }
  std::span<const cdouble> samples() const { return samples_; }
  const cdouble& operator()(std::size_t ix, std::size_t iy) const {
    return samples_[iy * grid_.n() + ix];
  }

  /// Sum of |u|^2 dx^2.
  double energy() const;
  std::vector<double> intensity() const;

 private:
  Grid2D grid_;
  double k_;
  std::vector<cdouble> samples_;
};

/// Source-plane field of a Gaussian beam that, after free propagation over
/// `distance_to_target`, has a flat-phase waist of 1/e^2 intensity radius
/// `waist_at_target`. Normalised to unit energy.
ComplexField converging_gaussian(const Grid2D& grid, double k,
                                 double waist_at_target,
                                 double distance_to_target);

/// Analytic 1/e^2 radius of a Gaussian beam a distance z from its waist.
double gaussian_beam_radius(double k, double waist, double z);

/// Lambda = 2L / (k_cal w0^2).
double fresnel_ratio(const PhysicalSetup& setup);

}  // namespace turbcancel
