#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "turbcancel/error.hpp"
#include "turbcancel/grid.hpp"
#include "turbcancel/turbulence.hpp"

namespace turbcancel {

// --- detection -----------------------------------------------------------------

/// Power through a vertical slit |x| <= slit_width/2 (all y), in the units of
/// ComplexField::energy(). Each row is integrated with Gauss-Legendre nodes on the
/// band-limited (trigonometric) interpolant of the samples, so slits narrower
/// than a few pixels are still integrated accurately.
double slit_flux(const ComplexField& field, double slit_width);

struct WidthFit {
  double width;
  double x0;
  double y0;
  double amplitude;
  int iterations;
};

/// Thrown when the Gaussian fit does not converge; carries the
/// second-moment estimate of the width.
class WidthFitError : public NumericalGuardError {
 public:
  WidthFitError(const std::string& what, double fallback_width)
      : NumericalGuardError(what), fallback_width_(fallback_width) {}
  double fallback_width() const { return fallback_width_; }

 private:
  double fallback_width_;
};

/// 1/e^2 radius from second moments: w = sqrt(2 <r^2>).
double moment_width(const Grid2D& grid, std::span<const double> intensity);

/// Least-squares fit of A exp(-2 |r - r0|^2 / w^2) to a non-negative map,
/// started from the second moments.
WidthFit measure_long_term_width(const Grid2D& grid, std::span<const double> mean_intensity);

// --- long-term width relation --------------------------------------------------

inline constexpr double kChamberCoefficient = 0.982;
inline constexpr double kOpenAtmosphereCoefficient = 1.33;

/// w_LT^2 = w0^2 [1 + c Lambda^{5/6} sigma_R^2].
double width_from_rytov(double sigma_r2, double w0, double fresnel, double coefficient);
double rytov_from_width(double w_lt, double w0, double fresnel, double coefficient);
/// c Lambda^{5/6}: the alpha of the calibration channel.
double calibration_alpha(double fresnel, double coefficient);

// --- slit transmission model and fit -------------------------------------------

struct ErfModel {
  double slit_width;
  double w0;
};

/// erf(a / w_LT) / erf(a / w0), a = s / sqrt(2), w_LT = w0 sqrt(1 + alpha sigma_R^2).
double erf_transmission_model(double sigma_r2, double alpha, const ErfModel& model);

struct DataPoint {
  double sigma_r2;
  double mean;
  double std_error;
  std::size_t n_samples;
};

struct FitResult {
  double alpha;
  double residual_rms;
  double alpha_ci_halfwidth;  // 95 %
  bool weakly_conditioned;    // less than a 10 % drop across the data
};

/// Weighted least squares for alpha on [0, alpha_max] (Brent). Points at
/// sigma_R^2 = 0 carry no information and are skipped. Throws
/// NumericalGuardError when the data show no decrease at all.
FitResult fit_alpha(std::span<const DataPoint> points, const ErfModel& model, double alpha_max);

// --- virtual experiment --------------------------------------------------------

enum class TurbulenceModel { kolmogorov, tilt };

enum class Channel { laser_calibration, coincidence_direct, coincidence_inverted_x };

/// Turbulence strength of a calibration row. Kolmogorov: 1/r0 (m^-1);
/// tilt: per-axis deflection std (rad). Zero means no turbulence.
struct CalibrationRow {
  double strength;
  double w_lt;
  double sigma_r2;
};

struct ExperimentOptions {
  PhysicalSetup setup;
  Grid2D grid = Grid2D(512, 24.75e-6);
  TurbulenceModel model = TurbulenceModel::kolmogorov;
  int subharmonic_levels = 3;
  double width_coefficient = kChamberCoefficient;
  /// > 0 enables Poisson counting at this mean count per sample.
  double poisson_mean_count = 0.0;
  unsigned threads = 1;
};

struct ChannelCurve {
  Channel channel;
  std::vector<DataPoint> points;
  /// Laser channel only: fitted width of the mean intensity per point.
  std::vector<double> long_term_widths;
};

/// Grid satisfying every sampling guard the experiment uses: resolves both
/// detector waists and the slit, keeps the beams at the screen plane inside
/// the window with edge intensity below 1e-6 of peak (extent >= 6 beam
/// radii), and keeps the Fresnel transfer function unaliased from the screen
/// to the detector.
Grid2D experiment_grid(const PhysicalSetup& setup, std::size_t min_n = 512);

/// The single screen sits halfway along the path.
double screen_position(const PhysicalSetup& setup);

/// Seed of realization i. Every strength, target and channel uses the same
/// sequence (common random numbers): a Kolmogorov or tilt screen at another
/// strength is the same random field rescaled, so curves vary smoothly with
/// strength and calibration and run share their realizations.
std::uint64_t realization_seed(std::uint64_t master_seed, std::size_t index);

class VirtualExperiment {
 public:
  explicit VirtualExperiment(ExperimentOptions options);

  const ExperimentOptions& options() const { return options_; }
  double fresnel() const { return fresnel_; }
  double alpha_c() const;
  /// Erf model with the channel's measured turbulence-free width.
  ErfModel erf_model(Channel channel) const;
  double zero_turbulence_width(Channel channel) const;

  /// Propagates the calibration laser through n_samples screens per strength,
  /// fits the long-term width and inverts the width relation. Rows come back
  /// sorted by strength.
  std::vector<CalibrationRow> calibrate(std::span<const double> strengths, std::size_t n_samples,
                                        std::uint64_t seed) const;

  /// Monotone (PCHIP) inverse of the calibration table.
  double strength_for(double sigma_r2, std::span<const CalibrationRow> calibration) const;

  /// Normalised slit counts for each channel at each target. All channels of
  /// one realization see the same screen.
  std::vector<ChannelCurve> run_monte_carlo(std::span<const Channel> channels,
                                            std::span<const double> sigma_r2_targets,
                                            std::span<const CalibrationRow> calibration,
                                            std::size_t n_samples, std::uint64_t seed) const;

  /// Single realization screen at the calibration wavenumber.
  PhaseScreen draw_screen(double strength, std::uint64_t seed) const;

 private:
  ComplexField detect(const ComplexField& at_screen, const PhaseScreen* screen) const;

  ExperimentOptions options_;
  double fresnel_;
  // Beams at the screen plane. The turbulence-free first half of the path is
  // applied analytically, which halves the window the beams need.
  ComplexField laser_at_screen_;
  ComplexField pump_at_screen_;
  double laser_flux0_ = 0.0;
  double direct_flux0_ = 0.0;
  double laser_width0_ = 0.0;
  double pump_width0_ = 0.0;
};

const char* channel_name(Channel channel);
Channel parse_channel(const std::string& name);

}  // namespace turbcancel
