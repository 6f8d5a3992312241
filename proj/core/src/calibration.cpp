#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <math.h>  // pchip.hpp calls unqualified isnan

#include <boost/math/interpolators/pchip.hpp>

#include "turbcancel/detail/parallel.hpp"
#include "turbcancel/experiment.hpp"
#include "turbcancel/propagation.hpp"
#include "turbcancel/two_photon.hpp"

namespace turbcancel {

namespace {

// Coordinate in which sigma_R^2 is close to linear in the strength.
double strength_coordinate(TurbulenceModel model, double strength) {
  return model == TurbulenceModel::kolmogorov ? std::pow(strength, 5.0 / 3.0)
                                              : strength * strength;
}

double strength_from_coordinate(TurbulenceModel model, double g) {
  g = std::max(g, 0.0);
  return model == TurbulenceModel::kolmogorov ? std::pow(g, 0.6) : std::sqrt(g);
}

constexpr std::uint64_t kRealizationStream = 1;

}  // namespace

double screen_position(const PhysicalSetup& setup) { return 0.5 * setup.distance; }

std::uint64_t realization_seed(std::uint64_t master_seed, std::size_t index) {
  return detail::derive_seed(master_seed, kRealizationStream, index);
}

const char* channel_name(Channel channel) {
  switch (channel) {
    case Channel::laser_calibration:
      return "laser_calibration";
    case Channel::coincidence_direct:
      return "coincidence_direct";
    case Channel::coincidence_inverted_x:
      return "coincidence_inverted_x";
  }
  return "unknown";
}

Channel parse_channel(const std::string& name) {
  for (Channel c : {Channel::laser_calibration, Channel::coincidence_direct,
                    Channel::coincidence_inverted_x}) {
    if (name == channel_name(c)) return c;
  }
  throw std::invalid_argument("unknown channel '" + name +
                              "' (expected laser_calibration, coincidence_direct or "
                              "coincidence_inverted_x)");
}

Grid2D experiment_grid(const PhysicalSetup& setup, std::size_t min_n) {
  setup.validate();
  const double remaining = setup.distance - screen_position(setup);
  const double screen_radius =
      std::max(gaussian_beam_radius(setup.k_cal(), setup.w0, remaining),
               gaussian_beam_radius(setup.k_pump(), setup.w_pump, remaining));
  const double min_extent = 6.0 * screen_radius;
  const double max_dx = 0.5 * std::min({setup.w0, setup.w_pump, setup.slit_width});
  const double lambda = std::max(setup.lambda_cal, setup.lambda_pump);
  for (std::size_t n = 32; n <= 8192; n *= 2) {
    if (n < min_n) continue;
    const double nd = static_cast<double>(n);
    const double dx = std::max(min_extent / nd, std::sqrt(lambda * remaining / nd));
    if (dx <= max_dx) return Grid2D(n, dx);
  }
  throw NumericalGuardError("no grid up to 8192 samples satisfies the sampling constraints");
}

VirtualExperiment::VirtualExperiment(ExperimentOptions options)
    : options_(std::move(options)),
      fresnel_(fresnel_ratio(options_.setup)),
      laser_at_screen_(converging_gaussian(options_.grid, options_.setup.k_cal(),
                                           options_.setup.w0,
                                           options_.setup.distance - screen_position(options_.setup))),
      pump_at_screen_(converging_gaussian(options_.grid, options_.setup.k_pump(),
                                          options_.setup.w_pump,
                                          options_.setup.distance - screen_position(options_.setup))) {
  options_.setup.validate();
  if (options_.subharmonic_levels < 0) throw std::invalid_argument("subharmonic_levels must be >= 0");
  if (!(options_.width_coefficient > 0.0)) throw std::invalid_argument("coefficient must be positive");
  if (options_.poisson_mean_count < 0.0) throw std::invalid_argument("poisson mean must be >= 0");

  const ComplexField laser = detect(laser_at_screen_, nullptr);
  laser_flux0_ = slit_flux(laser, options_.setup.slit_width);
  laser_width0_ = measure_long_term_width(options_.grid, laser.intensity()).width;

  const ComplexField pump = detect(pump_at_screen_, nullptr);
  direct_flux0_ = slit_flux(pump, options_.setup.slit_width);
  pump_width0_ = measure_long_term_width(options_.grid, pump.intensity()).width;
}

ComplexField VirtualExperiment::detect(const ComplexField& at_screen,
                                       const PhaseScreen* screen) const {
  const double remaining = options_.setup.distance - screen_position(options_.setup);
  return fresnel_propagate(screen ? apply_screen(at_screen, *screen) : at_screen, remaining);
}

double VirtualExperiment::alpha_c() const {
  return calibration_alpha(fresnel_, options_.width_coefficient);
}

double VirtualExperiment::zero_turbulence_width(Channel channel) const {
  return channel == Channel::laser_calibration ? laser_width0_ : pump_width0_;
}

ErfModel VirtualExperiment::erf_model(Channel channel) const {
  return ErfModel{options_.setup.slit_width, zero_turbulence_width(channel)};
}

PhaseScreen VirtualExperiment::draw_screen(double strength, std::uint64_t seed) const {
  const double k = options_.setup.k_cal();
  const double z = screen_position(options_.setup);
  if (!(strength >= 0.0) || !std::isfinite(strength)) {
    throw std::invalid_argument("turbulence strength must be finite and >= 0");
  }
  if (strength == 0.0) return zero_screen(options_.grid, k, z);
  if (options_.model == TurbulenceModel::kolmogorov) {
    return make_kolmogorov_screen(options_.grid, 1.0 / strength, k, seed,
                                  options_.subharmonic_levels, z);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, strength);
  const double tx = normal(rng);
  const double ty = normal(rng);
  return make_tilt_screen(options_.grid, tx, ty, k, z);
}

std::vector<CalibrationRow> VirtualExperiment::calibrate(std::span<const double> strengths,
                                                         std::size_t n_samples,
                                                         std::uint64_t seed) const {
  if (strengths.empty()) throw std::invalid_argument("calibration needs at least one strength");
  if (n_samples < 50) {
    throw std::invalid_argument("calibration needs n_samples >= 50, got " +
                                std::to_string(n_samples));
  }
  std::vector<double> sorted(strengths.begin(), strengths.end());
  for (double s : sorted) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("calibration strengths must be finite and >= 0");
    }
  }
  std::sort(sorted.begin(), sorted.end());

  const Grid2D& grid = options_.grid;
  std::vector<double> widths(sorted.size());
  detail::parallel_for(sorted.size(), options_.threads, [&](std::size_t j) {
    if (sorted[j] == 0.0) {
      widths[j] = laser_width0_;
      return;
    }
    std::vector<double> sum(grid.size(), 0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const PhaseScreen screen = draw_screen(sorted[j], realization_seed(seed, i));
      const ComplexField out = detect(laser_at_screen_, &screen);
      const auto samples = out.samples();
      for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += std::norm(samples[p]);
    }
    for (auto& v : sum) v /= static_cast<double>(n_samples);
    widths[j] = measure_long_term_width(grid, sum).width;
  });

  std::vector<CalibrationRow> rows;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    double sigma = rytov_from_width(widths[j], laser_width0_, fresnel_, options_.width_coefficient);
    if (sigma < 0.0) {
      // Sampling noise can put the long-term width marginally below the
      // turbulence-free one.
      if (widths[j] >= laser_width0_ * (1.0 - 0.005)) {
        sigma = 0.0;
      } else {
        throw NumericalGuardError("long-term width " + std::to_string(widths[j]) +
                                  " m is below the turbulence-free width " +
                                  std::to_string(laser_width0_) + " m beyond the noise floor");
      }
    }
    rows.push_back(CalibrationRow{sorted[j], widths[j], sigma});
  }
  return rows;
}

double VirtualExperiment::strength_for(double sigma_r2,
                                       std::span<const CalibrationRow> calibration) const {
  if (!(sigma_r2 >= 0.0) || !std::isfinite(sigma_r2)) {
    throw std::invalid_argument("sigma_R^2 target must be finite and >= 0");
  }
  if (sigma_r2 == 0.0) return 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& row : calibration) {
    if (!xs.empty() && !(row.sigma_r2 > xs.back())) {
      throw NumericalGuardError(
          "calibration table is not strictly increasing in sigma_R^2; add samples or widen the "
          "strength spacing");
    }
    xs.push_back(row.sigma_r2);
    ys.push_back(strength_coordinate(options_.model, row.strength));
  }
  if (xs.size() < 2) throw std::invalid_argument("calibration table needs at least two rows");
  if (sigma_r2 < xs.front() || sigma_r2 > xs.back()) {
    throw std::invalid_argument("sigma_R^2 target " + std::to_string(sigma_r2) +
                                " is outside the calibrated range [" + std::to_string(xs.front()) +
                                ", " + std::to_string(xs.back()) + "]");
  }
  double g;
  if (xs.size() >= 4) {
    boost::math::interpolators::pchip<std::vector<double>> spline(std::move(xs), std::move(ys));
    g = spline(sigma_r2);
  } else {
    const auto it = std::upper_bound(xs.begin(), xs.end(), sigma_r2);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - xs.begin()), xs.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (sigma_r2 - xs[lo]) / (xs[hi] - xs[lo]);
    g = ys[lo] + t * (ys[hi] - ys[lo]);
  }
  return strength_from_coordinate(options_.model, g);
}

}  // namespace turbcancel
