#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "turbcancel/detail/parallel.hpp"
#include "turbcancel/experiment.hpp"
#include "turbcancel/propagation.hpp"
#include "turbcancel/two_photon.hpp"

namespace turbcancel {

namespace {

constexpr std::uint64_t kPoissonStream = 2;

DataPoint summarize(double sigma_r2, const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return DataPoint{sigma_r2, mean, se, values.size()};
}

}  // namespace

std::vector<ChannelCurve> VirtualExperiment::run_monte_carlo(
    std::span<const Channel> channels, std::span<const double> targets,
    std::span<const CalibrationRow> calibration, std::size_t n_samples,
    std::uint64_t seed) const {
  if (channels.empty()) throw std::invalid_argument("no channels requested");
  if (n_samples < 2) throw std::invalid_argument("n_samples must be >= 2");
  std::vector<double> strengths;
  for (double t : targets) strengths.push_back(strength_for(t, calibration));

  const std::size_t nc = channels.size();
  const std::size_t nt = targets.size();
  const Grid2D& grid = options_.grid;
  const double slit = options_.setup.slit_width;
  const double k_down = options_.setup.k_down();
  bool want_laser = false;
  for (Channel c : channels) want_laser = want_laser || c == Channel::laser_calibration;

  // values[t][c][i]
  std::vector<std::vector<std::vector<double>>> values(
      nt, std::vector<std::vector<double>>(nc, std::vector<double>(n_samples, 1.0)));
  std::vector<double> widths(nt, laser_width0_);

  detail::parallel_for(nt, options_.threads, [&](std::size_t t) {
    if (strengths[t] == 0.0) return;
    std::vector<double> intensity_sum(want_laser ? grid.size() : 0, 0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const std::uint64_t sample_seed = realization_seed(seed, i);
      const PhaseScreen screen = draw_screen(strengths[t], sample_seed);
      std::optional<PhaseScreen> down;
      for (std::size_t c = 0; c < nc; ++c) {
        double ratio;
        if (channels[c] == Channel::laser_calibration) {
          const ComplexField out = detect(laser_at_screen_, &screen);
          ratio = slit_flux(out, slit) / laser_flux0_;
          const auto samples = out.samples();
          for (std::size_t p = 0; p < intensity_sum.size(); ++p) {
            intensity_sum[p] += std::norm(samples[p]);
          }
        } else {
          if (!down) down = scale_to_wavenumber(screen, k_down);
          const CoincidenceMode mode = channels[c] == Channel::coincidence_direct
                                           ? CoincidenceMode::direct
                                           : CoincidenceMode::inverted_x;
          const PhaseScreen pair = pair_screen(*down, mode, options_.setup.k_pump());
          ratio = slit_flux(detect(pump_at_screen_, &pair), slit) / direct_flux0_;
        }
        if (options_.poisson_mean_count > 0.0) {
          std::mt19937_64 rng(detail::derive_seed(sample_seed, kPoissonStream, c));
          std::poisson_distribution<long long> counts(options_.poisson_mean_count * ratio);
          ratio = static_cast<double>(counts(rng)) / options_.poisson_mean_count;
        }
        values[t][c][i] = ratio;
      }
    }
    if (want_laser) {
      for (auto& v : intensity_sum) v /= static_cast<double>(n_samples);
      widths[t] = measure_long_term_width(grid, intensity_sum).width;
    }
  });

  std::vector<ChannelCurve> curves;
  for (std::size_t c = 0; c < nc; ++c) {
    ChannelCurve curve{channels[c], {}, {}};
    for (std::size_t t = 0; t < nt; ++t) {
      if (strengths[t] == 0.0) {
        curve.points.push_back(DataPoint{targets[t], 1.0, 0.0, n_samples});
      } else {
        curve.points.push_back(summarize(targets[t], values[t][c]));
      }
      if (channels[c] == Channel::laser_calibration) curve.long_term_widths.push_back(widths[t]);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace turbcancel
