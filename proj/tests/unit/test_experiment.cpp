#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "turbcancel/experiment.hpp"

namespace tc = turbcancel;
using tc::Channel;
using tc::cdouble;

namespace {

const tc::PhysicalSetup kSetup;
const std::vector<double> kTableSigma{5e-4, 3.7e-3, 1.7e-2, 4.4e-2, 9.8e-2, 0.17, 0.26};

tc::ComplexField gaussian(const tc::Grid2D& grid, double w, double x0 = 0.0, double y0 = 0.0) {
  const std::size_t n = grid.n();
  std::vector<cdouble> s(grid.size());
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double x = grid.coordinate(ix) - x0, y = grid.coordinate(iy) - y0;
      s[iy * n + ix] = std::exp(-(x * x + y * y) / (w * w));
    }
  }
  return tc::ComplexField(grid, kSetup.k_cal(), s);
}

// Independent check of the slit fraction: composite Simpson over the slit of
// the normalised 1-D Gaussian intensity profile.
double simpson_slit_fraction(double slit, double w) {
  const int m = 2000;
  const double h = slit / m;
  auto f = [&](double x) { return std::sqrt(2.0 / M_PI) / w * std::exp(-2.0 * x * x / (w * w)); };
  double s = f(-0.5 * slit) + f(0.5 * slit);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(-0.5 * slit + i * h);
  return s * h / 3.0;
}

std::vector<tc::DataPoint> synthetic(double alpha, const tc::ErfModel& model, double noise,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<tc::DataPoint> pts;
  for (double s : kTableSigma) {
    const double y = tc::erf_transmission_model(s, alpha, model);
    pts.push_back({s, y * (1.0 + noise * normal(rng)), noise * y, 100});
  }
  return pts;
}

}  // namespace

TEST(SlitFlux, UniformFieldGivesAreaFraction) {
  const tc::Grid2D grid(256, 10e-6);
  const tc::ComplexField field(grid, kSetup.k_cal(), std::vector<cdouble>(grid.size(), 1.0));
  EXPECT_NEAR(tc::slit_flux(field, 50e-6) / field.energy(), 50e-6 / grid.extent(), 1e-9);
  EXPECT_NEAR(tc::slit_flux(field, 73e-6) / field.energy(), 73e-6 / grid.extent(), 1e-9);
}

TEST(SlitFlux, CentredGaussianMatchesErf) {
  const auto grid = tc::experiment_grid(kSetup);
  for (double w : {59e-6, 80e-6, 167e-6}) {
    const double expected = std::erf(50e-6 / (std::sqrt(2.0) * w));
    const auto field = gaussian(grid, w);
    EXPECT_NEAR(tc::slit_flux(field, 50e-6) / field.energy() / expected, 1.0, 0.005) << w;
  }
}

TEST(SlitFlux, DisplacedBeamMisses) {
  const auto grid = tc::experiment_grid(kSetup);
  const auto field = gaussian(grid, 59e-6, 600e-6, 0.0);
  EXPECT_LT(tc::slit_flux(field, 50e-6) / field.energy(), 1e-6);
}

TEST(SlitFlux, RejectsUnresolvedSlit) {
  const tc::Grid2D grid(64, 30e-6);
  EXPECT_THROW(tc::slit_flux(gaussian(grid, 200e-6), 50e-6), std::invalid_argument);
}

TEST(LongTermWidth, ExactGaussian) {
  const auto grid = tc::experiment_grid(kSetup);
  const auto intensity = gaussian(grid, 59e-6).intensity();
  EXPECT_NEAR(tc::measure_long_term_width(grid, intensity).width / 59e-6, 1.0, 0.001);
}

TEST(LongTermWidth, TranslationInvariant) {
  const auto grid = tc::experiment_grid(kSetup);
  const auto intensity = gaussian(grid, 59e-6, 37.3e-6, -112.1e-6).intensity();
  const auto fit = tc::measure_long_term_width(grid, intensity);
  EXPECT_NEAR(fit.width / 59e-6, 1.0, 0.001);
  EXPECT_NEAR(fit.x0, 37.3e-6, 0.1e-6);
  EXPECT_NEAR(fit.y0, -112.1e-6, 0.1e-6);
}

TEST(LongTermWidth, WanderedEnsembleBroadensByConvolution) {
  // I ~ exp(-2 r^2/w0^2) has per-axis std w0/2; wander adds sigma_c^2 per
  // axis, so w^2 = w0^2 + 4 sigma_c^2.
  const tc::Grid2D grid(128, 6e-6);
  const std::size_t n = grid.n();
  const double w0 = 59e-6, sigma_c = 30e-6;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, sigma_c);
  std::vector<double> mean(grid.size(), 0.0), gx(n), gy(n);
  const int draws = 4000;
  for (int d = 0; d < draws; ++d) {
    const double x0 = normal(rng), y0 = normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = grid.coordinate(i) - x0, y = grid.coordinate(i) - y0;
      gx[i] = std::exp(-2.0 * x * x / (w0 * w0));
      gy[i] = std::exp(-2.0 * y * y / (w0 * w0));
    }
    for (std::size_t iy = 0; iy < n; ++iy) {
      for (std::size_t ix = 0; ix < n; ++ix) mean[iy * n + ix] += gx[ix] * gy[iy];
    }
  }
  const double expected = std::sqrt(w0 * w0 + 4.0 * sigma_c * sigma_c);
  EXPECT_NEAR(tc::measure_long_term_width(grid, mean).width / expected, 1.0, 0.02);
}

TEST(LongTermWidth, RejectsEmptyMap) {
  const tc::Grid2D grid(64, 5e-6);
  const std::vector<double> zeros(grid.size(), 0.0);
  EXPECT_THROW(tc::measure_long_term_width(grid, zeros), tc::NumericalGuardError);
}

TEST(WidthRelation, TableRowsInvert) {
  const double fresnel = tc::fresnel_ratio(kSetup);
  const double alpha_c = 0.982 * std::pow(fresnel, 5.0 / 6.0);
  for (double w : {87e-6, 167e-6}) {
    const double expected = ((w / 59e-6) * (w / 59e-6) - 1.0) / alpha_c;
    EXPECT_NEAR(tc::rytov_from_width(w, 59e-6, fresnel, tc::kChamberCoefficient), expected,
                1e-12 * expected);
  }
  EXPECT_NEAR(tc::rytov_from_width(87e-6, 59e-6, fresnel, 0.982), 0.0446, 0.0446 * 0.01);
  EXPECT_NEAR(tc::rytov_from_width(167e-6, 59e-6, fresnel, 0.982), 0.263, 0.263 * 0.01);
  EXPECT_EQ(tc::rytov_from_width(59e-6, 59e-6, fresnel, 0.982), 0.0);
}

TEST(WidthRelation, RoundTrip) {
  const double fresnel = tc::fresnel_ratio(kSetup);
  for (double s : kTableSigma) {
    const double w = tc::width_from_rytov(s, 59e-6, fresnel, 1.33);
    EXPECT_NEAR(tc::rytov_from_width(w, 59e-6, fresnel, 1.33), s, 1e-12);
  }
  EXPECT_NEAR(tc::calibration_alpha(fresnel, 0.982), 26.46, 0.01);
}

TEST(ErfModel, UnitAtZeroTurbulence) {
  const tc::ErfModel model{50e-6, 59e-6};
  EXPECT_EQ(tc::erf_transmission_model(0.0, 26.4, model), 1.0);
  EXPECT_EQ(tc::erf_transmission_model(0.3, 0.0, model), 1.0);
}

TEST(ErfModel, DoubledWidthMatchesSlitIntegral) {
  const tc::ErfModel model{50e-6, 59e-6};
  const double y = tc::erf_transmission_model(0.1, 30.0, model);  // alpha sigma = 3
  const double oracle = simpson_slit_fraction(50e-6, 118e-6) / simpson_slit_fraction(50e-6, 59e-6);
  EXPECT_NEAR(y, oracle, 1e-9);
  EXPECT_NEAR(y, 0.545, 0.545 * 0.005);
}

TEST(ErfModel, DecreasesToZero) {
  const tc::ErfModel model{50e-6, 59e-6};
  double prev = 1.0;
  for (double alpha = 1.0; alpha < 1e7; alpha *= 4.0) {
    const double y = tc::erf_transmission_model(0.26, alpha, model);
    EXPECT_LT(y, prev);
    prev = y;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(FitAlpha, RecoversLargeAlpha) {
  const tc::ErfModel model{50e-6, 59e-6};
  const auto fit = tc::fit_alpha(synthetic(26.4, model, 0.01, 1), model, 264.0);
  EXPECT_NEAR(fit.alpha / 26.4, 1.0, 0.02);
  EXPECT_GT(fit.alpha_ci_halfwidth, 0.0);
  EXPECT_FALSE(fit.weakly_conditioned);
}

TEST(FitAlpha, RecoversSmallAlphaOnTableGrid) {
  const tc::ErfModel model{50e-6, 59e-6};
  const auto fit = tc::fit_alpha(synthetic(0.859, model, 0.01, 1), model, 264.0);
  EXPECT_NEAR(fit.alpha / 0.859, 1.0, 0.10);
  EXPECT_TRUE(fit.weakly_conditioned);
}

TEST(FitAlpha, NoiseFreeDataIsExact) {
  const tc::ErfModel model{50e-6, 59e-6};
  for (double alpha : {0.859, 8.78, 26.4}) {
    const auto fit = tc::fit_alpha(synthetic(alpha, model, 0.0, 1), model, 264.0);
    EXPECT_NEAR(fit.alpha / alpha, 1.0, 1e-5);
  }
}

TEST(FitAlpha, FlatDataIsIllConditioned) {
  const tc::ErfModel model{50e-6, 59e-6};
  std::vector<tc::DataPoint> pts;
  for (double s : kTableSigma) pts.push_back({s, 1.0, 0.01, 100});
  EXPECT_THROW(tc::fit_alpha(pts, model, 264.0), tc::NumericalGuardError);
}

TEST(FitAlpha, RejectsBadInput) {
  const tc::ErfModel model{50e-6, 59e-6};
  auto pts = synthetic(26.4, model, 0.0, 1);
  auto nan = pts;
  nan[2].mean = std::nan("");
  EXPECT_THROW(tc::fit_alpha(nan, model, 264.0), std::invalid_argument);
  const std::vector<tc::DataPoint> few(pts.begin(), pts.begin() + 3);
  EXPECT_THROW(tc::fit_alpha(few, model, 264.0), std::invalid_argument);
}

TEST(ExperimentGrid, SatisfiesSamplingGuards) {
  const auto grid = tc::experiment_grid(kSetup);
  const double remaining = kSetup.distance - tc::screen_position(kSetup);
  EXPECT_GE(grid.n(), 512u);
  EXPECT_LE(grid.dx(), 25e-6);
  EXPECT_GE(grid.n() * grid.dx() * grid.dx(), kSetup.lambda_cal * remaining);
  const double radius = tc::gaussian_beam_radius(kSetup.k_cal(), kSetup.w0, remaining);
  EXPECT_GE(grid.extent(), 6.0 * radius);
}

TEST(ChannelNames, RoundTrip) {
  for (auto c : {Channel::laser_calibration, Channel::coincidence_direct,
                 Channel::coincidence_inverted_x}) {
    EXPECT_EQ(tc::parse_channel(tc::channel_name(c)), c);
  }
  EXPECT_THROW(tc::parse_channel("laser"), std::invalid_argument);
}

class TiltExperiment : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    tc::ExperimentOptions options;
    options.grid = tc::experiment_grid(options.setup);
    options.model = tc::TurbulenceModel::tilt;
    experiment_ = new tc::VirtualExperiment(options);
    const std::vector<double> strengths{0.0, 100e-6, 200e-6};
    calibration_ = new std::vector<tc::CalibrationRow>(experiment_->calibrate(strengths, 50, 9));
  }
  static void TearDownTestSuite() {
    delete experiment_;
    delete calibration_;
  }
  static tc::VirtualExperiment* experiment_;
  static std::vector<tc::CalibrationRow>* calibration_;
};

tc::VirtualExperiment* TiltExperiment::experiment_ = nullptr;
std::vector<tc::CalibrationRow>* TiltExperiment::calibration_ = nullptr;

TEST_F(TiltExperiment, ZeroTurbulenceWidthsMatchSetup) {
  EXPECT_NEAR(experiment_->zero_turbulence_width(Channel::laser_calibration) / 59e-6, 1.0, 0.005);
  EXPECT_NEAR(experiment_->zero_turbulence_width(Channel::coincidence_direct) / 60e-6, 1.0, 0.005);
  EXPECT_NEAR(experiment_->alpha_c(), 26.46, 0.01);
}

TEST_F(TiltExperiment, CalibrationRowsAreConsistent) {
  const auto& rows = *calibration_;
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].strength, 0.0);
  EXPECT_EQ(rows[0].sigma_r2, 0.0);
  EXPECT_EQ(rows[0].w_lt, experiment_->zero_turbulence_width(Channel::laser_calibration));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GT(rows[i].w_lt, rows[i - 1].w_lt);
    EXPECT_EQ(rows[i].sigma_r2,
              tc::rytov_from_width(rows[i].w_lt, rows[0].w_lt, experiment_->fresnel(), 0.982));
  }
  const std::vector<double> one{0.0};
  EXPECT_THROW(experiment_->calibrate(one, 49, 1), std::invalid_argument);
}

TEST_F(TiltExperiment, InvertedChannelCancelsTilt) {
  const double top = calibration_->back().sigma_r2;
  const std::vector<double> targets{0.0, 0.2 * top, 0.6 * top, top};
  const std::vector<Channel> channels{Channel::coincidence_inverted_x, Channel::coincidence_direct};
  const auto curves = experiment_->run_monte_carlo(channels, targets, *calibration_, 10, 4);
  for (const auto& p : curves[0].points) EXPECT_NEAR(p.mean, 1.0, 1e-9) << p.sigma_r2;
  // Direct mode does lose counts to the same tilt.
  EXPECT_LT(curves[1].points.back().mean, 0.99);
}

TEST_F(TiltExperiment, ZeroTargetIsExactlyOne) {
  const std::vector<double> targets{0.0};
  const std::vector<Channel> channels{Channel::laser_calibration, Channel::coincidence_direct,
                                      Channel::coincidence_inverted_x};
  for (const auto& curve : experiment_->run_monte_carlo(channels, targets, *calibration_, 100, 1)) {
    EXPECT_EQ(curve.points[0].mean, 1.0);
    EXPECT_EQ(curve.points[0].std_error, 0.0);
    EXPECT_EQ(curve.points[0].n_samples, 100u);
  }
}

TEST_F(TiltExperiment, TargetOutsideCalibrationIsRejected) {
  const std::vector<double> targets{10.0 * calibration_->back().sigma_r2};
  const std::vector<Channel> channels{Channel::laser_calibration};
  EXPECT_THROW(experiment_->run_monte_carlo(channels, targets, *calibration_, 10, 1),
               std::invalid_argument);
}

TEST_F(TiltExperiment, SeedAndThreadCountDetermineCurves) {
  const std::vector<double> targets{0.3 * calibration_->back().sigma_r2};
  const std::vector<Channel> channels{Channel::laser_calibration, Channel::coincidence_direct};
  const auto a = experiment_->run_monte_carlo(channels, targets, *calibration_, 6, 77);
  const auto b = experiment_->run_monte_carlo(channels, targets, *calibration_, 6, 77);
  tc::ExperimentOptions threaded = experiment_->options();
  threaded.threads = 2;
  const auto c = tc::VirtualExperiment(threaded).run_monte_carlo(channels, targets, *calibration_, 6, 77);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].points[0].mean, b[i].points[0].mean);
    EXPECT_EQ(a[i].points[0].std_error, b[i].points[0].std_error);
    EXPECT_EQ(a[i].points[0].mean, c[i].points[0].mean);
  }
  EXPECT_EQ(a[0].long_term_widths, c[0].long_term_widths);
}
