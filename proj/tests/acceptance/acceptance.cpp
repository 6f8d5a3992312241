// Acceptance checks, one PASS/FAIL line per criterion.
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "turbcancel/experiment.hpp"
#include "turbcancel/grid.hpp"
#include "turbcancel/propagation.hpp"
#include "turbcancel/report.hpp"
#include "turbcancel/turbulence.hpp"
#include "turbcancel/two_photon.hpp"

namespace tc = turbcancel;
namespace fs = std::filesystem;
using tc::Channel;
using tc::CoincidenceMode;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, pattern, args...);
  return buffer;
}

const tc::PhysicalSetup kSetup;
const std::vector<double> kTableWidths{59e-6, 60e-6, 62e-6, 72e-6, 87e-6, 112e-6, 140e-6, 167e-6};
const std::vector<double> kTableSigma{0.0, 5.0e-4, 3.7e-3, 1.7e-2, 4.4e-2, 9.8e-2, 0.17, 0.26};

double relative_l2(std::span<const tc::cdouble> a, std::span<const tc::cdouble> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

bool bit_identical(const tc::ComplexField& a, const tc::ComplexField& b) {
  return std::equal(a.samples().begin(), a.samples().end(), b.samples().begin());
}

// 1. Fresnel ratio and calibration coefficient.
Outcome constants() {
  const double fresnel = tc::fresnel_ratio(kSetup);
  const double alpha_c = tc::calibration_alpha(fresnel, tc::kChamberCoefficient);
  const bool pass = std::abs(fresnel - 52.0) <= 0.5 && std::abs(alpha_c - 26.4) <= 0.1;
  return {pass, fmt("Lambda = %.4f, alpha_c = %.4f", fresnel, alpha_c)};
}

// 2. Inverting the width relation on the calibration table.
Outcome table_consistency() {
  const double fresnel = tc::fresnel_ratio(kSetup);
  bool pass = true;
  std::string detail;
  for (std::size_t i = 1; i < kTableWidths.size(); ++i) {
    const double sigma =
        tc::rytov_from_width(kTableWidths[i], kSetup.w0, fresnel, tc::kChamberCoefficient);
    const double error = sigma / kTableSigma[i] - 1.0;
    if (std::abs(error) > 0.03) pass = false;
    detail += fmt("%s%.0fum->%.3g(%+.1f%%)", i == 1 ? "" : " ", kTableWidths[i] * 1e6, sigma,
                  100.0 * error);
  }
  return {pass, detail};
}

// 3. Tilt-only turbulence leaves the inverted channel untouched.
Outcome tilt_cancellation() {
  tc::ExperimentOptions options;
  options.grid = tc::experiment_grid(options.setup);
  options.model = tc::TurbulenceModel::tilt;
  const tc::VirtualExperiment experiment(options);
  const std::vector<double> strengths{0.0, 40e-6, 80e-6, 120e-6, 160e-6, 200e-6};
  const auto calibration = experiment.calibrate(strengths, 50, 3);
  const double top = calibration.back().sigma_r2;
  std::vector<double> targets;
  for (int i = 0; i < 8; ++i) targets.push_back(top * (i / 7.0));
  const std::vector<Channel> channels{Channel::coincidence_inverted_x};
  const auto curves = experiment.run_monte_carlo(channels, targets, calibration, 100, 3);
  double worst = 0.0;
  for (const auto& p : curves[0].points) worst = std::max(worst, std::abs(p.mean - 1.0));
  return {worst <= 1e-9, fmt("max |counts - 1| = %.3g over 8 strengths up to sigma_R2 = %.3g, "
                             "grid n = %zu",
                             worst, top, options.grid.n())};
}

// Random mixed-order polynomial kernel: each order 1..6 is present with
// probability 1/2 and gets a random amplitude scale. With `with_odd` at least
// one odd order is present, without it none is.
tc::KernelAberration random_kernel(std::mt19937_64& rng, const tc::Grid2D& grid, double u_scale,
                                   bool with_odd, double max_std) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> coeffs(6, 0.0);
  bool odd = false, even = false;
  for (std::size_t order = 1; order <= 6; ++order) {
    if (order % 2 == 1 && !with_odd) continue;
    if (uniform(rng) < 0.5) {
      coeffs[order - 1] = max_std * uniform(rng);
      (order % 2 == 1 ? odd : even) = true;
    }
  }
  if (with_odd && !odd) coeffs[0] = max_std;
  if (!with_odd && !even) coeffs[1] = max_std;
  return tc::sample_polynomial_kernel(coeffs, u_scale, tc::Axis::both, grid, kSetup.k_down(),
                                      rng());
}

// 4. Inverted mode sees only the even part of the kernel.
Outcome parity_theorem() {
  const tc::Grid2D grid(256, 30e-6);
  const auto pump = tc::converging_gaussian(grid, kSetup.k_pump(), kSetup.w_pump, kSetup.distance);
  const tc::KernelConvolver convolver(pump, kSetup.distance);
  std::mt19937_64 rng(4);
  int inverted_ok = 0, direct_ok = 0;
  for (int i = 0; i < 50; ++i) {
    const bool with_odd = i % 5 != 4;
    const auto kernel = random_kernel(rng, grid, 0.5 * grid.extent(), with_odd, 2.0);
    const auto mode = i % 2 == 0 ? CoincidenceMode::inverted_x : CoincidenceMode::inverted_xy;
    const auto even = tc::even_part(kernel, tc::inversion_axis(mode));
    if (bit_identical(tc::coincidence_fast(convolver, kernel, mode),
                      tc::coincidence_fast(convolver, even, mode))) {
      ++inverted_ok;
    }
    const auto direct = tc::coincidence_fast(convolver, kernel, CoincidenceMode::direct);
    const auto direct_even = tc::coincidence_fast(convolver, tc::even_part(kernel, tc::Axis::both),
                                                  CoincidenceMode::direct);
    // Odd content must change the direct output; without it nothing may change.
    if (bit_identical(direct, direct_even) != with_odd) ++direct_ok;
  }
  return {inverted_ok == 50 && direct_ok == 50,
          fmt("inverted == even-part run for %d/50 kernels; direct consistent for %d/50", inverted_ok,
              direct_ok)};
}

// 5. Fast path against the brute-force single integral.
Outcome oracle_equivalence() {
  const tc::Grid2D grid(64, 50e-6);
  const auto pump = tc::converging_gaussian(grid, kSetup.k_pump(), 200e-6, kSetup.distance);
  std::vector<tc::DetectorPoint> points;
  for (std::size_t iy = 16; iy < 48; ++iy) {
    for (std::size_t ix = 16; ix < 48; ++ix) {
      points.push_back({grid.coordinate(ix), grid.coordinate(iy)});
    }
  }
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto kernel = random_kernel(rng, grid, 0.5 * grid.extent(), true, 1.0);
    const auto mode = i % 2 == 0 ? CoincidenceMode::direct : CoincidenceMode::inverted_x;
    const auto fast = tc::coincidence_fast(pump, kernel, mode, kSetup.distance);
    std::vector<tc::cdouble> fast_points;
    for (std::size_t iy = 16; iy < 48; ++iy) {
      for (std::size_t ix = 16; ix < 48; ++ix) fast_points.push_back(fast(ix, iy));
    }
    const auto slow = tc::coincidence_quadrature(pump, kernel, mode, kSetup.distance, points);
    worst = std::max(worst, relative_l2(fast_points, slow));
  }
  return {worst <= 0.01, fmt("worst relative L2 over 20 kernels = %.3g", worst)};
}

double profile_width(std::span<const tc::cdouble> amplitude, std::span<const double> x) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < amplitude.size(); ++i) {
    const double v = std::norm(amplitude[i]);
    s0 += v;
    s1 += v * x[i];
    s2 += v * x[i] * x[i];
  }
  const double mean = s1 / s0;
  return std::sqrt(2.0 * (s2 / s0 - mean * mean));
}

// 6. Finite crystal converges to the thin-crystal result.
Outcome delta_approximation() {
  const double k_p = kSetup.k_pump();
  const double dx = 15e-6;
  const auto pump = tc::converging_gaussian_1d(512, dx, k_p, kSetup.w_pump, kSetup.distance);
  std::vector<double> points;
  for (int i = -24; i <= 24; ++i) points.push_back(i * dx);
  const tc::PolynomialKernel1D kernel{{0.5, 0.5, 0.3}, 1e-3, kSetup.k_down()};

  bool pass = true;
  std::string detail;
  for (auto mode : {CoincidenceMode::direct, CoincidenceMode::inverted_x}) {
    const auto thin =
        tc::spdc_sinc_amplitude(pump, tc::DeltaCrystal{}, kernel, mode, kSetup.distance, points);
    double previous = INFINITY;
    double width_error = 0.0;
    detail += mode == CoincidenceMode::direct ? "direct:" : " inverted:";
    for (double tau : {5e-3, 1e-3, 0.2e-3, 0.05e-3}) {
      const auto crystal = tc::sinc_crystal(tau, k_p);
      // Resolve the phase-matching kernel (width ~ sqrt(beta)) with ~8 samples.
      tc::SincQuadratureOptions options;
      options.separation_step = dx / std::ceil(8.0 * dx / std::sqrt(crystal.beta));
      const auto thick =
          tc::spdc_sinc_amplitude(pump, crystal, kernel, mode, kSetup.distance, points, options);
      const double error = relative_l2(thick, thin);
      if (!(error < previous)) pass = false;
      previous = error;
      if (tau == 5e-3) {
        width_error = std::abs(profile_width(thick, points) / profile_width(thin, points) - 1.0);
      }
      detail += fmt(" %.3g", error);
    }
    if (!(width_error < 0.05)) pass = false;
    detail += fmt(" (width diff at 5 mm %.2g)", width_error);
  }
  return {pass, "L2 error vs thin crystal at tau = 5, 1, 0.2, 0.05 mm: " + detail};
}

struct KolmogorovRun {
  tc::RunConfig config;
  tc::ResultRecord fitted;
  const tc::ChannelCurve* curve(Channel channel) const {
    for (const auto& c : fitted.curves) {
      if (c.channel == channel) return &c;
    }
    return nullptr;
  }
  tc::FitResult fit(Channel channel) const {
    for (const auto& f : fitted.fits) {
      if (f.channel == channel) return f.fit;
    }
    throw std::runtime_error("missing fit");
  }
};

KolmogorovRun kolmogorov_run(const fs::path& scratch) {
  KolmogorovRun r;
  r.config = tc::default_config();
  r.config.output_dir = scratch;
  tc::run_pipeline(r.config, tc::Stage::calibrate);
  const auto run = tc::run_pipeline(r.config, tc::Stage::run);
  r.fitted = tc::run_pipeline(r.config, tc::Stage::fit);
  r.fitted.curves = run.curves;
  return r;
}

// 7. Laser channel against the erf model at its own fitted alpha.
Outcome calibration_self_consistency(const KolmogorovRun& r, const tc::VirtualExperiment& exp) {
  const auto* laser = r.curve(Channel::laser_calibration);
  const auto fit = r.fit(Channel::laser_calibration);
  const auto model = exp.erf_model(Channel::laser_calibration);
  double worst = 0.0;
  for (const auto& p : laser->points) {
    const double diff = std::abs(p.mean - tc::erf_transmission_model(p.sigma_r2, fit.alpha, model));
    if (diff == 0.0) continue;
    worst = std::max(worst, p.std_error > 0.0 ? diff / p.std_error : INFINITY);
  }
  // Linearity of w_LT^2 in sigma_R^2.
  const std::size_t m = laser->points.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = laser->points[i].sigma_r2;
    const double y = laser->long_term_widths[i] * laser->long_term_widths[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double n = static_cast<double>(m);
  const double cov = sxy - sx * sy / n;
  const double r2 = cov * cov / ((sxx - sx * sx / n) * (syy - sy * sy / n));
  return {worst <= 3.0 && r2 >= 0.99,
          fmt("alpha_c_measured = %.4g, worst |residual|/SE = %.3g, R2(w_LT^2, sigma_R2) = %.5f",
              fit.alpha, worst, r2)};
}

// 8. Suppression ordering with confidence intervals.
std::vector<Outcome> suppression_ordering(const KolmogorovRun& r) {
  const auto direct = r.fit(Channel::coincidence_direct);
  const auto inverted = r.fit(Channel::coincidence_inverted_x);
  const auto laser = r.fit(Channel::laser_calibration);
  const double upper_inverted = inverted.alpha + inverted.alpha_ci_halfwidth;
  const double ratio_direct = inverted.alpha / direct.alpha;
  const double bound_direct = upper_inverted / (direct.alpha - direct.alpha_ci_halfwidth);
  const double ratio_laser = inverted.alpha / laser.alpha;
  const double bound_laser = upper_inverted / (laser.alpha - laser.alpha_ci_halfwidth);
  return {
      {bound_direct <= 0.15 && direct.alpha > direct.alpha_ci_halfwidth,
       fmt("alpha_inverted/alpha_direct = %.3f (CI upper %.3f, limit 0.15); alpha_inv = %.4g +- "
           "%.2g, alpha_dir = %.4g +- %.2g",
           ratio_direct, bound_direct, inverted.alpha, inverted.alpha_ci_halfwidth, direct.alpha,
           direct.alpha_ci_halfwidth)},
      {bound_laser <= 0.10 && laser.alpha > laser.alpha_ci_halfwidth,
       fmt("alpha_inverted/alpha_c_measured = %.3f (CI upper %.3f, limit 0.10); alpha_c_measured = "
           "%.4g +- %.2g",
           ratio_laser, bound_laser, laser.alpha, laser.alpha_ci_halfwidth)}};
}

// 9. Ensemble structure function of Kolmogorov screens.
Outcome screen_statistics() {
  const auto grid = tc::experiment_grid(kSetup);
  const double r0 = 20.0 * grid.dx();
  tc::StructureFunctionAccumulator accumulator(grid);
  for (std::uint64_t i = 0; i < 200; ++i) {
    accumulator.add(tc::make_kolmogorov_screen(grid, r0, kSetup.k_cal(), tc::realization_seed(9, i)));
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, worst = 0.0;
  int count = 0;
  for (const auto& bin : accumulator.result()) {
    if (bin.r < 4.0 * grid.dx() - 1e-12 || bin.r > grid.extent() / 8.0 + 1e-12) continue;
    const double x = std::log(bin.r), y = std::log(bin.d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
    worst = std::max(worst, std::abs(bin.d / tc::kolmogorov_structure_function(bin.r, r0) - 1.0));
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return {std::abs(slope - 5.0 / 3.0) <= 0.1 && worst <= 0.10,
          fmt("slope = %.4f over %d bins, worst deviation from 6.88 (r/r0)^(5/3) = %.3g", slope,
              count, worst)};
}

std::map<std::string, std::string> directory_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[entry.path().filename().string()] = s.str();
  }
  return out;
}

// 10. Two complete CLI runs, one and two threads, byte for byte.
Outcome determinism(const fs::path& scratch) {
  const fs::path config = scratch / "determinism.ini";
  std::ofstream(config) << "[turbulence]\n"
                           "r0 = inf, 4mm, 2mm, 1.2mm\n"
                           "sigma_r2 = 0, 0.01, 0.04, 0.1\n"
                           "[run]\n"
                           "n_samples = 8\n"
                           "calibration_samples = 50\n"
                           "seed = 10\n";
  std::vector<std::map<std::string, std::string>> outputs;
  for (int threads : {1, 2}) {
    const fs::path out = scratch / ("threads" + std::to_string(threads));
    fs::remove_all(out);
    for (const char* stage : {"calibrate", "run", "fit", "report"}) {
      const std::string command = std::string(TURBCANCEL_CLI_PATH) + " " + stage + " --config " +
                                  config.string() + " --out " + out.string() + " --threads " +
                                  std::to_string(threads) + " 2>/dev/null";
      const int status = std::system(command.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        return {false, fmt("%s failed with status %d", stage, status)};
      }
    }
    outputs.push_back(directory_contents(out));
  }
  std::size_t differing = 0;
  for (const auto& [name, content] : outputs[0]) {
    const auto other = outputs[1].find(name);
    if (other == outputs[1].end() || other->second != content) ++differing;
  }
  const bool pass = differing == 0 && outputs[0].size() == outputs[1].size() && !outputs[0].empty();
  return {pass, fmt("%zu files compared, %zu differ", outputs[0].size(), differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"turbcancel acceptance checks"};
  std::vector<int> criteria;
  app.add_option("--criterion", criteria, "criteria to run (default: all)")
      ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) {
    for (int i = 1; i <= 10; ++i) criteria.push_back(i);
  }
  std::sort(criteria.begin(), criteria.end());
  criteria.erase(std::unique(criteria.begin(), criteria.end()), criteria.end());

  const fs::path scratch =
      fs::temp_directory_path() / ("turbcancel_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(scratch);

  int failures = 0;
  auto report = [&](const std::string& label, const Outcome& outcome, double seconds) {
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << label << ": " << outcome.detail
              << fmt(" [%.1f s]", seconds) << std::endl;
    if (!outcome.pass) ++failures;
  };
  auto timed = [&](const std::string& label, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    report(label,
           outcome,
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };

  for (int c : criteria) {
    switch (c) {
      case 1:
        timed("1 constants", constants);
        break;
      case 2:
        timed("2 calibration table", table_consistency);
        break;
      case 3:
        timed("3 tilt cancellation", tilt_cancellation);
        break;
      case 4:
        timed("4 parity theorem", parity_theorem);
        break;
      case 5:
        timed("5 oracle equivalence", oracle_equivalence);
        break;
      case 6:
        timed("6 thin-crystal limit", delta_approximation);
        break;
      case 7:
      case 8: {
        // Both criteria share one Kolmogorov run.
        if (c == 8 && std::find(criteria.begin(), criteria.end(), 7) != criteria.end()) break;
        const auto start = std::chrono::steady_clock::now();
        try {
          const auto run = kolmogorov_run(scratch / "kolmogorov");
          const tc::VirtualExperiment experiment(run.config.experiment_options());
          const double seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          report("7 calibration self-consistency", calibration_self_consistency(run, experiment),
                 seconds);
          const auto ordering = suppression_ordering(run);
          report("8a suppression vs direct", ordering[0], seconds);
          report("8b suppression vs calibration", ordering[1], seconds);
        } catch (const std::exception& e) {
          report("7/8 kolmogorov run", {false, std::string("exception: ") + e.what()}, 0.0);
        }
        break;
      }
      case 9:
        timed("9 screen statistics", screen_statistics);
        break;
      case 10:
        timed("10 determinism", [&] { return determinism(scratch); });
        break;
    }
  }
  fs::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
