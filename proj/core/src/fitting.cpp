#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "turbcancel/experiment.hpp"

namespace turbcancel {

double erf_transmission_model(double sigma_r2, double alpha, const ErfModel& model) {
  if (!(model.w0 > 0.0) || !(model.slit_width > 0.0)) {
    throw std::invalid_argument("erf model needs positive slit width and w0");
  }
  const double factor = 1.0 + alpha * sigma_r2;
  if (!(factor > 0.0)) throw std::invalid_argument("alpha * sigma_R^2 must exceed -1");
  const double a = model.slit_width / std::sqrt(2.0);
  const double w_lt = model.w0 * std::sqrt(factor);
  return std::erf(a / w_lt) / std::erf(a / model.w0);
}

FitResult fit_alpha(std::span<const DataPoint> points, const ErfModel& model, double alpha_max) {
  if (points.size() < 4) {
    throw std::invalid_argument("alpha fit needs at least 4 points, got " +
                                std::to_string(points.size()));
  }
  if (!(alpha_max > 0.0) || !std::isfinite(alpha_max)) {
    throw std::invalid_argument("alpha upper bound must be positive and finite");
  }
  std::vector<DataPoint> used;
  double max_drop = 0.0;
  for (const auto& p : points) {
    if (!std::isfinite(p.sigma_r2) || !std::isfinite(p.mean) || !std::isfinite(p.std_error)) {
      throw std::invalid_argument("non-finite data point in alpha fit");
    }
    if (p.sigma_r2 < 0.0) throw std::invalid_argument("negative sigma_R^2 in alpha fit");
    if (p.sigma_r2 == 0.0) continue;
    used.push_back(p);
    max_drop = std::max(max_drop, 1.0 - p.mean);
  }
  if (used.empty() || max_drop <= 1e-9) {
    throw NumericalGuardError(
        "alpha fit is ill-conditioned: normalised counts show no decrease (alpha >= 0 is the "
        "only bound)");
  }

  // Standard errors below 1e-6 (noise-free runs) would make the weights
  // meaningless; floor them.
  auto chi2 = [&](double alpha) {
    double sum = 0.0;
    for (const auto& p : used) {
      const double se = std::max(p.std_error, 1e-6);
      const double r = (p.mean - erf_transmission_model(p.sigma_r2, alpha, model)) / se;
      sum += r * r;
    }
    return sum;
  };

  const auto [alpha, chi2_min] =
      boost::math::tools::brent_find_minima(chi2, 0.0, alpha_max, std::numeric_limits<double>::digits / 2);

  const double h = 1e-4 * std::max(alpha, 1e-3 * alpha_max);
  double curvature;
  if (alpha - h >= 0.0) {
    curvature = (chi2(alpha + h) - 2.0 * chi2_min + chi2(alpha - h)) / (h * h);
  } else {
    curvature = (chi2(alpha + 2.0 * h) - 2.0 * chi2(alpha + h) + chi2_min) / (h * h);
  }
  const double ci = curvature > 0.0 ? 1.96 * std::sqrt(2.0 / curvature)
                                    : std::numeric_limits<double>::infinity();

  double rss = 0.0;
  for (const auto& p : used) {
    const double r = p.mean - erf_transmission_model(p.sigma_r2, alpha, model);
    rss += r * r;
  }
  return FitResult{alpha, std::sqrt(rss / static_cast<double>(used.size())), ci,
                   max_drop < 0.10};
}

}  // namespace turbcancel
