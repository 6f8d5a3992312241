#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "turbcancel/experiment.hpp"

namespace turbcancel {

namespace {

// Periodic band-limited interpolation weight for an even-length grid, with
// the Nyquist bin split symmetrically: sin(pi t) cot(pi t / n) / n, t = dx
// offset in samples.
double dirichlet_weight(double t, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double wrapped = t - nd * std::round(t / nd);
  if (std::abs(wrapped) < 1e-12) return 1.0;
  return std::sin(kPi * wrapped) / (nd * std::tan(kPi * wrapped / nd));
}

}  // namespace

double slit_flux(const ComplexField& field, double slit_width) {
  const Grid2D& grid = field.grid();
  if (!(slit_width >= 2.0 * grid.dx())) {
    throw std::invalid_argument("slit width " + std::to_string(slit_width) +
                                " m is below 2 dx = " + std::to_string(2.0 * grid.dx()) + " m");
  }
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();

  std::vector<double> nodes;
  std::vector<double> node_weights;
  const double half = 0.5 * slit_width;
  for (std::size_t q = 0; q < abscissa.size(); ++q) {
    nodes.push_back(half * abscissa[q]);
    node_weights.push_back(half * weights[q]);
    if (abscissa[q] != 0.0) {
      nodes.push_back(-half * abscissa[q]);
      node_weights.push_back(half * weights[q]);
    }
  }

  const std::size_t n = grid.n();
  std::vector<double> table(nodes.size() * n);
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double t = (nodes[q] - grid.coordinate(ix)) / grid.dx();
      table[q * n + ix] = dirichlet_weight(t, n);
    }
  }

  const auto samples = field.samples();
  double total = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    const cdouble* row = samples.data() + iy * n;
    double row_sum = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double* w = table.data() + q * n;
      double re = 0.0;
      double im = 0.0;
      for (std::size_t ix = 0; ix < n; ++ix) {
        re += w[ix] * row[ix].real();
        im += w[ix] * row[ix].imag();
      }
      row_sum += node_weights[q] * (re * re + im * im);
    }
    total += row_sum;
  }
  return total * grid.dx();
}

double moment_width(const Grid2D& grid, std::span<const double> intensity) {
  if (intensity.size() != grid.size()) throw std::invalid_argument("intensity size mismatch");
  const std::size_t n = grid.n();
  double s0 = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double v = intensity[iy * n + ix];
      s0 += v;
      sx += v * grid.coordinate(ix);
      sy += v * grid.coordinate(iy);
    }
  }
  if (!(s0 > 0.0)) throw NumericalGuardError("intensity map has no power");
  const double cx = sx / s0;
  const double cy = sy / s0;
  double sr = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double dy = grid.coordinate(iy) - cy;
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double dx = grid.coordinate(ix) - cx;
      sr += intensity[iy * n + ix] * (dx * dx + dy * dy);
    }
  }
  return std::sqrt(2.0 * sr / s0);
}

WidthFit measure_long_term_width(const Grid2D& grid, std::span<const double> intensity) {
  const double fallback = moment_width(grid, intensity);
  const std::size_t n = grid.n();

  double peak = 0.0;
  double s0 = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double v = intensity[iy * n + ix];
      peak = std::max(peak, v);
      s0 += v;
      sx += v * grid.coordinate(ix);
      sy += v * grid.coordinate(iy);
    }
  }

  // Parameters: amplitude, x0, y0, w. Coordinates are scaled by the initial
  // width so the normal equations are well balanced.
  const double scale = fallback;
  Eigen::Vector4d p(peak, sx / s0 / scale, sy / s0 / scale, 1.0);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = grid.coordinate(i) / scale;

  auto evaluate = [&](const Eigen::Vector4d& params, Eigen::Matrix4d* jtj, Eigen::Vector4d* jtr) {
    double cost = 0.0;
    if (jtj) jtj->setZero();
    if (jtr) jtr->setZero();
    const double inv_w2 = 1.0 / (params[3] * params[3]);
    for (std::size_t iy = 0; iy < n; ++iy) {
      const double dy = xs[iy] - params[2];
      for (std::size_t ix = 0; ix < n; ++ix) {
        const double dx = xs[ix] - params[1];
        const double r2 = dx * dx + dy * dy;
        const double g = std::exp(-2.0 * r2 * inv_w2);
        const double model = params[0] * g;
        const double res = intensity[iy * n + ix] - model;
        cost += res * res;
        if (jtj) {
          const Eigen::Vector4d j(g, model * 4.0 * dx * inv_w2, model * 4.0 * dy * inv_w2,
                                  model * 4.0 * r2 * inv_w2 / params[3]);
          jtj->noalias() += j * j.transpose();
          jtr->noalias() += j * res;
        }
      }
    }
    return cost;
  };

  double lambda = 1e-3;
  Eigen::Matrix4d jtj;
  Eigen::Vector4d jtr;
  double cost = evaluate(p, &jtj, &jtr);
  for (int iter = 1; iter <= 200; ++iter) {
    Eigen::Matrix4d a = jtj;
    a.diagonal() += lambda * jtj.diagonal();
    const Eigen::Vector4d step = a.ldlt().solve(jtr);
    Eigen::Vector4d trial = p + step;
    if (!step.allFinite() || trial[3] <= 0.0 || trial[0] <= 0.0) {
      lambda *= 10.0;
    } else {
      const double trial_cost = evaluate(trial, nullptr, nullptr);
      if (trial_cost <= cost) {
        p = trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        const bool small = step.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff()) ||
                           std::abs(step[3]) <= 1e-12 * p[3];
        if (small || cost - trial_cost <= 1e-15 * cost) {
          return WidthFit{p[3] * scale, p[1] * scale, p[2] * scale, p[0], iter};
        }
        cost = evaluate(p, &jtj, &jtr);
      } else {
        lambda *= 10.0;
      }
    }
    if (lambda > 1e12) break;
  }
  throw WidthFitError("Gaussian width fit did not converge; second-moment width " +
                          std::to_string(fallback) + " m",
                      fallback);
}

double width_from_rytov(double sigma_r2, double w0, double fresnel, double coefficient) {
  const double factor = 1.0 + coefficient * std::pow(fresnel, 5.0 / 6.0) * sigma_r2;
  if (!(factor >= 0.0)) throw std::invalid_argument("negative long-term width squared");
  return w0 * std::sqrt(factor);
}

double rytov_from_width(double w_lt, double w0, double fresnel, double coefficient) {
  const double ratio = w_lt / w0;
  return (ratio * ratio - 1.0) / (coefficient * std::pow(fresnel, 5.0 / 6.0));
}

double calibration_alpha(double fresnel, double coefficient) {
  return coefficient * std::pow(fresnel, 5.0 / 6.0);
}

}  // namespace turbcancel
