#include "turbcancel/grid.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace turbcancel {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be a positive finite length, got " +
                                std::to_string(value));
  }
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void PhysicalSetup::validate() const {
  require_positive(lambda_pump, "lambda_pump");
  require_positive(lambda_down, "lambda_down");
  require_positive(lambda_cal, "lambda_cal");
  require_positive(distance, "L");
  require_positive(w0, "w0");
  require_positive(w_pump, "w_pump");
  require_positive(crystal_thickness, "tau");
  require_positive(slit_width, "slit_width");
  // Degenerate down-conversion: k_p = 2k.
  if (std::abs(lambda_pump - 0.5 * lambda_down) > 0.01 * 0.5 * lambda_down) {
    throw std::invalid_argument("lambda_pump must equal lambda_down/2 within 1% (got " +
                                std::to_string(lambda_pump) + " vs " +
                                std::to_string(lambda_down) + ")");
  }
}

Grid2D::Grid2D(std::size_t n, double dx) : n_(n), dx_(dx) {
  if (n < 32 || !is_power_of_two(n)) {
    throw std::invalid_argument("grid size must be a power of two >= 32, got " + std::to_string(n));
  }
  if (!(dx > 0.0) || !std::isfinite(dx)) {
    throw std::invalid_argument("grid spacing must be positive");
  }
}

Grid2D make_grid(std::size_t n, double extent) {
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw std::invalid_argument("grid extent must be positive, got " + std::to_string(extent));
  }
  if (n < 32 || !is_power_of_two(n)) {
    throw std::invalid_argument("grid size must be a power of two >= 32, got " + std::to_string(n));
  }
  return Grid2D(n, extent / static_cast<double>(n));
}

bool same_sampling(const Grid2D& a, const Grid2D& b) {
  return a.n() == b.n() && std::abs(a.dx() - b.dx()) <= 1e-12 * a.dx();
}

ComplexField::ComplexField(Grid2D grid, double k, std::vector<cdouble> samples)
    : grid_(grid), k_(k), samples_(std::move(samples)) {
  if (samples_.size() != grid_.size()) {
    throw std::invalid_argument("field sample count does not match grid");
  }
  if (!(k > 0.0)) throw std::invalid_argument("field wavenumber must be positive");
}

double ComplexField::energy() const {
  double sum = 0.0;
  for (const auto& s : samples_) sum += std::norm(s);
  return sum * grid_.dx() * grid_.dx();
}

std::vector<double> ComplexField::intensity() const {
  std::vector<double> out(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) out[i] = std::norm(samples_[i]);
  return out;
}

double gaussian_beam_radius(double k, double waist, double z) {
  const double z_r = 0.5 * k * waist * waist;
  return waist * std::sqrt(1.0 + (z / z_r) * (z / z_r));
}

ComplexField converging_gaussian(const Grid2D& grid, double k, double waist_at_target,
                                 double distance_to_target) {
  if (!(waist_at_target > 0.0)) throw std::invalid_argument("waist_at_target must be positive");
  if (distance_to_target < 0.0) throw std::invalid_argument("distance_to_target must be >= 0");
  if (waist_at_target < 2.0 * grid.dx()) {
    throw std::invalid_argument("waist " + std::to_string(waist_at_target) +
                                " m is unresolvable on a grid with dx = " +
                                std::to_string(grid.dx()) + " m (need waist >= 2 dx)");
  }
  const double source_radius = gaussian_beam_radius(k, waist_at_target, distance_to_target);
  if (source_radius > 0.25 * grid.extent()) {
    throw std::invalid_argument("source beam radius " + std::to_string(source_radius) +
                                " m exceeds extent/4 = " + std::to_string(0.25 * grid.extent()) +
                                " m");
  }

  // q-parameter a distance d before the waist: q = -d - i z_R, u = exp(i k r^2 / 2q).
  const double z_r = 0.5 * k * waist_at_target * waist_at_target;
  const cdouble inv_q = 1.0 / cdouble(-distance_to_target, -z_r);
  const cdouble coeff = cdouble(0.0, 0.5 * k) * inv_q;

  const std::size_t n = grid.n();
  std::vector<cdouble> samples(grid.size());
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double y = grid.coordinate(iy);
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double x = grid.coordinate(ix);
      samples[iy * n + ix] = std::exp(coeff * (x * x + y * y));
    }
  }
  double energy = 0.0;
  for (const auto& s : samples) energy += std::norm(s);
  const double scale = 1.0 / std::sqrt(energy * grid.dx() * grid.dx());
  for (auto& s : samples) s *= scale;
  return ComplexField(grid, k, std::move(samples));
}

double fresnel_ratio(const PhysicalSetup& setup) {
  return 2.0 * setup.distance / (setup.k_cal() * setup.w0 * setup.w0);
}

}  // namespace turbcancel
