#include "turbcancel/propagation.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "turbcancel/detail/fft.hpp"
#include "turbcancel/error.hpp"

namespace turbcancel {

namespace {

using detail::FftSign;

constexpr double kSamplingSlack = 1e-9;

std::vector<double> fft_frequencies(const Grid2D& grid) {
  const std::size_t n = grid.n();
  std::vector<double> f(n);
  for (std::size_t m = 0; m < n; ++m) {
    f[m] = static_cast<double>(detail::fft_index(m, n)) / grid.extent();
  }
  return f;
}

}  // namespace

double max_transfer_distance(const Grid2D& grid, double k) {
  const double lambda = 2.0 * kPi / k;
  return static_cast<double>(grid.n()) * grid.dx() * grid.dx() / lambda;
}

double min_kernel_distance(const Grid2D& grid, double k) { return max_transfer_distance(grid, k); }

ComplexField fresnel_propagate(const ComplexField& field, double distance) {
  if (distance < 0.0) throw std::invalid_argument("propagation distance must be >= 0");
  if (distance == 0.0) return field;
  const Grid2D& grid = field.grid();
  const double z_max = max_transfer_distance(grid, field.k());
  if (distance > z_max * (1.0 + kSamplingSlack)) {
    const double lambda = 2.0 * kPi / field.k();
    const double n_min = lambda * distance / (grid.dx() * grid.dx());
    std::ostringstream msg;
    msg << "Fresnel transfer function aliased: distance " << distance << " m exceeds n dx^2/lambda = "
        << z_max << " m (need n >= " << std::ceil(n_min) << " at this dx, or distance <= " << z_max
        << " m)";
    throw NumericalGuardError(msg.str());
  }

  const std::size_t n = grid.n();
  const double lambda = 2.0 * kPi / field.k();
  const auto f = fft_frequencies(grid);
  std::vector<double> quad(n);
  for (std::size_t m = 0; m < n; ++m) quad[m] = -kPi * lambda * distance * f[m] * f[m];
  std::vector<cdouble> hx(n);
  for (std::size_t m = 0; m < n; ++m) hx[m] = std::polar(1.0, quad[m]);

  std::vector<cdouble> data(field.samples().begin(), field.samples().end());
  detail::fft_2d(data, n, FftSign::forward);
  const double norm = 1.0 / static_cast<double>(grid.size());
  for (std::size_t my = 0; my < n; ++my) {
    const cdouble hy = hx[my] * norm;
    for (std::size_t mx = 0; mx < n; ++mx) data[my * n + mx] *= hy * hx[mx];
  }
  detail::fft_2d(data, n, FftSign::backward);
  return ComplexField(grid, field.k(), std::move(data));
}

ComplexField split_step_through_screen(const ComplexField& source, const PhaseScreen& screen,
                                       double total_distance) {
  if (!same_sampling(source.grid(), screen.grid)) {
    throw std::invalid_argument("screen grid does not match field grid");
  }
  if (!(screen.z_screen > 0.0 && screen.z_screen < total_distance)) {
    throw std::invalid_argument("screen position must lie strictly inside (0, L)");
  }
  return fresnel_propagate(apply_screen(fresnel_propagate(source, screen.z_screen), screen),
                           total_distance - screen.z_screen);
}

ComplexField apply_screen(const ComplexField& field, const PhaseScreen& screen) {
  if (!same_sampling(field.grid(), screen.grid)) {
    throw std::invalid_argument("screen grid does not match field grid");
  }
  const double scale = field.k() / screen.k_ref;
  std::vector<cdouble> data(field.samples().begin(), field.samples().end());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= std::polar(1.0, screen.phase[i] * scale);
  return ComplexField(field.grid(), field.k(), std::move(data));
}

KernelConvolver::KernelConvolver(const ComplexField& source, double total_distance)
    : grid_(source.grid()), k_(source.k()), distance_(total_distance) {
  if (!(total_distance > 0.0)) throw std::invalid_argument("kernel distance must be positive");
  const double z_min = min_kernel_distance(grid_, k_);
  if (total_distance < z_min * (1.0 - kSamplingSlack)) {
    std::ostringstream msg;
    msg << "Fresnel chirp kernel aliased: distance " << total_distance
        << " m is below n dx^2/lambda = " << z_min << " m (need n <= "
        << std::floor(2.0 * kPi / k_ * total_distance / (grid_.dx() * grid_.dx()))
        << " at this dx)";
    throw NumericalGuardError(msg.str());
  }

  const std::size_t n = grid_.n();
  source_spectrum_.assign(source.samples().begin(), source.samples().end());
  detail::fft_2d(source_spectrum_, n, FftSign::forward);

  // out = E (star) h = E * g with g(v) = h(-v); g is laid out in FFT order
  // (v = fft_index * dx) and reads the centred kernel at -v.
  chirp_phase_.resize(grid_.size());
  reflected_.resize(grid_.size());
  const long half = static_cast<long>(n / 2);
  const long nn = static_cast<long>(n);
  for (std::size_t my = 0; my < n; ++my) {
    const long vy = detail::fft_index(my, n);
    const std::size_t cy = static_cast<std::size_t>(((half - vy) % nn + nn) % nn);
    for (std::size_t mx = 0; mx < n; ++mx) {
      const long vx = detail::fft_index(mx, n);
      const std::size_t cx = static_cast<std::size_t>(((half - vx) % nn + nn) % nn);
      const double ux = static_cast<double>(vx) * grid_.dx();
      const double uy = static_cast<double>(vy) * grid_.dx();
      chirp_phase_[my * n + mx] = 0.5 * k_ * (ux * ux + uy * uy) / distance_;
      reflected_[my * n + mx] = cy * n + cx;
    }
  }
}

ComplexField KernelConvolver::apply(const KernelAberration& kernel) const {
  return apply(kernel, 1.0);
}

ComplexField KernelConvolver::apply(const KernelAberration& kernel, double phase_scale) const {
  if (!same_sampling(kernel.grid, grid_)) {
    throw std::invalid_argument("kernel grid does not match source grid");
  }
  const std::size_t n = grid_.n();
  const double lambda = 2.0 * kPi / k_;
  // 1/(i lambda L) dx^2, and 1/n^2 for the unnormalised inverse FFT.
  const cdouble prefactor = cdouble(0.0, -1.0) * (grid_.dx() * grid_.dx() / (lambda * distance_)) /
                            static_cast<double>(grid_.size());

  std::vector<cdouble> g(grid_.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = std::polar(1.0, chirp_phase_[i] + phase_scale * kernel.phase[reflected_[i]]);
  }
  detail::fft_2d(g, n, FftSign::forward);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= source_spectrum_[i] * prefactor;
  detail::fft_2d(g, n, FftSign::backward);
  return ComplexField(grid_, k_, std::move(g));
}

ComplexField kernel_convolve(const ComplexField& source, const KernelAberration& kernel,
                             double total_distance) {
  if (std::abs(kernel.k_ref - source.k()) > 1e-9 * source.k()) {
    throw std::invalid_argument("kernel must be expressed at the source wavenumber");
  }
  return KernelConvolver(source, total_distance).apply(kernel);
}

}  // namespace turbcancel
