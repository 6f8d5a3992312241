#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "turbcancel/detail/fft.hpp"
#include "turbcancel/error.hpp"
#include "turbcancel/two_photon.hpp"

namespace turbcancel {

namespace {

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

cdouble propagator_1d(double k, double distance) {
  // sqrt(1 / (i lambda L)) on the principal branch.
  const double lambda = 2.0 * kPi / k;
  return std::sqrt(cdouble(0.0, -1.0 / (lambda * distance)));
}

void check_kernel_wavenumber(double k_pump, double k_ref) {
  if (std::abs(k_pump - 2.0 * k_ref) > 0.01 * k_pump) {
    throw std::invalid_argument("wavenumber mismatch: kernel must be expressed at k_p / 2");
  }
}

std::size_t detector_index(const Field1D& pump, double x) {
  const double idx = x / pump.dx + static_cast<double>(pump.samples.size() / 2);
  const long rounded = std::lround(idx);
  if (std::abs(idx - static_cast<double>(rounded)) > 1e-6 || rounded < 0 ||
      rounded >= static_cast<long>(pump.samples.size())) {
    throw std::invalid_argument("detector point is not on the pump grid");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

double PolynomialKernel1D::operator()(double u) const {
  const double t = u / u_scale;
  double acc = 0.0;
  for (std::size_t m = amplitudes.size(); m-- > 0;) acc = (acc + amplitudes[m]) * t;
  return acc;
}

Field1D converging_gaussian_1d(std::size_t n, double dx, double k, double waist_at_target,
                               double distance_to_target) {
  if (n < 32 || (n & (n - 1)) != 0) throw std::invalid_argument("1-D grid size must be a power of two >= 32");
  if (!(dx > 0.0)) throw std::invalid_argument("1-D grid spacing must be positive");
  if (waist_at_target < 2.0 * dx) throw std::invalid_argument("waist unresolvable on 1-D grid");
  const double extent = static_cast<double>(n) * dx;
  if (gaussian_beam_radius(k, waist_at_target, distance_to_target) > 0.25 * extent) {
    throw std::invalid_argument("source beam radius exceeds extent/4 on 1-D grid");
  }
  const double z_r = 0.5 * k * waist_at_target * waist_at_target;
  const cdouble coeff = cdouble(0.0, 0.5 * k) / cdouble(-distance_to_target, -z_r);
  Field1D out{dx, k, std::vector<cdouble>(n)};
  double energy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = out.coordinate(i);
    out.samples[i] = std::exp(coeff * (x * x));
    energy += std::norm(out.samples[i]);
  }
  const double scale = 1.0 / std::sqrt(energy * dx);
  for (auto& s : out.samples) s *= scale;
  return out;
}

std::vector<cdouble> coincidence_quadrature_1d(const Field1D& pump, const PolynomialKernel1D& kernel,
                                               CoincidenceMode mode, double distance,
                                               std::span<const double> detector_points) {
  check_kernel_wavenumber(pump.k, kernel.k_ref);
  const cdouble prefactor = propagator_1d(pump.k, distance) * pump.dx;
  std::vector<cdouble> out;
  out.reserve(detector_points.size());
  for (double rho : detector_points) {
    const std::size_t id = detector_index(pump, rho);
    cdouble acc = 0.0;
    for (std::size_t i = 0; i < pump.samples.size(); ++i) {
      const double u = (static_cast<double>(i) - static_cast<double>(id)) * pump.dx;
      const double psi =
          mode == CoincidenceMode::direct ? 2.0 * kernel(u) : kernel(u) + kernel(-u);
      acc += pump.samples[i] * std::polar(1.0, 0.5 * pump.k * u * u / distance + psi);
    }
    out.push_back(acc * prefactor);
  }
  return out;
}

std::size_t phase_matching_samples(double beta, double step, std::size_t minimum) {
  const double dt = 0.5 * step;
  std::size_t n = 1;
  while (n < minimum || static_cast<double>(n) * dt * dt < 2.0 * 4.0 * kPi * beta) n <<= 1;
  return n;
}

std::vector<double> phase_matching_kernel(double beta, double step, std::size_t n) {
  if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("kernel sample count must be a power of two");
  if (!(step > 0.0)) throw std::invalid_argument("separation step must be positive");
  if (beta < 0.0) throw std::invalid_argument("beta must be >= 0");
  // S(s) = int sinc(beta p^2) exp(i p s / 2) dp, sampled in t = s/2.
  const double dt = 0.5 * step;
  if (static_cast<double>(n) * dt * dt < 4.0 * kPi * beta) {
    throw NumericalGuardError(
        "phase-matching kernel unresolved: the sinc spectrum chirp needs n*(step/2)^2 >= 4 pi beta (n = " +
        std::to_string(n) + ", required n >= " +
        std::to_string(static_cast<std::size_t>(std::ceil(4.0 * kPi * beta / (dt * dt)))) + ")");
  }
  std::vector<cdouble> spectrum(n);
  const double dp = 2.0 * kPi / (static_cast<double>(n) * dt);
  for (std::size_t j = 0; j < n; ++j) {
    const double p = static_cast<double>(detail::fft_index(j, n)) * dp;
    spectrum[j] = sinc(beta * p * p);
  }
  detail::fft_1d(spectrum, detail::FftSign::backward);

  std::vector<double> out(n);
  double area = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const long offset = static_cast<long>(c) - static_cast<long>(n / 2);
    const std::size_t l = static_cast<std::size_t>((offset + static_cast<long>(n)) % static_cast<long>(n));
    out[c] = spectrum[l].real();
    area += out[c];
  }
  area *= step;
  for (auto& v : out) v /= area;
  return out;
}

std::vector<cdouble> spdc_sinc_amplitude(const Field1D& pump, const CrystalModel& crystal,
                                         const PolynomialKernel1D& kernel, CoincidenceMode mode,
                                         double distance, std::span<const double> detector_points,
                                         const SincQuadratureOptions& options) {
  if (std::holds_alternative<DeltaCrystal>(crystal)) {
    return coincidence_quadrature_1d(pump, kernel, mode, distance, detector_points);
  }
  check_kernel_wavenumber(pump.k, kernel.k_ref);
  const double beta = std::get<SincCrystal>(crystal).beta;
  if (!(beta > 0.0)) throw std::invalid_argument("sinc crystal needs beta > 0");

  const double ds = options.separation_step;
  const long ratio = std::lround(pump.dx / ds);
  if (ratio < 1 || std::abs(static_cast<double>(ratio) * ds - pump.dx) > 1e-9 * pump.dx) {
    throw std::invalid_argument("separation step must divide the pump grid spacing");
  }
  const std::size_t n_s = phase_matching_samples(beta, ds, options.min_separation_samples);
  const std::vector<double> s_kernel = phase_matching_kernel(beta, ds, n_s);

  // Phase tables on the half-step lattice h = ds/2 for each photon:
  //   T1(u) = exp(i [k u^2 / 2L + phi(u)]),  T2(u) = exp(i [k u^2 / 2L + phi2(u)])
  // with phi2(u) = phi(u) (direct) or phi(-u) (reflected photon frame).
  const double h = 0.5 * ds;
  const double k = 0.5 * pump.k;
  const long n_pump = static_cast<long>(pump.samples.size());
  const long reach = 2 * ratio * n_pump + static_cast<long>(n_s / 2) + 1;
  std::vector<cdouble> t1(static_cast<std::size_t>(2 * reach + 1));
  std::vector<cdouble> t2(t1.size());
  const bool reflected = mode != CoincidenceMode::direct;
  for (long j = -reach; j <= reach; ++j) {
    const double u = static_cast<double>(j) * h;
    const double chirp = 0.5 * k * u * u / distance;
    t1[static_cast<std::size_t>(j + reach)] = std::polar(1.0, chirp + kernel(u));
    t2[static_cast<std::size_t>(j + reach)] = std::polar(1.0, chirp + kernel(reflected ? -u : u));
  }

  double e_max = 0.0;
  for (const auto& e : pump.samples) e_max = std::max(e_max, std::abs(e));
  const double e_floor = 1e-13 * e_max;

  const cdouble prefactor = propagator_1d(pump.k, distance) * pump.dx * ds;
  const long half_s = static_cast<long>(n_s / 2);
  std::vector<cdouble> out;
  out.reserve(detector_points.size());
  for (double rho : detector_points) {
    const long id = static_cast<long>(detector_index(pump, rho));
    cdouble acc = 0.0;
    for (long i = 0; i < n_pump; ++i) {
      const cdouble e = pump.samples[static_cast<std::size_t>(i)];
      if (std::abs(e) < e_floor) continue;
      const long base = 2 * ratio * (i - id) + reach;
      cdouble inner = 0.0;
      for (long c = 0; c < static_cast<long>(n_s); ++c) {
        const long js = c - half_s;
        inner += s_kernel[static_cast<std::size_t>(c)] * t1[static_cast<std::size_t>(base + js)] *
                 t2[static_cast<std::size_t>(base - js)];
      }
      acc += e * inner;
    }
    out.push_back(acc * prefactor);
  }
  return out;
}

}  // namespace turbcancel
