#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "turbcancel/detail/fft.hpp"
#include "turbcancel/turbulence.hpp"

namespace turbcancel {

using detail::FftSign;

// Zero-padded masked correlations on a 2n grid:
//   num(r) = sum w w' (phi' - phi)^2 = C(phi^2, w) + C(w, phi^2) - 2 C(phi, phi)
//   den(r) = C(w, w)
StructureFunctionAccumulator::StructureFunctionAccumulator(const Grid2D& grid) : grid_(grid) {
  const std::size_t n = grid.n();
  const std::size_t m = 2 * n;
  const std::size_t bins = n / 2;

  w_hat_.assign(m * m, cdouble{});
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) w_hat_[iy * m + ix] = 1.0;
  }
  detail::fft_2d(w_hat_, m, FftSign::forward);

  std::vector<cdouble> den(m * m);
  for (std::size_t i = 0; i < den.size(); ++i) den[i] = std::norm(w_hat_[i]);
  detail::fft_2d(den, m, FftSign::backward);

  // Lag -> radial bin lookup, restricted to |r| < (bins + 0.5) dx.
  bin_of_.assign(m * m, -1);
  den_bin_.assign(bins, 0.0);
  radius_bin_.assign(bins, 0.0);
  lags_.assign(bins, 0);
  for (std::size_t ly = 0; ly < m; ++ly) {
    const double ry = static_cast<double>(detail::fft_index(ly, m));
    for (std::size_t lx = 0; lx < m; ++lx) {
      const double rx = static_cast<double>(detail::fft_index(lx, m));
      const double r = std::hypot(rx, ry);
      const long b = std::lround(r);
      if (b < 1 || b > static_cast<long>(bins)) continue;
      const std::size_t i = ly * m + lx;
      bin_of_[i] = static_cast<int>(b - 1);
      den_bin_[b - 1] += den[i].real();
      radius_bin_[b - 1] += den[i].real() * r;
      ++lags_[b - 1];
    }
  }
  sum_.assign(bins, 0.0);
  sum_sq_.assign(bins, 0.0);
}

void StructureFunctionAccumulator::add(const PhaseScreen& screen) {
  if (!same_sampling(screen.grid, grid_)) {
    throw std::invalid_argument("structure-function ensemble mixes grids");
  }
  const std::size_t n = grid_.n();
  const std::size_t m = 2 * n;
  std::vector<cdouble> u(m * m), u2(m * m);
  for (std::size_t iy = 0; iy < n; ++iy) {
    for (std::size_t ix = 0; ix < n; ++ix) {
      const double v = screen.phase[iy * n + ix];
      u[iy * m + ix] = v;
      u2[iy * m + ix] = v * v;
    }
  }
  detail::fft_2d(u, m, FftSign::forward);
  detail::fft_2d(u2, m, FftSign::forward);
  for (std::size_t i = 0; i < m * m; ++i) {
    u[i] = std::conj(u2[i]) * w_hat_[i] + std::conj(w_hat_[i]) * u2[i] - 2.0 * std::norm(u[i]);
  }
  detail::fft_2d(u, m, FftSign::backward);

  std::vector<double> num_bin(sum_.size(), 0.0);
  for (std::size_t i = 0; i < m * m; ++i) {
    if (bin_of_[i] >= 0) num_bin[bin_of_[i]] += u[i].real();
  }
  for (std::size_t b = 0; b < sum_.size(); ++b) {
    const double d = num_bin[b] / den_bin_[b];
    sum_[b] += d;
    sum_sq_[b] += d * d;
  }
  ++count_;
}

std::vector<StructureBin> StructureFunctionAccumulator::result() const {
  if (count_ < 50) {
    throw std::invalid_argument("structure-function ensemble needs >= 50 screens, got " +
                                std::to_string(count_));
  }
  const double count = static_cast<double>(count_);
  std::vector<StructureBin> out(sum_.size());
  for (std::size_t b = 0; b < sum_.size(); ++b) {
    const double mean = sum_[b] / count;
    const double var = std::max(0.0, (sum_sq_[b] - count * mean * mean) / (count - 1.0));
    // Pair-weighted mean separation of the shell.
    out[b] = {radius_bin_[b] / den_bin_[b] * grid_.dx(), std::max(0.0, mean),
              std::sqrt(var / count), lags_[b]};
  }
  return out;
}

std::vector<StructureBin> estimate_structure_function(std::span<const PhaseScreen> ensemble) {
  if (ensemble.size() < 50) {
    throw std::invalid_argument("structure-function ensemble needs >= 50 screens, got " +
                                std::to_string(ensemble.size()));
  }
  StructureFunctionAccumulator acc(ensemble.front().grid);
  for (const auto& screen : ensemble) acc.add(screen);
  return acc.result();
}

}  // namespace turbcancel
