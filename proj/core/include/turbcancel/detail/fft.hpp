#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace turbcancel::detail {

enum class FftSign { forward, backward };

// In-place unnormalised transforms backed by a process-wide FFTW plan cache.
// Plans are built with FFTW_ESTIMATE so results are bit-reproducible across
// runs; execution is safe from any thread.
void fft_2d(std::span<std::complex<double>> data, std::size_t n, FftSign sign);
void fft_1d(std::span<std::complex<double>> data, FftSign sign);

// Signed frequency index of FFT bin m for an n-point transform.
inline long fft_index(std::size_t m, std::size_t n) {
  return m < n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
}

}  // namespace turbcancel::detail
