#include "turbcancel/detail/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace turbcancel::detail {

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t rows, std::size_t cols, FftSign sign) {
    const Key key{rows, cols, sign};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    // The planner is not thread-safe; planning happens under the lock on a
    // scratch buffer, execution later uses the new-array interface.
    std::vector<std::complex<double>> scratch(rows * cols);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int dir = sign == FftSign::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = rows == 1
                         ? fftw_plan_dft_1d(static_cast<int>(cols), buf, buf, dir, flags)
                         : fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf,
                                            buf, dir, flags);
    if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  using Key = std::tuple<std::size_t, std::size_t, FftSign>;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols,
             FftSign sign) {
  if (data.size() != rows * cols) throw std::invalid_argument("FFT buffer size mismatch");
  fftw_plan plan = cache().get(rows, cols, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace

void fft_2d(std::span<std::complex<double>> data, std::size_t n, FftSign sign) {
  execute(data, n, n, sign);
}

void fft_1d(std::span<std::complex<double>> data, FftSign sign) {
  execute(data, 1, data.size(), sign);
}

}  // namespace turbcancel::detail
