#include "mrloc/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace mrloc::fft {
namespace {

// The FFTW planner is not re-entrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Buffer {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
};

// One pair of plans per transform size, owned by the calling thread.
// FFTW_ESTIMATE keeps the chosen algorithm independent of timing, so
// results are reproducible run to run.
class Plan {
 public:
  explicit Plan(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    buf_.real = fftw_alloc_real(n);
    buf_.spec = fftw_alloc_complex(n / 2 + 1);
    if (!buf_.real || !buf_.spec) throw std::bad_alloc();
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf_.real, buf_.spec, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), buf_.spec, buf_.real, FFTW_ESTIMATE);
  }

  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(buf_.real);
    fftw_free(buf_.spec);
  }

  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;

  std::vector<Complex> forward(std::span<const double> input) {
    const std::size_t m = std::min(input.size(), n_);
    std::copy_n(input.begin(), m, buf_.real);
    std::fill(buf_.real + m, buf_.real + n_, 0.0);
    fftw_execute(forward_);
    std::vector<Complex> out(n_ / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = {buf_.spec[k][0], buf_.spec[k][1]};
    return out;
  }

  std::vector<double> inverse(std::span<const Complex> half) {
    for (std::size_t k = 0; k < n_ / 2 + 1; ++k) {
      buf_.spec[k][0] = half[k].real();
      buf_.spec[k][1] = half[k].imag();
    }
    fftw_execute(inverse_);
    std::vector<double> out(buf_.real, buf_.real + n_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (double& v : out) v *= scale;
    return out;
  }

 private:
  std::size_t n_;
  Buffer buf_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

Plan& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<Plan>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Plan>(n);
  return *slot;
}

}  // namespace

std::vector<Complex> rfft(std::span<const double> input, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rfft: zero transform size");
  return plan_for(n).forward(input);
}

std::vector<Complex> rfft_full(std::span<const double> input, std::size_t n) {
  auto half = rfft(input, n);
  std::vector<Complex> full(n);
  std::copy(half.begin(), half.end(), full.begin());
  for (std::size_t k = n / 2 + 1; k < n; ++k) full[k] = std::conj(full[n - k]);
  return full;
}

std::vector<double> irfft(std::span<const Complex> half, std::size_t n) {
  if (n == 0) throw std::invalid_argument("irfft: zero transform size");
  if (half.size() != n / 2 + 1) throw std::invalid_argument("irfft: expected n/2+1 bins");
  return plan_for(n).inverse(half);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace mrloc::fft
