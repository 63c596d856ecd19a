#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mrloc::fft {

using Complex = std::complex<double>;

// Forward real transform of `input` zero-padded (or truncated) to `n` points.
// Returns the n/2 + 1 non-negative frequency bins.
std::vector<Complex> rfft(std::span<const double> input, std::size_t n);

// Full n-point spectrum of a real sequence (negative frequencies filled by
// conjugate symmetry).
std::vector<Complex> rfft_full(std::span<const double> input, std::size_t n);

// Inverse of rfft: `half` holds n/2 + 1 bins; result has n samples and is
// scaled by 1/n.
std::vector<double> irfft(std::span<const Complex> half, std::size_t n);

std::size_t next_pow2(std::size_t n);

}  // namespace mrloc::fft
