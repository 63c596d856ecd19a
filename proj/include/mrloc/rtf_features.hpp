#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "mrloc/signal_synthesis.hpp"

namespace mrloc {

using Complex = std::complex<double>;

enum class WindowKind { Hann, Rectangular };

enum class SpectrumKind { Auto, Cross };

struct WelchParams {
  double window_s = 0.128;
  double overlap = 0.75;
  int fft_size = 2048;
  WindowKind window = WindowKind::Hann;
};

// Segment-averaged (cross-)periodogram on the full D-point grid, scaled as a
// one-sided-agnostic density: values = mean_k(Y_k conj(X_k)) / (fs * sum w^2).
struct SpectralEstimate {
  std::vector<Complex> values;
  SpectrumKind kind = SpectrumKind::Auto;
  int window_length = 0;
  double overlap = 0.0;
  int num_segments = 0;
  double sample_rate = 0.0;

  int size() const { return static_cast<int>(values.size()); }
};

struct WelchResult {
  SpectralEstimate sxx;  // auto-spectrum of x
  SpectralEstimate syx;  // cross-spectrum E[Y conj(X)]
};

WelchResult welch_spectra(const MicrophonePair& pair, const WelchParams& params);

// Strictly increasing bin indices within [0, D/2], shared between every RTF
// of a dataset.
struct Band {
  std::vector<int> bins;
  int fft_size = 0;

  friend bool operator==(const Band&, const Band&) = default;
};

using BandPtr = std::shared_ptr<const Band>;

// Bins first_bin..bin nearest `high_hz` (inclusive).
BandPtr make_band(int fft_size, double sample_rate, double high_hz = 4000.0, int first_bin = 1);

struct RtfVector {
  std::vector<Complex> values;
  BandPtr band;

  std::size_t size() const { return values.size(); }
  // Interleaved (re, im) real view used where kernel code wants reals.
  std::vector<double> interleaved() const;
};

bool same_band(const RtfVector& a, const RtfVector& b);
void require_same_band(const RtfVector& a, const RtfVector& b);

// Relative floor below which an Sxx bin inside the band counts as degenerate.
inline constexpr double kDefaultSxxFloor = 1e-12;

// H(k) = Syx(k) / Sxx(k) on the band. Throws DegenerateBinError listing every
// band bin whose Sxx is below floor * mean(Sxx over band).
RtfVector estimate_rtf(const SpectralEstimate& sxx, const SpectralEstimate& syx, const BandPtr& band,
                       double relative_floor = kDefaultSxxFloor);

// Ratio on the full grid, no band selection (used to inspect symmetry).
std::vector<Complex> rtf_full_grid(const SpectralEstimate& sxx, const SpectralEstimate& syx);

// Squared Euclidean distance of the complex difference.
double rtf_distance_sq(const RtfVector& a, const RtfVector& b);
double rtf_distance(const RtfVector& a, const RtfVector& b);

// Convenience: Welch spectra followed by estimate_rtf.
RtfVector extract_rtf(const MicrophonePair& pair, const WelchParams& params, const BandPtr& band);

}  // namespace mrloc
