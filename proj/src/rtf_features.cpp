#include "mrloc/rtf_features.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mrloc/error.hpp"
#include "mrloc/fft.hpp"

namespace mrloc {
namespace {

std::vector<double> make_window(WindowKind kind, int length) {
  std::vector<double> w(static_cast<std::size_t>(length), 1.0);
  if (kind == WindowKind::Hann) {
    for (int m = 0; m < length; ++m) w[m] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * m / length);
  }
  return w;
}

}  // namespace

WelchResult welch_spectra(const MicrophonePair& pair, const WelchParams& params) {
  if (pair.x.size() != pair.y.size()) throw SignalError("microphone channels differ in length");
  if (!(params.overlap >= 0.0 && params.overlap < 1.0)) throw SignalError("overlap must lie in [0, 1)");
  const int window_length = static_cast<int>(std::lround(params.window_s * pair.sample_rate));
  const int nfft = params.fft_size;
  if (window_length < 1) throw SignalError("analysis window shorter than one sample");
  if (nfft < window_length) throw SignalError("transform size smaller than the analysis window");
  if (pair.x.size() < static_cast<std::size_t>(window_length))
    throw SignalError("signal shorter than one analysis window (" + std::to_string(pair.x.size()) + " < " +
                      std::to_string(window_length) + " samples)");

  const int hop = std::max(1, static_cast<int>(std::lround(window_length * (1.0 - params.overlap))));
  const int segments = static_cast<int>((pair.x.size() - window_length) / hop) + 1;
  const auto window = make_window(params.window, window_length);
  double window_power = 0.0;
  for (double v : window) window_power += v * v;

  const std::size_t half = static_cast<std::size_t>(nfft) / 2 + 1;
  std::vector<Complex> sxx(half), syx(half);
  std::vector<double> xs(window_length), ys(window_length);
  for (int seg = 0; seg < segments; ++seg) {
    const std::size_t start = static_cast<std::size_t>(seg) * hop;
    for (int m = 0; m < window_length; ++m) {
      xs[m] = pair.x[start + m] * window[m];
      ys[m] = pair.y[start + m] * window[m];
    }
    const auto X = fft::rfft(xs, nfft);
    const auto Y = fft::rfft(ys, nfft);
    for (std::size_t k = 0; k < half; ++k) {
      sxx[k] += X[k] * std::conj(X[k]);
      syx[k] += Y[k] * std::conj(X[k]);
    }
  }

  const double scale = 1.0 / (pair.sample_rate * window_power * segments);
  WelchResult out;
  for (auto* est : {&out.sxx, &out.syx}) {
    est->values.assign(static_cast<std::size_t>(nfft), Complex{});
    est->window_length = window_length;
    est->overlap = params.overlap;
    est->num_segments = segments;
    est->sample_rate = pair.sample_rate;
  }
  out.sxx.kind = SpectrumKind::Auto;
  out.syx.kind = SpectrumKind::Cross;
  for (std::size_t k = 0; k < half; ++k) {
    out.sxx.values[k] = Complex(sxx[k].real() * scale, 0.0);
    out.syx.values[k] = syx[k] * scale;
  }
  for (std::size_t k = half; k < static_cast<std::size_t>(nfft); ++k) {
    out.sxx.values[k] = out.sxx.values[nfft - k];
    out.syx.values[k] = std::conj(out.syx.values[nfft - k]);
  }
  return out;
}

BandPtr make_band(int fft_size, double sample_rate, double high_hz, int first_bin) {
  if (fft_size < 2) throw SignalError("transform size too small for a band");
  const int nyquist = fft_size / 2;
  const int last = std::min(nyquist, static_cast<int>(std::lround(high_hz / sample_rate * fft_size)));
  if (first_bin < 0 || first_bin > last) throw SignalError("empty frequency band");
  auto band = std::make_shared<Band>();
  band->fft_size = fft_size;
  for (int k = first_bin; k <= last; ++k) band->bins.push_back(k);
  return band;
}

std::vector<double> RtfVector::interleaved() const {
  std::vector<double> out;
  out.reserve(values.size() * 2);
  for (const auto& v : values) {
    out.push_back(v.real());
    out.push_back(v.imag());
  }
  return out;
}

bool same_band(const RtfVector& a, const RtfVector& b) {
  if (a.band == b.band) return true;
  if (!a.band || !b.band) return false;
  return *a.band == *b.band;
}

void require_same_band(const RtfVector& a, const RtfVector& b) {
  if (!same_band(a, b) || a.values.size() != b.values.size())
    throw BandMismatchError("RTF vectors are defined on different frequency bands");
}

RtfVector estimate_rtf(const SpectralEstimate& sxx, const SpectralEstimate& syx, const BandPtr& band,
                       double relative_floor) {
  if (!band) throw SignalError("no band selected");
  if (sxx.size() != syx.size() || sxx.size() != band->fft_size)
    throw BandMismatchError("spectra and band use different transform sizes");

  double mean = 0.0;
  for (int k : band->bins) mean += sxx.values[k].real();
  mean /= static_cast<double>(band->bins.size());
  const double floor = relative_floor * mean;

  std::vector<int> bad;
  for (int k : band->bins) {
    const double p = sxx.values[k].real();
    if (!(p > floor) || !(p > 0.0)) bad.push_back(k);
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t i = 0; i < bad.size() && i < 16; ++i) list += (i ? "," : "") + std::to_string(bad[i]);
    if (bad.size() > 16) list += ",...";
    throw DegenerateBinError("auto-spectrum vanishes in " + std::to_string(bad.size()) + " band bin(s): " + list,
                             std::move(bad));
  }

  RtfVector h;
  h.band = band;
  h.values.reserve(band->bins.size());
  for (int k : band->bins) h.values.push_back(syx.values[k] / sxx.values[k].real());
  return h;
}

std::vector<Complex> rtf_full_grid(const SpectralEstimate& sxx, const SpectralEstimate& syx) {
  if (sxx.size() != syx.size()) throw BandMismatchError("spectra differ in size");
  std::vector<Complex> h(sxx.values.size());
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = syx.values[k] / sxx.values[k].real();
  return h;
}

double rtf_distance_sq(const RtfVector& a, const RtfVector& b) {
  require_same_band(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) acc += std::norm(a.values[i] - b.values[i]);
  return acc;
}

double rtf_distance(const RtfVector& a, const RtfVector& b) { return std::sqrt(rtf_distance_sq(a, b)); }

RtfVector extract_rtf(const MicrophonePair& pair, const WelchParams& params, const BandPtr& band) {
  const auto spectra = welch_spectra(pair, params);
  return estimate_rtf(spectra.sxx, spectra.syx, band);
}

}  // namespace mrloc
