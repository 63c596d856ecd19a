#include "mrloc/signal_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mrloc/error.hpp"
#include "mrloc/fft.hpp"
#include "mrloc/wav_io.hpp"

namespace mrloc {

double energy(std::span<const double> v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
  }
  return out;
}

std::vector<double> convolve_overlap_add(std::span<const double> signal, std::span<const double> filter) {
  if (signal.empty() || filter.empty()) return {};
  const std::size_t m = filter.size();
  const std::size_t nfft = fft::next_pow2(std::max<std::size_t>(2 * m, 1024));
  const std::size_t block = nfft - m + 1;
  const auto filter_spec = fft::rfft(filter, nfft);

  std::vector<double> out(signal.size() + m - 1, 0.0);
  std::vector<fft::Complex> prod(filter_spec.size());
  for (std::size_t start = 0; start < signal.size(); start += block) {
    const std::size_t len = std::min(block, signal.size() - start);
    const auto seg = fft::rfft(signal.subspan(start, len), nfft);
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = seg[k] * filter_spec[k];
    const auto y = fft::irfft(prod, nfft);
    const std::size_t valid = std::min(len + m - 1, out.size() - start);
    for (std::size_t n = 0; n < valid; ++n) out[start + n] += y[n];
  }
  return out;
}

namespace {

// Short responses go through direct summation, which keeps trivial channels
// (a unit impulse, a pure gain) exact.
std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h) {
  constexpr std::size_t kDirectMaxTaps = 32;
  return h.size() <= kDirectMaxTaps ? convolve_direct(x, h) : convolve_overlap_add(x, h);
}

}  // namespace

MicrophonePair synthesize_pair(const SourceSignal& s, const ImpulseResponse& a1, const ImpulseResponse& a2,
                               double snr_db, std::uint64_t noise_seed) {
  if (s.sample_rate != a1.sample_rate || s.sample_rate != a2.sample_rate)
    throw SignalError("sample-rate mismatch between source and impulse responses");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw SignalError("SNR must be finite or +inf");
  if (!(energy(s.samples) > 0.0)) throw SignalError("source signal has zero energy");

  const std::size_t n = s.samples.size();
  MicrophonePair pair;
  pair.sample_rate = s.sample_rate;
  pair.x = convolve(s.samples, a1.taps);
  pair.y = convolve(s.samples, a2.taps);
  pair.x.resize(n);
  pair.y.resize(n);

  if (snr_db == kNoiseless) return pair;

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto* channel : {&pair.x, &pair.y}) {
    std::vector<double> noise(n);
    for (double& v : noise) v = normal(rng);
    const double clean = energy(*channel);
    if (!(clean > 0.0)) throw SignalError("reverberant signal has zero energy; SNR undefined");
    const double scale = std::sqrt(clean / std::pow(10.0, snr_db / 10.0) / energy(noise));
    for (std::size_t i = 0; i < n; ++i) (*channel)[i] += scale * noise[i];
  }
  return pair;
}

SourceSignal make_white_source(double duration_s, double sample_rate, std::uint64_t seed) {
  if (!(duration_s > 0.0) || !(sample_rate > 0.0)) throw SignalError("duration and sample rate must be positive");
  SourceSignal s;
  s.sample_rate = sample_rate;
  s.kind = SourceKind::WhiteNoise;
  s.samples.resize(static_cast<std::size_t>(std::llround(duration_s * sample_rate)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : s.samples) v = normal(rng);
  return s;
}

SourceSignal load_audio_source(const std::string& path) {
  auto audio = wav::read(path);
  if (audio.channels.size() != 1)
    throw IoError(path + ": expected a single channel, found " + std::to_string(audio.channels.size()));
  SourceSignal s;
  s.sample_rate = audio.sample_rate;
  s.kind = SourceKind::ExternalAudio;
  s.samples = std::move(audio.channels.front());
  const double e = energy(s.samples);
  if (!(e > 0.0)) throw SignalError(path + ": zero-energy audio");
  const double rms = std::sqrt(e / static_cast<double>(s.samples.size()));
  for (double& v : s.samples) v /= rms;
  return s;
}

void write_pair_wav(const std::string& path, const MicrophonePair& pair) {
  wav::Audio audio;
  audio.sample_rate = pair.sample_rate;
  audio.channels = {pair.x, pair.y};
  wav::write_float(path, audio);
}

}  // namespace mrloc
