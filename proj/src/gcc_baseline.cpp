#include "mrloc/gcc_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mrloc/error.hpp"
#include "mrloc/fft.hpp"

namespace mrloc {

CorrelationFunction gcc_correlation(const MicrophonePair& pair, int max_lag, GccWeighting weighting) {
  if (pair.x.size() != pair.y.size()) throw SignalError("microphone channels differ in length");
  if (max_lag < 1) throw SignalError("max_lag must be at least one sample");
  const std::size_t n = pair.x.size();
  if (n <= static_cast<std::size_t>(max_lag) + 1) throw SignalError("signals shorter than the correlation window");

  const std::size_t nfft = fft::next_pow2(2 * n);
  const auto X = fft::rfft(pair.x, nfft);
  const auto Y = fft::rfft(pair.y, nfft);
  std::vector<fft::Complex> cross(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) {
    cross[k] = Y[k] * std::conj(X[k]);
    if (weighting == GccWeighting::Phat) {
      const double mag = std::abs(cross[k]);
      cross[k] = mag > 0.0 ? cross[k] / mag : fft::Complex{};
    }
  }
  const auto r = fft::irfft(cross, nfft);

  CorrelationFunction c;
  c.max_lag = max_lag;
  c.sample_rate = pair.sample_rate;
  c.values.resize(2 * static_cast<std::size_t>(max_lag) + 1);
  for (int lag = -max_lag; lag <= max_lag; ++lag)
    c.values[lag + max_lag] = r[(static_cast<std::ptrdiff_t>(nfft) + lag) % static_cast<std::ptrdiff_t>(nfft)];
  return c;
}

GccPeak gcc_peak(const MicrophonePair& pair, int max_lag, GccWeighting weighting) {
  // One extra lag each side so the parabola has neighbours at the range edge.
  const auto c = gcc_correlation(pair, max_lag + 1, weighting);
  int best = -max_lag;
  for (int lag = -max_lag; lag <= max_lag; ++lag)
    if (c.at(lag) > c.at(best)) best = lag;

  std::vector<double> mag;
  for (int lag = -max_lag; lag <= max_lag; ++lag) mag.push_back(std::abs(c.at(lag)));
  auto mid = mag.begin() + mag.size() / 2;
  std::nth_element(mag.begin(), mid, mag.end());
  const double median = *mid;

  GccPeak peak;
  peak.lag = best;
  peak.peak_to_median = median > 0.0 ? c.at(best) / median : (c.at(best) > 0.0 ? HUGE_VAL : 0.0);

  const double ym = c.at(best - 1), y0 = c.at(best), yp = c.at(best + 1);
  const double denom = ym - 2.0 * y0 + yp;
  double delta = 0.0;
  if (denom < 0.0) delta = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
  peak.tdoa = (best + delta) / pair.sample_rate;
  return peak;
}

double gcc_tdoa(const MicrophonePair& pair, int max_lag, GccWeighting weighting) {
  const auto peak = gcc_peak(pair, max_lag, weighting);
  if (!(peak.peak_to_median >= kMinPeakToMedian))
    throw NoPeakError("correlation has no distinct peak (peak/median " + std::to_string(peak.peak_to_median) + ")",
                      peak.peak_to_median);
  return peak.tdoa;
}

int admissible_max_lag(double mic_spacing, double speed_of_sound, double sample_rate) {
  return std::max(1, static_cast<int>(std::ceil(sample_rate * mic_spacing / speed_of_sound)));
}

AzimuthInversion tdoa_to_azimuth(double tdoa, double mic_spacing, double source_radius, double speed_of_sound) {
  if (!(mic_spacing > 0.0) || !(source_radius > mic_spacing))
    throw GeometryError("source radius must exceed the microphone spacing");
  AzimuthInversion out;
  const double limit = mic_spacing / speed_of_sound;
  if (tdoa < -limit || tdoa > limit) {
    out.clamped = true;
    tdoa = std::clamp(tdoa, -limit, limit);
  }
  const double R = source_radius, d = mic_spacing;
  const double r2 = R + speed_of_sound * tdoa;
  const double cosine = std::clamp((R * R + d * d - r2 * r2) / (2.0 * R * d), -1.0, 1.0);
  out.azimuth = std::acos(cosine) * 180.0 / std::numbers::pi;
  return out;
}

AzimuthInversion tdoa_to_constellation_azimuth(const Constellation& cons, double tdoa, double speed_of_sound) {
  auto rel = tdoa_to_azimuth(tdoa, cons.mic_spacing(), cons.source_radius, speed_of_sound);
  const double axis = cons.mic_axis_azimuth();
  const double centre = 0.5 * (cons.azimuth_low + cons.azimuth_high);
  auto wrap_near_centre = [centre](double a) {
    while (a < centre - 180.0) a += 360.0;
    while (a >= centre + 180.0) a -= 360.0;
    return a;
  };
  auto outside = [&](double a) {
    if (a < cons.azimuth_low) return cons.azimuth_low - a;
    if (a > cons.azimuth_high) return a - cons.azimuth_high;
    return 0.0;
  };
  const double plus = wrap_near_centre(axis + rel.azimuth);
  const double minus = wrap_near_centre(axis - rel.azimuth);
  rel.azimuth = outside(plus) <= outside(minus) ? plus : minus;
  return rel;
}

}  // namespace mrloc
