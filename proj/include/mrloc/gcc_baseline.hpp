#pragma once

#include <vector>

#include "mrloc/room_acoustics.hpp"
#include "mrloc/signal_synthesis.hpp"

namespace mrloc {

enum class GccWeighting { None, Phat };

inline constexpr double kMinPeakToMedian = 1.5;

struct CorrelationFunction {
  std::vector<double> values;  // lags -max_lag..max_lag
  int max_lag = 0;
  double sample_rate = 0.0;

  double at(int lag) const { return values[static_cast<std::size_t>(lag + max_lag)]; }
};

CorrelationFunction gcc_correlation(const MicrophonePair& pair, int max_lag, GccWeighting weighting);

struct GccPeak {
  double tdoa = 0.0;        // seconds, positive when mic2 receives later
  int lag = 0;              // integer argmax
  double peak_to_median = 0.0;
};

// Peak search with parabolic refinement; does not apply the flatness check.
GccPeak gcc_peak(const MicrophonePair& pair, int max_lag, GccWeighting weighting);

// Throws NoPeakError when the peak is not distinct (peak / median |r| < 1.5).
double gcc_tdoa(const MicrophonePair& pair, int max_lag, GccWeighting weighting = GccWeighting::None);

// Smallest lag range covering every physical delay of the array.
int admissible_max_lag(double mic_spacing, double speed_of_sound, double sample_rate);

struct AzimuthInversion {
  double azimuth = 0.0;  // degrees in [0, 180], measured from the mic1->mic2 axis
  bool clamped = false;  // tdoa fell outside the admissible interval
};

// Exact range-difference inversion for a source on the circle of radius
// `source_radius` about mic1 (same height as both microphones).
AzimuthInversion tdoa_to_azimuth(double tdoa, double mic_spacing, double source_radius,
                                 double speed_of_sound = 343.0);

// Constellation-aware variant: resolves the mirror ambiguity about the array
// axis by choosing the candidate inside [azimuth_low, azimuth_high] (nearest
// to the range when neither is inside). Returns unrotated azimuth degrees.
AzimuthInversion tdoa_to_constellation_azimuth(const Constellation& cons, double tdoa,
                                               double speed_of_sound = 343.0);

}  // namespace mrloc
