#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mrloc/room_acoustics.hpp"

namespace mrloc {

enum class SourceKind { WhiteNoise, ExternalAudio };

struct SourceSignal {
  std::vector<double> samples;
  double sample_rate = 0.0;
  SourceKind kind = SourceKind::WhiteNoise;
};

struct MicrophonePair {
  std::vector<double> x;  // microphone 1
  std::vector<double> y;  // microphone 2
  double sample_rate = 0.0;
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

// Full linear convolution by direct summation (reference path).
std::vector<double> convolve_direct(std::span<const double> a, std::span<const double> b);

// Full linear convolution by FFT overlap-add over blocks of `signal`.
std::vector<double> convolve_overlap_add(std::span<const double> signal, std::span<const double> filter);

// x = a1 * s + u1, y = a2 * s + u2, trimmed to the source length. Each noise
// sequence is white Gaussian rescaled so that its energy sits exactly
// `snr_db` below the energy of the reverberant signal on its own channel.
// snr_db = +inf disables noise.
MicrophonePair synthesize_pair(const SourceSignal& s, const ImpulseResponse& a1, const ImpulseResponse& a2,
                               double snr_db, std::uint64_t noise_seed);

// Unit-variance white Gaussian source.
SourceSignal make_white_source(double duration_s, double sample_rate, std::uint64_t seed);

// Single-channel WAV normalized to unit RMS.
SourceSignal load_audio_source(const std::string& path);

// Stereo float WAV (x left, y right).
void write_pair_wav(const std::string& path, const MicrophonePair& pair);

double energy(std::span<const double> v);

}  // namespace mrloc
