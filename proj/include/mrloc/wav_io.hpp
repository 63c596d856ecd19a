#pragma once

#include <string>
#include <vector>

namespace mrloc::wav {

struct Audio {
  double sample_rate = 0.0;
  // channels[c][n]
  std::vector<std::vector<double>> channels;
};

// Reads RIFF/WAVE files holding 8/16/24/32-bit PCM or 32/64-bit IEEE float
// (plain or WAVE_FORMAT_EXTENSIBLE). Integer PCM is scaled to [-1, 1).
Audio read(const std::string& path);

// Writes 32-bit IEEE float samples; all channels must have equal length.
void write_float(const std::string& path, const Audio& audio);

}  // namespace mrloc::wav
