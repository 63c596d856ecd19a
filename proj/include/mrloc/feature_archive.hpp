#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mrloc/mrl_localizer.hpp"
#include "mrloc/rtf_features.hpp"

namespace mrloc {

enum class SampleRole : std::uint8_t { Labelled = 0, Unlabelled = 1, Test = 2 };

const char* role_name(SampleRole role);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct ArchiveRow {
  SampleRole role = SampleRole::Unlabelled;
  double azimuth = 0.0;           // ground truth, degrees
  double label = kMissing;        // set for labelled rows only
  double gcc_tdoa = kMissing;     // seconds, from the same microphone pair
  double gcc_peak_ratio = kMissing;
  std::vector<Complex> values;    // RTF on the archive band
};

// Self-describing binary feature archive. Layout (little-endian):
//   "MRLD", u32 version, u32-length JSON metadata, u32 fft_size,
//   u64 n_bins, i32 bins[n_bins], u64 n_rows, then per row
//   u8 role, f64 azimuth, f64 label, f64 gcc_tdoa, f64 gcc_peak_ratio,
//   f64 (re, im) x n_bins.
struct FeatureArchive {
  std::string metadata_json;
  BandPtr band;
  std::vector<ArchiveRow> rows;

  RtfVector rtf(std::size_t row) const;
  std::vector<std::size_t> rows_with(SampleRole role) const;
  // Labelled rows (stored order) followed by unlabelled rows.
  TrainingSet training_set(std::vector<std::uint32_t>* source_rows = nullptr) const;
};

std::string serialize_archive(const FeatureArchive& archive);
FeatureArchive deserialize_archive(const std::string& bytes, const std::string& origin = "archive");

void write_archive(const std::string& path, const FeatureArchive& archive);
FeatureArchive read_archive(const std::string& path);

// SHA-256 of the serialized bytes.
std::string archive_hash(const FeatureArchive& archive);

// One line per (row, bin): row,role,azimuth,label,bin,real,imag.
void write_archive_csv(const std::string& path, const FeatureArchive& archive);

}  // namespace mrloc
