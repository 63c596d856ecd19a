#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrloc/dds_localizer.hpp"
#include "mrloc/gcc_baseline.hpp"
#include "mrloc/manifold_graph.hpp"
#include "mrloc/mrl_localizer.hpp"
#include "mrloc/room_acoustics.hpp"
#include "mrloc/rtf_features.hpp"

namespace mrloc::harness {

struct SequentialSettings {
  double azimuth_low = 0.0;
  double azimuth_high = 180.0;
  int num_labelled = 19;
  int initial_unlabelled = 0;
  int cycles = 5;
  int batch = 30;
  int refit_every = 30;
  ScalePolicy scale_policy = ScalePolicy::Frozen;
};

struct ScenarioConfig {
  // room
  std::array<double, 3> room_dimensions{6.0, 6.2, 3.0};
  double speed_of_sound = 343.0;
  double sample_rate = 16000.0;
  double t60 = 0.3;
  int max_image_order = -1;
  long rir_length = -1;

  Constellation constellation;

  // scenario
  int num_train = 400;
  int num_labelled = 6;
  int num_test = 30;
  double source_duration = 1.0;
  double train_snr_db = 20.0;
  double test_snr_db = 20.0;
  std::uint64_t seed = 1;

  WelchParams welch;
  double band_high_hz = 4000.0;
  int band_first_bin = 1;

  KernelConfig kernel;
  MrlOptions mrl{RegularizationParams{}, true, true};  // grid search on
  DdsOptions dds;
  GccWeighting gcc_weighting = GccWeighting::None;

  SequentialSettings sequential;

  std::vector<std::string> methods{"mrl", "dds", "gcc"};
  int rotations = 5;
  int parallelism = 1;

  void validate() const;
  RoomSpec room() const;
};

// Sets one "section.key" entry from its textual value; throws ConfigError for
// unknown keys or unparsable values.
void set_value(ScenarioConfig& cfg, const std::string& key, const std::string& value);

// Every key in canonical order with its textual value (round-trips through
// set_value).
std::vector<std::pair<std::string, std::string>> to_pairs(const ScenarioConfig& cfg);

// INI-style "[section]\nkey = value" file.
ScenarioConfig load_config(const std::string& path);
void apply_override(ScenarioConfig& cfg, const std::string& assignment);  // "section.key=value"
std::string to_ini(const ScenarioConfig& cfg);
std::string config_hash(const ScenarioConfig& cfg);

// N = 400, T = 120, 3 s sources, 50 rotations; sequential 9 cycles x 90.
void apply_paper_scale(ScenarioConfig& cfg);

}  // namespace mrloc::harness
