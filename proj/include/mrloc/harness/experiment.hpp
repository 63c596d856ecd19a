#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mrloc/feature_archive.hpp"
#include "mrloc/harness/config.hpp"

namespace mrloc::harness {

// Every simulated sample is driven by white Gaussian noise in place of speech;
// archives and reports carry this string.
inline constexpr const char* kSourceDescription = "white Gaussian noise (speech surrogate)";

double evaluate_rmse(const std::vector<double>& predictions, const std::vector<double>& truths);

// Uniformly drawn rotation (degrees in [0, 360)) for rotation slot `index`.
double draw_rotation(std::uint64_t seed, int index);

// Simulates every training and test sample for one constellation rotation.
// Labelled azimuths sit on a uniform grid over the range; unlabelled and
// test azimuths are uniform random. Seeds depend on (seed, rotation index,
// role, sample index) only, so sweeps over T60/SNR reuse the same sources.
FeatureArchive generate_dataset(const ScenarioConfig& cfg, double rotation_deg, int rotation_index = 0);

struct MethodResult {
  std::string method;
  double rmse = 0.0;
  std::vector<std::size_t> rows;
  std::vector<double> truths;
  std::vector<double> predictions;
  int failures = 0;        // samples where the method raised (prediction still recorded when available)
  std::string error;       // set when the whole method failed
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
  std::map<std::string, double> diagnostics;
};

struct EvaluationReport {
  std::string config_hash;
  std::string dataset_hash;
  double rotation_deg = 0.0;
  std::vector<MethodResult> methods;
};

EvaluationReport evaluate_methods(const ScenarioConfig& cfg, const FeatureArchive& archive);

enum class SweepAxis { T60, Snr };

struct SweepCell {
  double axis_value = 0.0;
  int rotation_index = 0;
  double rotation_deg = 0.0;
  std::string dataset_hash;
  std::map<std::string, double> rmse;  // method -> RMSE (absent when failed)
  std::map<std::string, std::string> errors;
  double seconds = 0.0;
};

struct SweepReport {
  SweepAxis axis = SweepAxis::T60;
  std::vector<double> values;
  std::vector<SweepCell> cells;
  // value index -> method -> rotation-averaged RMSE over successful cells
  std::vector<std::map<std::string, double>> mean_rmse;
  std::vector<std::map<std::string, int>> failed_cells;
};

// Applies the axis value to a copy of base (t60 in milliseconds, SNR in dB for
// the test set; the training SNR is left as configured).
ScenarioConfig config_for(const ScenarioConfig& base, SweepAxis axis, double value);

using ProgressFn = std::function<void(const std::string&)>;

SweepReport run_sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<double>& values, int rotations,
                      const ProgressFn& progress = {});

struct SequentialReport {
  std::vector<double> rmse;         // one per completed cycle
  std::vector<int> training_size;   // N used for the cycle's predictions
  std::vector<std::vector<double>> truths, predictions;
  std::string error;                // set when adaptation aborted early
  std::string dataset_hash;
};

SequentialReport run_sequential(const ScenarioConfig& cfg, const ProgressFn& progress = {});

}  // namespace mrloc::harness
