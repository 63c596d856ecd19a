#pragma once

#include <map>
#include <string>

#include "mrloc/harness/experiment.hpp"

namespace mrloc::harness {

// Resolves the output directory: explicit value, else $MRLOC_OUTPUT_DIR, else
// the working directory. The directory is created when missing.
std::string output_directory(const std::string& requested);

// <stem>_predictions.csv (method,row,truth,prediction,error) and
// <stem>.json (resolved config, hashes, per-method RMSE, diagnostics,
// timings). Returns the JSON path.
std::string write_evaluation(const std::string& dir, const std::string& stem, const ScenarioConfig& cfg,
                             const EvaluationReport& report);

// sweep_cells.csv, sweep_<axis>.dat (gnuplot columns: value, then one mean
// RMSE per method) and sweep.json. Returns the JSON path.
std::string write_sweep(const std::string& dir, const ScenarioConfig& cfg, const SweepReport& report);

// sequential.csv (cycle,n_train,rmse), sequential_predictions.csv and
// sequential.json. Returns the JSON path.
std::string write_sequential(const std::string& dir, const ScenarioConfig& cfg, const SequentialReport& report);

struct StoredPredictions {
  std::map<std::string, std::vector<double>> truths, predictions;
};

StoredPredictions read_predictions_csv(const std::string& path);

// Method -> RMSE recomputed from stored rows (rows without a prediction are
// skipped, as in the original evaluation).
std::map<std::string, double> recompute_rmse(const StoredPredictions& stored);

std::string format_double(double v);

}  // namespace mrloc::harness
