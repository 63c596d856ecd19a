#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrloc/manifold_graph.hpp"

namespace mrloc {

// Samples [0, l) carry labels (azimuth, degrees); samples [l, N) are
// unlabelled.
struct TrainingSet {
  std::vector<RtfVector> samples;
  std::vector<double> labels;

  int size() const { return static_cast<int>(samples.size()); }
  int labelled() const { return static_cast<int>(labels.size()); }
  int unlabelled() const { return size() - labelled(); }
  void validate() const;
};

struct RegularizationParams {
  double gamma_k = 1e-4;
  double gamma_m = 1e-2;

  void validate() const;
};

struct FitDiagnostics {
  double residual_norm = 0.0;
  double rhs_norm = 0.0;
  double condition_estimate = 0.0;
};

inline constexpr double kMaxCondition = 1e12;

struct MrlModel {
  Eigen::VectorXd weights;
  std::shared_ptr<const std::vector<RtfVector>> training;
  double epsilon_k = 0.0;
  RegularizationParams params;
  bool centered = false;
  double label_offset = 0.0;
  FitDiagnostics diagnostics;

  // Provenance for serialization: archive hash and row indices of `training`.
  std::string dataset_hash;
  std::vector<std::uint32_t> source_rows;

  double predict(const RtfVector& h) const;
};

// Label mask form of the linear system [J K + l gk I + l gM L K] a = q. Used
// directly by leave-one-out search; `mask[i]` marks a labelled row and
// `targets[i]` its (possibly centred) label.
Eigen::VectorXd solve_weights(const Eigen::MatrixXd& K, const SparseMatrix& L, const std::vector<char>& mask,
                              const Eigen::VectorXd& targets, const RegularizationParams& params,
                              FitDiagnostics* diagnostics = nullptr);

MrlModel fit(const TrainingSet& train, const GramMatrix& K, const GraphLaplacian& L,
             const RegularizationParams& params, bool center_labels = true);

double predict(const MrlModel& model, const RtfVector& h);

// (1/l)(q - JKa)^T(q - JKa) + gk a^T K a + gM a^T K L K a with raw labels.
double objective_value(const TrainingSet& train, const GramMatrix& K, const GraphLaplacian& L,
                       const RegularizationParams& params, const Eigen::VectorXd& a);
double objective_value(const std::vector<double>& labels, const Eigen::MatrixXd& K, const SparseMatrix& L,
                       const RegularizationParams& params, const Eigen::VectorXd& a);

enum class ScalePolicy { Frozen, Rescale };

struct MrlOptions {
  RegularizationParams params;
  bool center_labels = true;
  bool grid_search = false;
  std::vector<double> gamma_grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  ScalePolicy scale_policy = ScalePolicy::Frozen;
};

struct MrlFit {
  MrlModel model;
  KernelConfig kernel;  // scales actually used (auto values resolved)
  bool graph_connected = true;
  double loo_rmse = 0.0;  // set when grid search ran
};

// Resolve scales (zero entries picked by median_neighbor_scale), build K, W,
// L over the training set and fit; optionally grid-search the gammas by
// leave-one-out over labelled samples.
MrlFit fit_from_samples(const TrainingSet& train, const KernelConfig& kernel, const MrlOptions& options);
// Same, reusing precomputed pairwise squared distances of train.samples.
MrlFit fit_from_distances(const TrainingSet& train, const Eigen::MatrixXd& dist_sq, const KernelConfig& kernel,
                          const MrlOptions& options);

// Appends `fresh` as unlabelled samples, rebuilds K, W, L from scratch and
// refits. Frozen policy keeps `kernel` scales; Rescale re-derives the
// automatic ones on the enlarged set. Gammas are kept as in `previous`.
struct Adapted {
  MrlFit fit;
  TrainingSet train;
};
Adapted adapt(const MrlFit& previous, const TrainingSet& train, const std::vector<RtfVector>& fresh,
              const KernelConfig& requested_kernel, const MrlOptions& options);

// Accumulates unlabelled samples and refits every `cadence` accepted samples.
class AdaptiveSession {
 public:
  AdaptiveSession(TrainingSet initial, KernelConfig kernel, MrlOptions options, int cadence = 30);

  double localize(const RtfVector& h) const;
  // Returns true when the sample triggered a refit.
  bool accept(const RtfVector& h);
  // Refit with whatever is pending, even below the cadence.
  void flush();

  const MrlFit& current() const { return fit_; }
  const TrainingSet& training_set() const { return train_; }
  int pending() const { return static_cast<int>(pending_.size()); }

 private:
  TrainingSet train_;
  KernelConfig kernel_;
  MrlOptions options_;
  int cadence_;
  MrlFit fit_;
  std::vector<RtfVector> pending_;
};

// Versioned little-endian binary: magic "MRLM", u32 version, dataset hash,
// row indices, scales, gammas, centring constant and weights.
void save_model(const std::string& path, const MrlModel& model);
// Reads everything except the training samples, which the caller re-attaches
// from the archive named by dataset_hash/source_rows.
MrlModel load_model(const std::string& path);

}  // namespace mrloc
