#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrloc/manifold_graph.hpp"
#include "mrloc/mrl_localizer.hpp"

namespace mrloc {

// Row i of `coordinates` is [lambda_1 phi_1(i), ..., lambda_d phi_d(i)]; the
// trivial constant component is dropped.
struct DiffusionEmbedding {
  Eigen::MatrixXd coordinates;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd basis;
  Eigen::VectorXd stationary;

  int dimension() const { return static_cast<int>(eigenvalues.size()); }
};

DiffusionEmbedding fit_embedding(const AdjacencyGraph& graph, int dimension);

enum class VanishingAffinity { Error, ZeroVector };

inline constexpr double kMinEigenvalue = 1e-12;

struct DdsModel {
  DiffusionEmbedding embedding;
  std::shared_ptr<const std::vector<RtfVector>> training;
  std::vector<double> labels;  // rows [0, l) of the embedding
  double epsilon_b = 0.0;
  double epsilon_gamma = 0.0;
  int num_neighbors = 10;  // affinity truncation used for out-of-sample points
  // Squared distance from each training sample to its num_neighbors-th
  // nearest training sample; empty disables the reverse-neighbour rule.
  Eigen::VectorXd neighbor_radius;
  VanishingAffinity on_vanishing = VanishingAffinity::Error;
};

// Affinity b_r = exp(-|h_r - h|^2 / (2 eps_b)) over the training samples that
// are among the query's num_neighbors nearest or that would count the query
// among their own num_neighbors nearest (the OR rule of the training graph).
// A training sample coinciding with the query is skipped, as W has no
// self-loops. b is normalized to sum 1 and projected: coordinate j =
// b . phi_j = lambda_j phi*_j.
Eigen::VectorXd nystrom_extend(const DdsModel& model, const RtfVector& h);
Eigen::VectorXd nystrom_extend(const DdsModel& model, const Eigen::VectorXd& dist_sq_to_training);

double diffusion_distance(const Eigen::VectorXd& e1, const Eigen::VectorXd& e2);

struct DdsEstimate {
  double position = 0.0;
  Eigen::VectorXd weights;      // one per labelled sample, sums to 1
  Eigen::VectorXd coordinates;  // embedded query
};

DdsEstimate dds_estimate(const DdsModel& model, const Eigen::VectorXd& coordinates);
double dds_predict(const DdsModel& model, const RtfVector& h);

struct DdsOptions {
  int dimension = 1;
  VanishingAffinity on_vanishing = VanishingAffinity::Error;
};

struct DdsFit {
  DdsModel model;
  KernelConfig kernel;
  bool graph_connected = true;
};

// Scales left at 0 are resolved: eps_w by median_neighbor_scale, eps_b = eps_w
// and eps_gamma as the median, over unlabelled (probe) samples, of the
// diffusion distance to the closest labelled sample.
DdsFit fit_dds(const TrainingSet& train, const Eigen::MatrixXd& dist_sq, const KernelConfig& kernel,
               const DdsOptions& options);
DdsFit fit_dds(const TrainingSet& train, const KernelConfig& kernel, const DdsOptions& options);

// index, azimuth (blank when unlabelled), coordinate_1..coordinate_d.
void write_embedding_csv(const std::string& path, const DdsModel& model,
                         const std::vector<double>& truth_for_unlabelled = {});

}  // namespace mrloc
