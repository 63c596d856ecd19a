#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mrloc/rtf_features.hpp"

namespace mrloc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Kernel scales are in squared-distance units. A scale of 0 means "pick it
// from the data" (see median_neighbor_scale); validate() rejects anything
// else that is not strictly positive.
struct KernelConfig {
  double epsilon_k = 0.0;
  double epsilon_w = 0.0;
  double epsilon_b = 0.0;
  double epsilon_gamma = 0.0;
  int num_neighbors = 10;

  void validate(int num_samples) const;
  bool resolved() const { return epsilon_k > 0 && epsilon_w > 0 && epsilon_b > 0 && epsilon_gamma > 0; }
};

double gaussian_kernel(const RtfVector& h1, const RtfVector& h2, double epsilon);
inline double gaussian_from_sq(double dist_sq, double epsilon) { return std::exp(-dist_sq / (2.0 * epsilon)); }

// Dense N x N matrix of squared RTF distances (exact, computed pairwise).
Eigen::MatrixXd pairwise_sq_distances(const std::vector<RtfVector>& samples);
// Rows: queries, columns: reference samples.
Eigen::MatrixXd cross_sq_distances(const std::vector<RtfVector>& queries, const std::vector<RtfVector>& reference);

// Median over samples of the squared distance to the k-th nearest other sample.
double median_neighbor_scale(const Eigen::MatrixXd& dist_sq, int k);

struct GramMatrix {
  Eigen::MatrixXd entries;
  double epsilon = 0.0;
};

GramMatrix build_gram(const std::vector<RtfVector>& samples, double epsilon_k);
GramMatrix build_gram(const Eigen::MatrixXd& dist_sq, double epsilon_k);

struct AdjacencyGraph {
  SparseMatrix weights;
  Eigen::VectorXd degree;
  int num_components = 0;

  int size() const { return static_cast<int>(degree.size()); }
  bool connected() const { return num_components == 1; }
};

// Indices of the k nearest other samples of row i (ties broken by index).
std::vector<int> nearest_neighbors(const Eigen::MatrixXd& dist_sq, int i, int k);

// Gaussian weights on the symmetrized k-NN edge set, zero diagonal. A
// disconnected result is returned, not thrown; callers check connected().
AdjacencyGraph build_adjacency(const std::vector<RtfVector>& samples, double epsilon_w, int num_neighbors);
AdjacencyGraph build_adjacency(const Eigen::MatrixXd& dist_sq, double epsilon_w, int num_neighbors);
// Arbitrary symmetric non-negative weights (used by tests and tools).
AdjacencyGraph adjacency_from_weights(const Eigen::MatrixXd& weights);

struct GraphLaplacian {
  SparseMatrix matrix;
};

GraphLaplacian build_laplacian(const AdjacencyGraph& graph);

struct TransitionMatrix {
  SparseMatrix matrix;
  Eigen::VectorXd stationary;
};

TransitionMatrix build_transition(const AdjacencyGraph& graph);

// Right eigenpairs of P = D^-1 W obtained from the symmetric conjugate
// D^-1/2 W D^-1/2. Eigenvalues descend; vectors are scaled so that
// sum_r pi_r phi(r)^2 = 1 and sign-fixed (largest-magnitude entry positive).
// Column 0 is the constant vector with eigenvalue 1.
struct TransitionSpectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd right_vectors;
  Eigen::VectorXd stationary;
};

TransitionSpectrum transition_spectrum(const AdjacencyGraph& graph);

// ||K - sum_{i<rank} lambda_i psi_i psi_i^T||_F / ||K||_F, eigenvalues sorted
// descending.
double mercer_reconstruction_check(const GramMatrix& K, int rank);

// f^T K^-1 f via the eigen-expansion of K, i.e. sum_i (psi_i . f)^2 / lambda_i.
// Eigenvalues below `floor` * lambda_max are treated as zero; components of f
// along them are reported as infinite norm.
double discrete_rkhs_norm_sq(const Eigen::MatrixXd& K, const Eigen::VectorXd& f, double floor = 1e-13);

void write_triplets(const std::string& path, const SparseMatrix& m);
void write_triplets(const std::string& path, const Eigen::MatrixXd& m);

}  // namespace mrloc
