#include "mrloc/manifold_graph.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>

#include "mrloc/error.hpp"

namespace mrloc {

void KernelConfig::validate(int num_samples) const {
  for (double eps : {epsilon_k, epsilon_w, epsilon_b, epsilon_gamma})
    if (!(eps > 0.0) || !std::isfinite(eps)) throw GraphError("kernel scales must be finite and strictly positive");
  if (num_neighbors < 1 || num_neighbors >= num_samples)
    throw GraphError("num_neighbors must lie in [1, N-1] (N = " + std::to_string(num_samples) + ")");
}

double gaussian_kernel(const RtfVector& h1, const RtfVector& h2, double epsilon) {
  if (!(epsilon > 0.0)) throw GraphError("kernel scale must be positive");
  return gaussian_from_sq(rtf_distance_sq(h1, h2), epsilon);
}

Eigen::MatrixXd pairwise_sq_distances(const std::vector<RtfVector>& samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = rtf_distance_sq(samples[i], samples[j]);
  return d;
}

Eigen::MatrixXd cross_sq_distances(const std::vector<RtfVector>& queries, const std::vector<RtfVector>& reference) {
  Eigen::MatrixXd d(queries.size(), reference.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (std::size_t j = 0; j < reference.size(); ++j) d(i, j) = rtf_distance_sq(queries[i], reference[j]);
  return d;
}

std::vector<int> nearest_neighbors(const Eigen::MatrixXd& dist_sq, int i, int k) {
  const int n = static_cast<int>(dist_sq.cols());
  std::vector<int> idx;
  idx.reserve(n - 1);
  for (int j = 0; j < n; ++j)
    if (j != i) idx.push_back(j);
  k = std::min<int>(k, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    const double da = dist_sq(i, a), db = dist_sq(i, b);
    return da < db || (da == db && a < b);
  });
  idx.resize(k);
  return idx;
}

double median_neighbor_scale(const Eigen::MatrixXd& dist_sq, int k) {
  const int n = static_cast<int>(dist_sq.rows());
  if (n < 2) throw GraphError("need at least two samples to pick a kernel scale");
  k = std::clamp(k, 1, n - 1);
  std::vector<double> kth(n);
  for (int i = 0; i < n; ++i) kth[i] = dist_sq(i, nearest_neighbors(dist_sq, i, k).back());
  auto mid = kth.begin() + n / 2;
  std::nth_element(kth.begin(), mid, kth.end());
  double median = *mid;
  if (n % 2 == 0) median = 0.5 * (median + *std::max_element(kth.begin(), mid));
  if (!(median > 0.0)) throw GraphError("samples coincide; cannot derive a kernel scale");
  return median;
}

GramMatrix build_gram(const Eigen::MatrixXd& dist_sq, double epsilon_k) {
  if (!(epsilon_k > 0.0)) throw GraphError("kernel scale must be positive");
  if (dist_sq.rows() < 2 || dist_sq.rows() != dist_sq.cols()) throw GraphError("Gram matrix needs >= 2 samples");
  GramMatrix g;
  g.epsilon = epsilon_k;
  g.entries = dist_sq.unaryExpr([epsilon_k](double d) { return gaussian_from_sq(d, epsilon_k); });
  g.entries.diagonal().setOnes();
  return g;
}

GramMatrix build_gram(const std::vector<RtfVector>& samples, double epsilon_k) {
  if (samples.size() < 2) throw GraphError("Gram matrix needs >= 2 samples");
  return build_gram(pairwise_sq_distances(samples), epsilon_k);
}

namespace {

int count_components(const SparseMatrix& w) {
  const int n = static_cast<int>(w.rows());
  std::vector<int> label(n, -1);
  int components = 0;
  for (int start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    std::queue<int> q;
    q.push(start);
    label[start] = components;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (SparseMatrix::InnerIterator it(w, v); it; ++it) {
        if (it.value() > 0.0 && label[it.col()] < 0) {
          label[it.col()] = components;
          q.push(static_cast<int>(it.col()));
        }
      }
    }
    ++components;
  }
  return components;
}

AdjacencyGraph finish_graph(SparseMatrix w) {
  AdjacencyGraph g;
  w.makeCompressed();
  g.degree = Eigen::VectorXd::Zero(w.rows());
  for (int i = 0; i < w.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(w, i); it; ++it) g.degree[i] += it.value();
  g.num_components = count_components(w);
  g.weights = std::move(w);
  return g;
}

}  // namespace

AdjacencyGraph build_adjacency(const Eigen::MatrixXd& dist_sq, double epsilon_w, int num_neighbors) {
  const int n = static_cast<int>(dist_sq.rows());
  if (!(epsilon_w > 0.0)) throw GraphError("adjacency scale must be positive");
  if (num_neighbors < 1 || num_neighbors >= n)
    throw GraphError("num_neighbors must lie in [1, N-1] (N = " + std::to_string(n) + ")");

  std::vector<std::vector<char>> edge(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j : nearest_neighbors(dist_sq, i, num_neighbors)) edge[i][j] = edge[j][i] = 1;

  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (edge[i][j]) trip.emplace_back(i, j, gaussian_from_sq(dist_sq(i, j), epsilon_w));
  SparseMatrix w(n, n);
  w.setFromTriplets(trip.begin(), trip.end());
  return finish_graph(std::move(w));
}

AdjacencyGraph build_adjacency(const std::vector<RtfVector>& samples, double epsilon_w, int num_neighbors) {
  return build_adjacency(pairwise_sq_distances(samples), epsilon_w, num_neighbors);
}

AdjacencyGraph adjacency_from_weights(const Eigen::MatrixXd& weights) {
  if (weights.rows() != weights.cols()) throw GraphError("weight matrix must be square");
  if (!weights.isApprox(weights.transpose(), 0.0) || (weights.array() < 0.0).any())
    throw GraphError("weight matrix must be symmetric and non-negative");
  SparseMatrix w = weights.sparseView();
  return finish_graph(std::move(w));
}

GraphLaplacian build_laplacian(const AdjacencyGraph& graph) {
  const auto n = graph.weights.rows();
  SparseMatrix d(n, n);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, graph.degree[i]);
  d.setFromTriplets(trip.begin(), trip.end());
  GraphLaplacian l;
  l.matrix = d - graph.weights;
  l.matrix.makeCompressed();
  return l;
}

TransitionMatrix build_transition(const AdjacencyGraph& graph) {
  for (Eigen::Index i = 0; i < graph.degree.size(); ++i)
    if (!(graph.degree[i] > 0.0)) throw GraphError("node " + std::to_string(i) + " has zero degree");
  TransitionMatrix t;
  t.matrix = graph.degree.cwiseInverse().asDiagonal() * graph.weights;
  t.matrix.makeCompressed();
  t.stationary = graph.degree / graph.degree.sum();
  return t;
}

TransitionSpectrum transition_spectrum(const AdjacencyGraph& graph) {
  if (!graph.connected())
    throw GraphError("graph has " + std::to_string(graph.num_components) + " connected components; need 1");
  for (Eigen::Index i = 0; i < graph.degree.size(); ++i)
    if (!(graph.degree[i] > 0.0)) throw GraphError("node " + std::to_string(i) + " has zero degree");

  const Eigen::VectorXd inv_sqrt = graph.degree.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd a = inv_sqrt.asDiagonal() * Eigen::MatrixXd(graph.weights) * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
  if (eig.info() != Eigen::Success) throw GraphError("eigendecomposition of the transition matrix failed");

  const auto n = a.rows();
  const double vol = graph.degree.sum();
  TransitionSpectrum s;
  s.stationary = graph.degree / vol;
  s.eigenvalues.resize(n);
  s.right_vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = n - 1 - j;
    s.eigenvalues[j] = eig.eigenvalues()[src];
    Eigen::VectorXd phi = std::sqrt(vol) * inv_sqrt.cwiseProduct(eig.eigenvectors().col(src));
    Eigen::Index arg;
    phi.cwiseAbs().maxCoeff(&arg);
    if (phi[arg] < 0) phi = -phi;
    s.right_vectors.col(j) = phi;
  }
  return s;
}

double mercer_reconstruction_check(const GramMatrix& K, int rank) {
  const auto n = K.entries.rows();
  if (rank < 0 || rank > n) throw GraphError("rank must lie in [0, N]");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K.entries);
  Eigen::MatrixXd approx = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < rank; ++i) {
    const Eigen::Index src = n - 1 - i;
    const auto psi = eig.eigenvectors().col(src);
    approx.noalias() += eig.eigenvalues()[src] * psi * psi.transpose();
  }
  return (K.entries - approx).norm() / K.entries.norm();
}

double discrete_rkhs_norm_sq(const Eigen::MatrixXd& K, const Eigen::VectorXd& f, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  const double top = eig.eigenvalues().maxCoeff();
  const Eigen::VectorXd coef = eig.eigenvectors().transpose() * f;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < coef.size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (lambda <= floor * top) {
      if (std::abs(coef[i]) > 1e-12 * f.norm()) return std::numeric_limits<double>::infinity();
      continue;
    }
    acc += coef[i] * coef[i] / lambda;
  }
  return acc;
}

void write_triplets(const std::string& path, const SparseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  for (int i = 0; i < m.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

void write_triplets(const std::string& path, const Eigen::MatrixXd& m) {
  SparseMatrix s = m.sparseView();
  write_triplets(path, s);
}

}  // namespace mrloc
