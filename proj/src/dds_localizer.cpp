#include "mrloc/dds_localizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mrloc/error.hpp"

namespace mrloc {

DiffusionEmbedding fit_embedding(const AdjacencyGraph& graph, int dimension) {
  const int n = graph.size();
  if (dimension < 1 || dimension >= n)
    throw GraphError("embedding dimension must lie in [1, N-1] (N = " + std::to_string(n) + ")");
  const auto spectrum = transition_spectrum(graph);
  DiffusionEmbedding e;
  e.eigenvalues = spectrum.eigenvalues.segment(1, dimension);
  e.basis = spectrum.right_vectors.middleCols(1, dimension);
  e.coordinates = e.basis * e.eigenvalues.asDiagonal();
  e.stationary = spectrum.stationary;
  return e;
}

Eigen::VectorXd nystrom_extend(const DdsModel& model, const Eigen::VectorXd& dist_sq) {
  const auto& e = model.embedding;
  const auto n = e.basis.rows();
  if (dist_sq.size() != n) throw ExtensionError("distance vector does not match the training set", -1);
  for (int j = 0; j < e.dimension(); ++j)
    if (std::abs(e.eigenvalues[j]) < kMinEigenvalue)
      throw ExtensionError("diffusion component " + std::to_string(j + 1) + " has a vanishing eigenvalue", j + 1);

  std::vector<Eigen::Index> idx;
  idx.reserve(n);
  for (Eigen::Index r = 0; r < n; ++r)
    if (dist_sq[r] > 0.0) idx.push_back(r);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(model.num_neighbors, 1)), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return dist_sq[a] < dist_sq[b] || (dist_sq[a] == dist_sq[b] && a < b);
  });

  std::vector<char> keep(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < k; ++i) keep[idx[i]] = 1;
  if (model.neighbor_radius.size() == n)
    for (Eigen::Index r = 0; r < n; ++r)
      if (dist_sq[r] > 0.0 && dist_sq[r] <= model.neighbor_radius[r]) keep[r] = 1;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!keep[r]) continue;
    b[r] = gaussian_from_sq(dist_sq[r], model.epsilon_b);
    total += b[r];
  }
  if (!(total >= std::numeric_limits<double>::min())) {
    if (model.on_vanishing == VanishingAffinity::ZeroVector) return Eigen::VectorXd::Zero(e.dimension());
    throw ExtensionError("query has vanishing affinity to every training sample", -1);
  }
  b /= total;
  return e.basis.transpose() * b;
}

Eigen::VectorXd nystrom_extend(const DdsModel& model, const RtfVector& h) {
  if (!model.training) throw ExtensionError("model has no training samples attached", -1);
  const auto& train = *model.training;
  Eigen::VectorXd d(train.size());
  for (std::size_t r = 0; r < train.size(); ++r) d[r] = rtf_distance_sq(train[r], h);
  return nystrom_extend(model, d);
}

double diffusion_distance(const Eigen::VectorXd& e1, const Eigen::VectorXd& e2) {
  if (e1.size() != e2.size()) throw ExtensionError("embedded points differ in dimension", -1);
  return (e1 - e2).norm();
}

DdsEstimate dds_estimate(const DdsModel& model, const Eigen::VectorXd& coordinates) {
  const int l = static_cast<int>(model.labels.size());
  if (l < 1) throw ExtensionError("model has no labelled samples", -1);
  Eigen::VectorXd dist(l);
  for (int i = 0; i < l; ++i)
    dist[i] = diffusion_distance(coordinates, model.embedding.coordinates.row(i).transpose());

  // Softmax of -D / eps_gamma, shifted by the smallest distance for stability.
  const double dmin = dist.minCoeff();
  DdsEstimate est;
  est.coordinates = coordinates;
  est.weights.resize(l);
  for (int i = 0; i < l; ++i) est.weights[i] = std::exp(-(dist[i] - dmin) / model.epsilon_gamma);
  est.weights /= est.weights.sum();
  for (int i = 0; i < l; ++i) est.position += est.weights[i] * model.labels[i];
  return est;
}

double dds_predict(const DdsModel& model, const RtfVector& h) {
  return dds_estimate(model, nystrom_extend(model, h)).position;
}

DdsFit fit_dds(const TrainingSet& train, const Eigen::MatrixXd& dist_sq, const KernelConfig& kernel,
               const DdsOptions& options) {
  train.validate();
  const int n = train.size();
  if (n < 2) throw GraphError("need at least two training samples");
  DdsFit out;
  out.kernel = kernel;
  out.kernel.num_neighbors = std::clamp(kernel.num_neighbors, 1, n - 1);
  if (!(out.kernel.epsilon_w > 0.0)) out.kernel.epsilon_w = median_neighbor_scale(dist_sq, out.kernel.num_neighbors);
  if (!(out.kernel.epsilon_b > 0.0)) out.kernel.epsilon_b = out.kernel.epsilon_w;

  const auto graph = build_adjacency(dist_sq, out.kernel.epsilon_w, out.kernel.num_neighbors);
  out.graph_connected = graph.connected();

  DdsModel& m = out.model;
  m.embedding = fit_embedding(graph, options.dimension);
  m.training = std::make_shared<const std::vector<RtfVector>>(train.samples);
  m.labels = train.labels;
  m.epsilon_b = out.kernel.epsilon_b;
  m.num_neighbors = out.kernel.num_neighbors;
  m.neighbor_radius.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    row.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) row.push_back(dist_sq(i, j));
    std::nth_element(row.begin(), row.begin() + (m.num_neighbors - 1), row.end());
    m.neighbor_radius[i] = row[m.num_neighbors - 1];
  }
  m.on_vanishing = options.on_vanishing;

  if (!(out.kernel.epsilon_gamma > 0.0)) {
    const int l = train.labelled();
    std::vector<double> d;
    const int probe_begin = train.unlabelled() > 0 ? l : 0;
    // Each probe contributes its distance to the closest labelled sample.
    for (int p = probe_begin; p < n; ++p) {
      double nearest = std::numeric_limits<double>::infinity();
      for (int i = 0; i < l; ++i)
        if (p != i)
          nearest = std::min(nearest, diffusion_distance(m.embedding.coordinates.row(p).transpose(),
                                                         m.embedding.coordinates.row(i).transpose()));
      if (std::isfinite(nearest)) d.push_back(nearest);
    }
    double median = 0.0;
    if (!d.empty()) {
      auto mid = d.begin() + d.size() / 2;
      std::nth_element(d.begin(), mid, d.end());
      median = *mid;
    }
    if (!(median > 0.0)) throw GraphError("cannot derive eps_gamma: probe distances vanish");
    out.kernel.epsilon_gamma = median;
  }
  m.epsilon_gamma = out.kernel.epsilon_gamma;
  return out;
}

DdsFit fit_dds(const TrainingSet& train, const KernelConfig& kernel, const DdsOptions& options) {
  return fit_dds(train, pairwise_sq_distances(train.samples), kernel, options);
}

void write_embedding_csv(const std::string& path, const DdsModel& model,
                         const std::vector<double>& truth_for_unlabelled) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(10);
  const auto& c = model.embedding.coordinates;
  out << "index,azimuth,true_azimuth";
  for (int j = 0; j < c.cols(); ++j) out << ",coordinate_" << (j + 1);
  out << '\n';
  const auto l = model.labels.size();
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    out << i << ',';
    const auto ui = static_cast<std::size_t>(i);
    if (ui < l) out << model.labels[ui] << ',' << model.labels[ui];
    else if (ui - l < truth_for_unlabelled.size()) out << ',' << truth_for_unlabelled[ui - l];
    else out << ',';
    for (int j = 0; j < c.cols(); ++j) out << ',' << c(i, j);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace mrloc
