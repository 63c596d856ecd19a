#include "mrloc/mrl_localizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "binary_stream.hpp"
#include "mrloc/error.hpp"

namespace mrloc {

void TrainingSet::validate() const {
  if (labels.empty()) throw FitError("training set needs at least one labelled sample", 0.0);
  if (labels.size() > samples.size()) throw FitError("more labels than samples", 0.0);
  for (double p : labels)
    if (!std::isfinite(p)) throw FitError("non-finite label", 0.0);
  for (std::size_t i = 1; i < samples.size(); ++i) require_same_band(samples[0], samples[i]);
}

void RegularizationParams::validate() const {
  if (!(gamma_k > 0.0) || !std::isfinite(gamma_k)) throw FitError("gamma_k must be strictly positive", 0.0);
  if (!(gamma_m >= 0.0) || !std::isfinite(gamma_m)) throw FitError("gamma_M must be non-negative", 0.0);
}

Eigen::VectorXd solve_weights(const Eigen::MatrixXd& K, const SparseMatrix& L, const std::vector<char>& mask,
                              const Eigen::VectorXd& targets, const RegularizationParams& params,
                              FitDiagnostics* diagnostics) {
  params.validate();
  const auto n = K.rows();
  if (K.cols() != n || L.rows() != n || L.cols() != n || static_cast<Eigen::Index>(mask.size()) != n ||
      targets.size() != n)
    throw FitError("system dimensions disagree", 0.0);
  const double l = static_cast<double>(std::count(mask.begin(), mask.end(), 1));
  if (l < 1) throw FitError("no labelled sample in the system", 0.0);

  Eigen::MatrixXd m = (l * params.gamma_m) * (L * K);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[i]) m.row(i) += K.row(i);
    m(i, i) += l * params.gamma_k;
  }
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (mask[i]) q[i] = targets[i];

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition))
    throw FitError("system matrix is ill-conditioned (condition estimate " + std::to_string(cond) + ")", cond);

  Eigen::VectorXd a = lu.solve(q);
  const double qn = q.norm();
  double res = (m * a - q).norm();
  if (res > 1e-8 * qn) {
    a += lu.solve(q - m * a);
    res = (m * a - q).norm();
  }
  if (!a.allFinite() || res > 1e-8 * qn)
    throw FitError("linear solve residual " + std::to_string(res) + " exceeds tolerance", cond);
  if (diagnostics) *diagnostics = {res, qn, cond};
  return a;
}

MrlModel fit(const TrainingSet& train, const GramMatrix& K, const GraphLaplacian& L,
             const RegularizationParams& params, bool center_labels) {
  train.validate();
  const int n = train.size();
  if (K.entries.rows() != n) throw FitError("Gram matrix does not match the training set", 0.0);

  MrlModel model;
  model.centered = center_labels;
  if (center_labels)
    model.label_offset = std::accumulate(train.labels.begin(), train.labels.end(), 0.0) / train.labelled();

  std::vector<char> mask(n, 0);
  Eigen::VectorXd targets = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < train.labelled(); ++i) {
    mask[i] = 1;
    targets[i] = train.labels[i] - model.label_offset;
  }
  model.weights = solve_weights(K.entries, L.matrix, mask, targets, params, &model.diagnostics);
  model.training = std::make_shared<const std::vector<RtfVector>>(train.samples);
  model.epsilon_k = K.epsilon;
  model.params = params;
  return model;
}

double MrlModel::predict(const RtfVector& h) const {
  double acc = 0.0;
  if (weights.size() > 0) {
    if (!training || static_cast<Eigen::Index>(training->size()) != weights.size())
      throw FitError("model has no training samples attached", 0.0);
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      acc += weights[i] * gaussian_kernel((*training)[i], h, epsilon_k);
  }
  return acc + label_offset;
}

double predict(const MrlModel& model, const RtfVector& h) { return model.predict(h); }

double objective_value(const std::vector<double>& labels, const Eigen::MatrixXd& K, const SparseMatrix& L,
                       const RegularizationParams& params, const Eigen::VectorXd& a) {
  const Eigen::VectorXd f = K * a;
  const std::size_t l = labels.size();
  double fit_term = 0.0;
  for (std::size_t i = 0; i < l; ++i) fit_term += (labels[i] - f[i]) * (labels[i] - f[i]);
  fit_term /= static_cast<double>(l);
  return fit_term + params.gamma_k * a.dot(f) + params.gamma_m * f.dot(L * f);
}

double objective_value(const TrainingSet& train, const GramMatrix& K, const GraphLaplacian& L,
                       const RegularizationParams& params, const Eigen::VectorXd& a) {
  return objective_value(train.labels, K.entries, L.matrix, params, a);
}

namespace {

KernelConfig resolve_scales(const KernelConfig& requested, const Eigen::MatrixXd& dist_sq) {
  KernelConfig k = requested;
  const int n = static_cast<int>(dist_sq.rows());
  k.num_neighbors = std::clamp(k.num_neighbors, 1, n - 1);
  double auto_scale = 0.0;
  auto pick = [&] {
    if (auto_scale == 0.0) auto_scale = median_neighbor_scale(dist_sq, k.num_neighbors);
    return auto_scale;
  };
  if (!(k.epsilon_k > 0.0)) k.epsilon_k = pick();
  if (!(k.epsilon_w > 0.0)) k.epsilon_w = pick();
  if (!(k.epsilon_b > 0.0)) k.epsilon_b = k.epsilon_w;
  return k;
}

struct GridChoice {
  RegularizationParams params;
  double rmse;
};

GridChoice loo_grid_search(const TrainingSet& train, const Eigen::MatrixXd& K, const SparseMatrix& L,
                           const MrlOptions& options) {
  const int n = train.size(), l = train.labelled();
  GridChoice best{options.params, std::numeric_limits<double>::infinity()};
  if (l < 2) return best;
  for (double gk : options.gamma_grid) {
    for (double gm : options.gamma_grid) {
      const RegularizationParams params{gk, gm};
      double sq = 0.0;
      bool ok = true;
      for (int out = 0; out < l && ok; ++out) {
        std::vector<char> mask(n, 0);
        double offset = 0.0;
        if (options.center_labels) {
          for (int i = 0; i < l; ++i)
            if (i != out) offset += train.labels[i];
          offset /= (l - 1);
        }
        Eigen::VectorXd targets = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < l; ++i) {
          if (i == out) continue;
          mask[i] = 1;
          targets[i] = train.labels[i] - offset;
        }
        try {
          const Eigen::VectorXd a = solve_weights(K, L, mask, targets, params);
          const double err = K.row(out).dot(a) + offset - train.labels[out];
          sq += err * err;
        } catch (const FitError&) {
          ok = false;
        }
      }
      if (!ok) continue;
      const double rmse = std::sqrt(sq / l);
      if (rmse < best.rmse) best = {params, rmse};
    }
  }
  if (!std::isfinite(best.rmse)) throw FitError("every grid point of the gamma search failed", 0.0);
  return best;
}

}  // namespace

MrlFit fit_from_distances(const TrainingSet& train, const Eigen::MatrixXd& dist_sq, const KernelConfig& kernel,
                          const MrlOptions& options) {
  train.validate();
  if (train.size() < 2) throw FitError("need at least two training samples", 0.0);
  MrlFit out;
  out.kernel = resolve_scales(kernel, dist_sq);
  const GramMatrix K = build_gram(dist_sq, out.kernel.epsilon_k);
  const AdjacencyGraph W = build_adjacency(dist_sq, out.kernel.epsilon_w, out.kernel.num_neighbors);
  const GraphLaplacian L = build_laplacian(W);
  out.graph_connected = W.connected();

  RegularizationParams params = options.params;
  if (options.grid_search) {
    const auto choice = loo_grid_search(train, K.entries, L.matrix, options);
    if (std::isfinite(choice.rmse)) {
      params = choice.params;
      out.loo_rmse = choice.rmse;
    }
  }
  out.model = fit(train, K, L, params, options.center_labels);
  return out;
}

MrlFit fit_from_samples(const TrainingSet& train, const KernelConfig& kernel, const MrlOptions& options) {
  return fit_from_distances(train, pairwise_sq_distances(train.samples), kernel, options);
}

Adapted adapt(const MrlFit& previous, const TrainingSet& train, const std::vector<RtfVector>& fresh,
              const KernelConfig& requested_kernel, const MrlOptions& options) {
  if (fresh.empty()) return {previous, train};
  Adapted out;
  out.train = train;
  for (const auto& h : fresh) {
    if (!train.samples.empty()) require_same_band(train.samples.front(), h);
    out.train.samples.push_back(h);
  }
  // Without a grid search the regularization weights stay at the previous
  // fit's values; with one they are re-selected on the enlarged graph.
  MrlOptions refit = options;
  if (!refit.grid_search) refit.params = previous.model.params;
  const KernelConfig kernel = options.scale_policy == ScalePolicy::Frozen ? previous.kernel : requested_kernel;
  out.fit = fit_from_samples(out.train, kernel, refit);
  return out;
}

AdaptiveSession::AdaptiveSession(TrainingSet initial, KernelConfig kernel, MrlOptions options, int cadence)
    : train_(std::move(initial)), kernel_(kernel), options_(std::move(options)), cadence_(cadence) {
  if (cadence_ < 1) throw FitError("adaptation cadence must be positive", 0.0);
  fit_ = fit_from_samples(train_, kernel_, options_);
}

double AdaptiveSession::localize(const RtfVector& h) const { return fit_.model.predict(h); }

bool AdaptiveSession::accept(const RtfVector& h) {
  pending_.push_back(h);
  if (static_cast<int>(pending_.size()) < cadence_) return false;
  flush();
  return true;
}

void AdaptiveSession::flush() {
  if (pending_.empty()) return;
  auto next = adapt(fit_, train_, pending_, kernel_, options_);
  fit_ = std::move(next.fit);
  train_ = std::move(next.train);
  pending_.clear();
}

namespace {
constexpr std::uint32_t kModelVersion = 1;
}

void save_model(const std::string& path, const MrlModel& model) {
  detail::BinaryWriter w(path);
  w.bytes("MRLM", 4);
  w.pod(kModelVersion);
  w.string(model.dataset_hash);
  w.pod<std::uint64_t>(model.source_rows.size());
  w.array(model.source_rows.data(), model.source_rows.size());
  w.pod(model.epsilon_k);
  w.pod(model.params.gamma_k);
  w.pod(model.params.gamma_m);
  w.pod<std::uint8_t>(model.centered ? 1 : 0);
  w.pod(model.label_offset);
  w.pod(model.diagnostics.residual_norm);
  w.pod(model.diagnostics.rhs_norm);
  w.pod(model.diagnostics.condition_estimate);
  w.pod<std::uint64_t>(static_cast<std::uint64_t>(model.weights.size()));
  w.array(model.weights.data(), static_cast<std::size_t>(model.weights.size()));
  w.finish();
}

MrlModel load_model(const std::string& path) {
  detail::BinaryReader r(path);
  r.expect_magic("MRLM", "an MRL model file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kModelVersion) throw IoError(path + ": unsupported model version " + std::to_string(version));
  MrlModel m;
  m.dataset_hash = r.string();
  m.source_rows.resize(r.count());
  r.array(m.source_rows.data(), m.source_rows.size());
  m.epsilon_k = r.pod<double>();
  m.params.gamma_k = r.pod<double>();
  m.params.gamma_m = r.pod<double>();
  m.centered = r.pod<std::uint8_t>() != 0;
  m.label_offset = r.pod<double>();
  m.diagnostics.residual_norm = r.pod<double>();
  m.diagnostics.rhs_norm = r.pod<double>();
  m.diagnostics.condition_estimate = r.pod<double>();
  m.weights.resize(static_cast<Eigen::Index>(r.count()));
  r.array(m.weights.data(), static_cast<std::size_t>(m.weights.size()));
  if (!m.source_rows.empty() && m.weights.size() != static_cast<Eigen::Index>(m.source_rows.size()))
    throw IoError(path + ": weight count does not match training rows");
  return m;
}

}  // namespace mrloc
