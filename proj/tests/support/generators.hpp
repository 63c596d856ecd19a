#pragma once

// Hand-rolled random generators for property tests. Every generator draws
// from a Gen seeded per case, so a failing case can be replayed from the seed
// printed by for_all().

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mrloc/hashing.hpp"
#include "mrloc/manifold_graph.hpp"
#include "mrloc/mrl_localizer.hpp"
#include "mrloc/rtf_features.hpp"

namespace mrloc::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Runs `property` on `cases` independent generators. The per-case seed is
// derived from (base, case) and reported on failure through `on_case`.
template <typename Fn>
void for_all(int cases, std::uint64_t base, Fn&& property) {
  for (int c = 0; c < cases; ++c) {
    const std::uint64_t seed = derive_seed(base, static_cast<std::uint64_t>(c));
    Gen gen(seed);
    property(gen, c, seed);
  }
}

inline BandPtr synthetic_band(int bins) {
  auto band = std::make_shared<Band>();
  band->fft_size = 4 * bins + 4;
  for (int k = 1; k <= bins; ++k) band->bins.push_back(k);
  return band;
}

// Random complex vector near `center` (component-wise normal of width `spread`).
inline RtfVector random_rtf(Gen& g, const BandPtr& band, double spread = 1.0) {
  RtfVector h;
  h.band = band;
  h.values.resize(band->bins.size());
  for (auto& v : h.values) v = Complex(spread * g.normal(), spread * g.normal());
  return h;
}

// Points along a smooth curve in feature space, parameterized by t in [0, 1].
// Mimics an RTF manifold: neighbouring t give neighbouring vectors.
inline RtfVector curve_point(const BandPtr& band, double t) {
  RtfVector h;
  h.band = band;
  const int n = static_cast<int>(band->bins.size());
  h.values.resize(n);
  for (int k = 0; k < n; ++k) {
    const double phase = 2.0 * 3.141592653589793 * t * (k + 1) / n;
    h.values[k] = Complex(std::cos(phase), std::sin(phase));
  }
  return h;
}

inline std::vector<RtfVector> random_samples(Gen& g, const BandPtr& band, int n, double spread = 1.0) {
  std::vector<RtfVector> out;
  for (int i = 0; i < n; ++i) out.push_back(random_rtf(g, band, spread));
  return out;
}

// Random training set with labels uniform in [lo, hi].
inline TrainingSet random_training_set(Gen& g, int n, int l, int bins = 3, double lo = 10.0, double hi = 60.0) {
  const auto band = synthetic_band(bins);
  TrainingSet t;
  t.samples = random_samples(g, band, n);
  for (int i = 0; i < l; ++i) t.labels.push_back(g.uniform(lo, hi));
  return t;
}

// Symmetric non-negative weights with zero diagonal; a random spanning path
// keeps the graph connected, extra edges appear with probability `density`.
inline Eigen::MatrixXd random_connected_weights(Gen& g, int n, double density = 0.4) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), g.engine());
  for (int i = 0; i + 1 < n; ++i) {
    const double v = g.uniform(0.1, 1.0);
    w(order[i], order[i + 1]) = w(order[i + 1], order[i]) = v;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (w(i, j) == 0.0 && g.coin(density)) w(i, j) = w(j, i) = g.uniform(0.05, 1.0);
  return w;
}

}  // namespace mrloc::testing
