#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "oracles.hpp"
#include "mrloc/dds_localizer.hpp"
#include "mrloc/error.hpp"

using namespace mrloc;
using mrloc::testing::Gen;

namespace {

// Noisy points along a curve with the first l of them labelled by their
// curve parameter (mapped to 10..60 degrees).
TrainingSet curve_set(Gen& g, int n, int l, double noise = 0.02) {
  const auto band = mrloc::testing::synthetic_band(6);
  TrainingSet t;
  for (int i = 0; i < n; ++i) {
    const double u = i < l ? (l == 1 ? 0.5 : static_cast<double>(i) / (l - 1)) : g.uniform(0.0, 1.0);
    auto h = mrloc::testing::curve_point(band, 0.8 * u);
    for (auto& v : h.values) v += Complex(noise * g.normal(), noise * g.normal());
    t.samples.push_back(h);
    if (i < l) t.labels.push_back(10.0 + 50.0 * u);
  }
  return t;
}

DdsModel model_from_weights(const Eigen::MatrixXd& w, int dimension) {
  DdsModel m;
  m.embedding = fit_embedding(adjacency_from_weights(w), dimension);
  return m;
}

}  // namespace

TEST_CASE("embedding coordinates are eigenvalue-scaled right eigenvectors") {
  Gen g(1);
  const auto w = mrloc::testing::random_connected_weights(g, 9);
  const auto graph = adjacency_from_weights(w);
  const auto spec = transition_spectrum(graph);
  const auto e = fit_embedding(graph, 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(e.eigenvalues[j] == spec.eigenvalues[j + 1]);
    CHECK(e.eigenvalues[j] <= 1.0 + 1e-12);
    for (int i = 0; i < 9; ++i) CHECK(e.coordinates(i, j) == doctest::Approx(spec.eigenvalues[j + 1] * spec.right_vectors(i, j + 1)));
  }
  CHECK_THROWS_AS(fit_embedding(graph, 9), GraphError);
}

TEST_CASE("Nystrom extension of a training sample reproduces its coordinates") {
  Gen g(2);
  const auto t = curve_set(g, 50, 5);
  const auto fit = fit_dds(t, KernelConfig{}, DdsOptions{3});
  const auto& c = fit.model.embedding.coordinates;
  for (int i = 0; i < t.size(); ++i) {
    const auto ext = nystrom_extend(fit.model, t.samples[i]);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(ext[j] - c(i, j)) <= 1e-2 * c.col(j).cwiseAbs().maxCoeff());
  }
}

TEST_CASE("far queries raise or map to zero per configuration") {
  Gen g(3);
  const auto t = curve_set(g, 20, 3);
  auto fit = fit_dds(t, KernelConfig{}, DdsOptions{});
  RtfVector far = t.samples[0];
  for (auto& v : far.values) v += Complex(1e4, -1e4);
  try {
    nystrom_extend(fit.model, far);
    FAIL("expected ExtensionError");
  } catch (const ExtensionError& e) {
    CHECK(e.component() == -1);
  }
  fit.model.on_vanishing = VanishingAffinity::ZeroVector;
  CHECK(nystrom_extend(fit.model, far) == Eigen::VectorXd::Zero(1));
}

TEST_CASE("vanishing eigenvalue names the offending component") {
  Gen g(4);
  auto m = model_from_weights(mrloc::testing::random_connected_weights(g, 6), 2);
  m.embedding.eigenvalues[1] = 1e-14;
  try {
    nystrom_extend(m, Eigen::VectorXd::Ones(6));
    FAIL("expected ExtensionError");
  } catch (const ExtensionError& e) {
    CHECK(e.component() == 2);
  }
}

TEST_CASE("equal queries embed identically") {
  Gen g(5);
  const auto t = curve_set(g, 30, 4);
  const auto fit = fit_dds(t, KernelConfig{}, DdsOptions{2});
  const auto q = mrloc::testing::curve_point(t.samples[0].band, 0.3);
  CHECK(nystrom_extend(fit.model, q) == nystrom_extend(fit.model, RtfVector(q)));
}

TEST_CASE("estimate reference cases") {
  Gen g(6);
  auto t = curve_set(g, 25, 1);
  const auto one = fit_dds(t, KernelConfig{}, DdsOptions{});
  CHECK(dds_predict(one.model, t.samples[7]) == t.labels[0]);

  t = curve_set(g, 25, 4);
  auto fit = fit_dds(t, KernelConfig{}, DdsOptions{2});
  fit.model.epsilon_gamma = 1e-9;
  for (int i = 0; i < 4; ++i) {
    const auto est = dds_estimate(fit.model, fit.model.embedding.coordinates.row(i).transpose());
    CHECK(est.position == doctest::Approx(t.labels[i]));
  }
}

TEST_CASE("embedding CSV has one row per training sample") {
  Gen g(7);
  const auto t = curve_set(g, 12, 3);
  const auto fit = fit_dds(t, KernelConfig{}, DdsOptions{2});
  const auto path = (std::filesystem::temp_directory_path() / "mrloc_embedding.csv").string();
  write_embedding_csv(path, fit.model);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,azimuth,true_azimuth,coordinate_1,coordinate_2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 12);
  std::filesystem::remove(path);
}

TEST_CASE("property: full-rank embedding distance equals the definitional diffusion distance") {
  mrloc::testing::for_all(50, 1919, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const int n = g.integer(3, 12);
    const auto w = mrloc::testing::random_connected_weights(g, n);
    const auto e = fit_embedding(adjacency_from_weights(w), n - 1);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double oracle = mrloc::testing::definitional_diffusion_distance(w, i, j);
        const double got = diffusion_distance(e.coordinates.row(i).transpose(), e.coordinates.row(j).transpose());
        CHECK(std::abs(got - oracle) <= 1e-8 * oracle + 1e-14);  // absolute floor for coincident rows
      }
  });
}

TEST_CASE("property: diffusion distance is a metric on embedded points") {
  mrloc::testing::for_all(30, 2020, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const int n = g.integer(4, 15);
    const auto e = fit_embedding(adjacency_from_weights(mrloc::testing::random_connected_weights(g, n)), g.integer(1, n - 1));
    auto row = [&](int i) { return Eigen::VectorXd(e.coordinates.row(i).transpose()); };
    for (int t = 0; t < 20; ++t) {
      const int a = g.integer(0, n - 1), b = g.integer(0, n - 1), c = g.integer(0, n - 1);
      CHECK(diffusion_distance(row(a), row(a)) == 0.0);
      CHECK(diffusion_distance(row(a), row(c)) <= diffusion_distance(row(a), row(b)) + diffusion_distance(row(b), row(c)) + 1e-12);
    }
  });
}

TEST_CASE("property: estimates are convex combinations of labelled positions") {
  mrloc::testing::for_all(15, 2121, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const auto t = curve_set(g, g.integer(15, 40), g.integer(2, 6), 0.05);
    const auto fit = fit_dds(t, KernelConfig{}, DdsOptions{g.integer(1, 3)});
    const double lo = *std::min_element(t.labels.begin(), t.labels.end());
    const double hi = *std::max_element(t.labels.begin(), t.labels.end());
    for (int q = 0; q < 10; ++q) {
      const auto h = mrloc::testing::curve_point(t.samples[0].band, g.uniform(0.0, 0.8));
      const auto est = dds_estimate(fit.model, nystrom_extend(fit.model, h));
      CHECK(est.weights.minCoeff() >= 0.0);
      CHECK(est.weights.maxCoeff() <= 1.0);
      CHECK(est.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(est.position >= lo - 1e-9);
      CHECK(est.position <= hi + 1e-9);
    }
  });
}

TEST_CASE("property: predictions do not depend on the order of unlabelled samples") {
  mrloc::testing::for_all(10, 2222, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const auto t = curve_set(g, g.integer(15, 40), 4, 0.05);
    TrainingSet shuffled = t;
    std::shuffle(shuffled.samples.begin() + 4, shuffled.samples.end(), g.engine());
    const auto a = fit_dds(t, KernelConfig{}, DdsOptions{2});
    const auto b = fit_dds(shuffled, KernelConfig{}, DdsOptions{2});
    for (int q = 0; q < 10; ++q) {
      const auto h = mrloc::testing::curve_point(t.samples[0].band, g.uniform(0.0, 0.8));
      CHECK(dds_predict(b.model, h) == doctest::Approx(dds_predict(a.model, h)).epsilon(1e-8));
    }
  });
}
