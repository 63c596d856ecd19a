#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "generators.hpp"
#include "oracles.hpp"
#include "mrloc/error.hpp"
#include "mrloc/manifold_graph.hpp"

using namespace mrloc;
using mrloc::testing::Gen;

namespace {

std::vector<RtfVector> line_points(const std::vector<double>& xs) {
  const auto band = mrloc::testing::synthetic_band(1);
  std::vector<RtfVector> out;
  for (double x : xs) out.push_back({{Complex(x, 0.0)}, band});
  return out;
}

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

}  // namespace

TEST_CASE("Gaussian kernel reference values") {
  const auto p = line_points({0.0, 1.0, 2.0});
  CHECK(gaussian_kernel(p[0], p[0], 0.3) == 1.0);
  CHECK(gaussian_kernel(p[0], p[1], 0.5) == doctest::Approx(std::exp(-1.0)));
  CHECK(gaussian_kernel(p[0], p[2], 0.7) == gaussian_kernel(p[2], p[0], 0.7));
  const auto K = build_gram(p, 0.5);
  CHECK(K.entries(0, 2) == doctest::Approx(0.018316).epsilon(1e-5));
  CHECK_THROWS_AS(gaussian_kernel(p[0], p[1], 0.0), GraphError);
}

TEST_CASE("Gram matrix of identical samples is all ones") {
  const auto p = line_points({0.4, 0.4, 0.4, 0.4});
  const auto K = build_gram(p, 1.0);
  CHECK(K.entries == Eigen::MatrixXd::Ones(4, 4));
}

TEST_CASE("OR rule keeps an edge chosen by one endpoint only") {
  const auto g = build_adjacency(line_points({0.0, 1.0, 10.0}), 1.0, 1);
  const auto w = dense(g.weights);
  CHECK(w(0, 1) > 0.0);
  CHECK(w(1, 2) > 0.0);
  CHECK(w(2, 1) == w(1, 2));
  CHECK(w(0, 2) == 0.0);
  CHECK(g.connected());
}

TEST_CASE("num_neighbors = N-1 gives the full affinity matrix") {
  Gen g(5);
  const auto band = mrloc::testing::synthetic_band(4);
  const auto pts = mrloc::testing::random_samples(g, band, 9);
  const auto w = dense(build_adjacency(pts, 1.3, 8).weights);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) CHECK(w(i, j) == doctest::Approx(i == j ? 0.0 : gaussian_kernel(pts[i], pts[j], 1.3)));
}

TEST_CASE("disconnected graphs are reported, not thrown") {
  const auto g = build_adjacency(line_points({0.0, 0.1, 50.0, 50.1}), 1.0, 1);
  CHECK(g.num_components == 2);
  CHECK_FALSE(g.connected());
  CHECK_THROWS_AS(transition_spectrum(g), GraphError);
}

TEST_CASE("two-node graph: Laplacian, transition matrix and spectrum") {
  Eigen::MatrixXd w(2, 2);
  w << 0.0, 0.8, 0.8, 0.0;
  const auto g = adjacency_from_weights(w);
  const auto L = dense(build_laplacian(g).matrix);
  CHECK(L(0, 0) == doctest::Approx(0.8));
  CHECK(L(0, 1) == doctest::Approx(-0.8));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  CHECK(es.eigenvalues()[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(es.eigenvalues()[1] == doctest::Approx(1.6));
  const auto P = build_transition(g);
  CHECK(dense(P.matrix) == (Eigen::MatrixXd(2, 2) << 0.0, 1.0, 1.0, 0.0).finished());
  CHECK(P.stationary[0] == doctest::Approx(0.5));
  CHECK(P.stationary[1] == doctest::Approx(0.5));
}

TEST_CASE("median neighbour scale on a line") {
  Eigen::MatrixXd d(4, 4);
  // points 0, 1, 3, 6
  const double x[4] = {0, 1, 3, 6};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) d(i, j) = (x[i] - x[j]) * (x[i] - x[j]);
  // nearest-neighbour squared distances 1, 1, 4, 9; even count averages the middle pair
  CHECK(median_neighbor_scale(d, 1) == 2.5);
}

TEST_CASE("Mercer reconstruction at the extremes") {
  Gen g(9);
  const auto band = mrloc::testing::synthetic_band(3);
  const auto K = build_gram(mrloc::testing::random_samples(g, band, 8), 2.0);
  CHECK(mercer_reconstruction_check(K, 0) == doctest::Approx(1.0));
  CHECK(mercer_reconstruction_check(K, 8) <= 1e-8);
}

TEST_CASE("property: adjacency agrees with the exhaustive neighbour oracle") {
  mrloc::testing::for_all(12, 808, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const int n = g.integer(3, 200);
    const int k = g.integer(1, std::min(n - 1, 15));
    const auto band = mrloc::testing::synthetic_band(2);
    auto pts = mrloc::testing::random_samples(g, band, n);
    if (g.coin(0.3))  // exact ties exercise the index tie-break
      for (int i = 1; i < n; i += 5) pts[i] = pts[i - 1];
    const auto d = pairwise_sq_distances(pts);
    const auto edges = mrloc::testing::knn_edges(d, k);
    const auto w = dense(build_adjacency(d, 1.0, k).weights);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) {
          CHECK(w(i, j) == 0.0);
          continue;
        }
        CHECK((w(i, j) > 0.0) == static_cast<bool>(edges[i][j]));
        CHECK(w(i, j) == w(j, i));
      }
  });
}

TEST_CASE("property: Gram matrices are positive semi-definite with unit diagonal") {
  mrloc::testing::for_all(20, 909, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const auto band = mrloc::testing::synthetic_band(g.integer(1, 5));
    const auto K = build_gram(mrloc::testing::random_samples(g, band, g.integer(2, 30)), g.log_uniform(0.01, 10.0));
    for (Eigen::Index i = 0; i < K.entries.rows(); ++i) CHECK(K.entries(i, i) == 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K.entries);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * K.entries.rows());
  });
}

TEST_CASE("property: kernel locality contract") {
  mrloc::testing::for_all(200, 1010, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const double eps = g.log_uniform(1e-3, 1e3);
    const double far = g.uniform(10.0, 100.0), close = g.uniform(0.0, 0.01);
    CHECK(gaussian_from_sq(far * 2.0 * eps, eps) < 5e-5);
    CHECK(gaussian_from_sq(close * 2.0 * eps, eps) > 0.99);
  });
}

TEST_CASE("property: Laplacian annihilates constants and is non-negative") {
  mrloc::testing::for_all(30, 1111, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const int n = g.integer(2, 20);
    const auto graph = adjacency_from_weights(mrloc::testing::random_connected_weights(g, n));
    const auto L = dense(build_laplacian(graph).matrix);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    CHECK((L * ones).cwiseAbs().maxCoeff() <= 1e-12 * graph.degree.maxCoeff());
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd f = g.normal_vector(n);
      CHECK(f.dot(L * f) >= -1e-12);
    }
  });
}

TEST_CASE("property: quadratic form equals the pairwise double sum") {
  mrloc::testing::for_all(30, 1212, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const int n = g.integer(2, 12);
    const auto w = mrloc::testing::random_connected_weights(g, n);
    const auto L = dense(build_laplacian(adjacency_from_weights(w)).matrix);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd f = g.normal_vector(n) * g.log_uniform(0.1, 100.0);
      const double oracle = mrloc::testing::dirichlet_double_sum(w, f);
      CHECK(std::abs(f.dot(L * f) - oracle) <= 1e-10 * oracle);
    }
  });
}

TEST_CASE("property: transition matrix is row-stochastic with constant leading eigenvector") {
  mrloc::testing::for_all(30, 1313, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const int n = g.integer(2, 25);
    const auto graph = adjacency_from_weights(mrloc::testing::random_connected_weights(g, n));
    const auto P = dense(build_transition(graph).matrix);
    for (int i = 0; i < n; ++i) {
      CHECK(P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(P.row(i).minCoeff() >= 0.0);
    }
    const auto spec = transition_spectrum(graph);
    CHECK(spec.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-10));
    const Eigen::VectorXd phi0 = spec.right_vectors.col(0);
    CHECK((phi0.array() - phi0[0]).abs().maxCoeff() <= 1e-9);
    for (Eigen::Index j = 1; j < spec.eigenvalues.size(); ++j) {
      CHECK(spec.eigenvalues[j] <= spec.eigenvalues[j - 1] + 1e-14);
      const Eigen::VectorXd phi = spec.right_vectors.col(j);
      CHECK((P * phi - spec.eigenvalues[j] * phi).norm() <= 1e-9 * (1.0 + phi.norm()));
      CHECK(spec.stationary.dot(phi.cwiseProduct(phi)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  });
}

TEST_CASE("property: Mercer reconstruction error is non-increasing in rank") {
  mrloc::testing::for_all(20, 1414, [](Gen& g, int, std::uint64_t seed) {
    CAPTURE(seed);
    const int n = g.integer(2, 15);
    const auto band = mrloc::testing::synthetic_band(g.integer(1, 4));
    const auto K = build_gram(mrloc::testing::random_samples(g, band, n), g.log_uniform(0.1, 10.0));
    double prev = mercer_reconstruction_check(K, 0);
    for (int r = 1; r <= n; ++r) {
      const double e = mercer_reconstruction_check(K, r);
      CHECK(e <= prev + 1e-15);
      prev = e;
    }
    CHECK(prev <= 1e-8);
  });
}
