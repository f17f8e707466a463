#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "riseflock/errors.hpp"
#include "riseflock/graph.hpp"
#include "riseflock/rng.hpp"

using namespace riseflock;
using graph::GraphTopology;

namespace {

// All edge subsets of the complete graph on N vertices, as bitmasks over
// the C(N,2) possible edges.
std::vector<std::pair<int, int>> all_pairs(int N) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 1; i <= N; ++i) {
    for (int j = i + 1; j <= N; ++j) pairs.push_back({i, j});
  }
  return pairs;
}

GraphTopology random_weighted_topology(rng::CounterRng& gen, int max_n) {
  GraphTopology topo;
  topo.agent_count = 2 + static_cast<int>(gen.uniform(0, 3));
  topo.state_dim = 1 + static_cast<int>(gen.uniform(0, max_n));
  topo.pinning.resize(topo.agent_count);
  for (int& b : topo.pinning) b = gen.uniform() < 0.5 ? 1 : 0;
  for (auto [i, j] : all_pairs(topo.agent_count)) {
    if (gen.uniform() < 0.6) {
      topo.edges.push_back({i, j, gen.uniform(0.1, 3.0)});
    }
  }
  return topo;
}

}  // namespace

TEST_CASE("laplacian of a single edge") {
  GraphTopology topo{2, {{1, 2, 1.0}}, {0, 0}, 1};
  Eigen::MatrixXd l = graph::laplacian(topo);
  CHECK(l(0, 0) == 1.0);
  CHECK(l(0, 1) == -1.0);
  CHECK(l(1, 0) == -1.0);
  CHECK(l(1, 1) == 1.0);
}

TEST_CASE("laplacian eigenvalues of the unit-weight 4-cycle") {
  GraphTopology topo = graph::cycle_topology(4, {0, 0, 0, 0}, 1);
  Eigen::MatrixXd l = graph::laplacian(topo);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = es.eigenvalues();
  // Frozen from the closed form 2 - 2 cos(2 pi k / 4).
  CHECK(ev(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev(1) == doctest::Approx(2.0));
  CHECK(ev(2) == doctest::Approx(2.0));
  CHECK(ev(3) == doctest::Approx(4.0));
}

TEST_CASE("laplacian of an isolated vertex") {
  GraphTopology topo{1, {}, {0}, 1};
  Eigen::MatrixXd l = graph::laplacian(topo);
  CHECK(l.rows() == 1);
  CHECK(l(0, 0) == 0.0);
}

TEST_CASE("laplacian rejects malformed edges") {
  CHECK_THROWS_AS(graph::laplacian(GraphTopology{2, {{1, 3, 1.0}}, {0, 0}, 1}),
                  ValidationError);
  CHECK_THROWS_AS(graph::laplacian(GraphTopology{2, {{1, 1, 1.0}}, {0, 0}, 1}),
                  ValidationError);
  CHECK_THROWS_AS(graph::laplacian(GraphTopology{2, {{1, 2, 0.0}}, {0, 0}, 1}),
                  ValidationError);
  CHECK_THROWS_AS(graph::laplacian(GraphTopology{2, {{1, 2, -2.0}}, {0, 0}, 1}),
                  ValidationError);
}

TEST_CASE("laplacian row sums vanish on random weighted graphs") {
  rng::CounterRng gen(7, 100);
  for (int trial = 0; trial < 50; ++trial) {
    GraphTopology topo = random_weighted_topology(gen, 1);
    Eigen::MatrixXd l = graph::laplacian(topo);
    CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
    CHECK((l - l.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("interaction matrix for one pinned vertex is the identity") {
  GraphTopology topo{1, {}, {1}, 3};
  auto im = graph::interaction_matrix(topo);
  CHECK(im.h.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(im.b_kron.isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST_CASE("interaction matrix of a pinned pair") {
  GraphTopology topo{2, {{1, 2, 1.0}}, {1, 0}, 1};
  auto im = graph::interaction_matrix(topo);
  Eigen::MatrixXd expected(2, 2);
  expected << 2, -1, -1, 1;
  CHECK(im.h.isApprox(expected));
  CHECK(im.h.isApprox(im.h.transpose()));
}

TEST_CASE("spectral extrema of the pinned pair in closed form") {
  GraphTopology topo{2, {{1, 2, 1.0}}, {1, 0}, 1};
  auto s = graph::spectral_summary(graph::interaction_matrix(topo));
  const double root5 = std::sqrt(5.0);
  CHECK(s.lambda_min_h == doctest::Approx((3.0 - root5) / 2.0).epsilon(1e-12));
  CHECK(s.lambda_max_h == doctest::Approx((3.0 + root5) / 2.0).epsilon(1e-12));
}

TEST_CASE("spectral summary of the identity interaction") {
  GraphTopology topo{1, {}, {1}, 3};
  auto s = graph::spectral_summary(graph::interaction_matrix(topo));
  CHECK(s.lambda_min_h == doctest::Approx(1.0));
  CHECK(s.lambda_max_h == doctest::Approx(1.0));
  CHECK(s.lambda_min_q == doctest::Approx(1.0));
  CHECK(s.lambda_max_q == doctest::Approx(1.0));
  CHECK(s.lambda_max_imh2 == doctest::Approx(0.0));
  CHECK(s.norm1_h == doctest::Approx(1.0));
}

TEST_CASE("benchmark topology: 24x24 interaction matrix is positive definite") {
  GraphTopology topo =
      graph::cycle_topology(8, {1, 0, 1, 0, 1, 0, 1, 0}, 3);
  auto im = graph::interaction_matrix(topo);
  REQUIRE(im.h.rows() == 24);
  CHECK(im.h.isApprox(im.h.transpose()));

  // Independent route: eigendecompose the full 24x24 matrix directly.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(im.h,
                                                    Eigen::EigenvaluesOnly);
  auto s = graph::spectral_summary(im);
  CHECK(s.lambda_min_h == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-9));
  CHECK(s.lambda_max_h == doctest::Approx(es.eigenvalues()(23)).epsilon(1e-9));
  CHECK(s.lambda_min_h > 0.0);
  // Frozen extrema for the alternating-pinned 8-cycle.
  CHECK(s.lambda_min_h == doctest::Approx(0.43844718719117).epsilon(1e-10));
  CHECK(s.lambda_max_h == doctest::Approx(4.56155281280883).epsilon(1e-10));
  CHECK(graph::check_pinned_connectivity(topo));
}

TEST_CASE("pinned connectivity examples") {
  CHECK_FALSE(graph::check_pinned_connectivity(
      GraphTopology{2, {}, {1, 1}, 1}));  // disconnected
  CHECK_FALSE(graph::check_pinned_connectivity(
      GraphTopology{3, {{1, 2, 1.0}, {2, 3, 1.0}}, {0, 0, 0}, 1}));  // unpinned
  CHECK(graph::check_pinned_connectivity(
      GraphTopology{3, {{1, 2, 1.0}, {2, 3, 1.0}}, {0, 1, 0}, 1}));
}

TEST_CASE("positive definiteness is equivalent to pinned connectivity, N <= 4") {
  for (int N = 1; N <= 4; ++N) {
    auto pairs = all_pairs(N);
    for (int edges = 0; edges < (1 << pairs.size()); ++edges) {
      for (int pins = 0; pins < (1 << N); ++pins) {
        GraphTopology topo;
        topo.agent_count = N;
        topo.state_dim = 1;
        for (int i = 0; i < N; ++i) topo.pinning.push_back((pins >> i) & 1);
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          if ((edges >> p) & 1) {
            topo.edges.push_back({pairs[p].first, pairs[p].second, 1.0});
          }
        }
        auto s = graph::spectral_summary(graph::interaction_matrix(topo));
        CHECK((s.lambda_min_h > 1e-9) ==
              graph::check_pinned_connectivity(topo));
      }
    }
  }
}

TEST_CASE("kronecker structure matches block application") {
  rng::CounterRng gen(11, 200);
  for (int trial = 0; trial < 40; ++trial) {
    GraphTopology topo = random_weighted_topology(gen, 3);
    auto im = graph::interaction_matrix(topo);
    const int n = topo.state_dim;
    const int N = topo.agent_count;

    Eigen::VectorXd stacked(n * N);
    for (int k = 0; k < stacked.size(); ++k) stacked(k) = gen.uniform(-2, 2);

    const Eigen::VectorXd direct = im.h * stacked;
    // Apply L+B coordinate-slice by coordinate-slice.
    Eigen::VectorXd blockwise(n * N);
    for (int a = 0; a < n; ++a) {
      Eigen::VectorXd slice(N);
      for (int i = 0; i < N; ++i) slice(i) = stacked(i * n + a);
      const Eigen::VectorXd mapped = im.lb * slice;
      for (int i = 0; i < N; ++i) blockwise(i * n + a) = mapped(i);
    }
    CHECK((direct - blockwise).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("lambda_Q invariants") {
  rng::CounterRng gen(13, 300);
  for (int trial = 0; trial < 20; ++trial) {
    GraphTopology topo = random_weighted_topology(gen, 2);
    auto s = graph::spectral_summary(graph::interaction_matrix(topo));
    CHECK(s.lambda_min_q == std::min(1.0, s.lambda_min_h));
    CHECK(s.lambda_max_q == std::max(1.0, s.lambda_max_h));
    CHECK((s.lambda_max_bmi == 0.0 || s.lambda_max_bmi == -1.0));
    CHECK((s.lambda_min_bmi == 0.0 || s.lambda_min_bmi == -1.0));
  }
}
