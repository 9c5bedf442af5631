#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sgl/generators.hpp"
#include "sgl/knn.hpp"
#include "sgl/measurements.hpp"
#include "sgl/metrics.hpp"
#include "sgl/sgl_solver.hpp"
#include "support/oracles.hpp"

using sgl::Edge;
using sgl::NodePair;
using sgl::WeightedGraph;

namespace {

std::vector<NodePair> brute_knn(const Eigen::MatrixXd& X, std::size_t k) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<NodePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.push_back({(X.row(Eigen::Index(i)) - X.row(Eigen::Index(j))).squaredNorm(), j});
    std::sort(d.begin(), d.end());
    for (std::size_t c = 0; c < std::min(k, n - 1); ++c)
      out.push_back({std::min(i, d[c].second), std::max(i, d[c].second)});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct Protocol {
  WeightedGraph truth;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
};

Protocol grid_protocol(std::size_t side, std::size_t m, std::uint64_t seed) {
  Protocol p{sgl::grid_graph(side, side), {}, {}};
  p.Y = sgl::generate_currents(side * side, m, seed);
  p.X = sgl::simulate_voltages(p.truth, p.Y);
  return p;
}

}  // namespace

TEST(Knn, MatchesBruteForce) {
  for (unsigned seed = 0; seed < 4; ++seed) {
    std::srand(seed);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(300, 4);
    for (std::size_t k : {1u, 5u, 10u}) EXPECT_EQ(sgl::knn_pairs(X, k).pairs, brute_knn(X, k));
  }
}

TEST(Knn, TiesBrokenBySmallerIndex) {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 1.0, -1.0, 2.0;
  // Node 0 is equidistant from nodes 1 and 2; node 1 is the tie winner.
  const sgl::KnnPairs knn = sgl::knn_pairs(X, 1);
  EXPECT_TRUE(std::find(knn.pairs.begin(), knn.pairs.end(), NodePair{0, 1}) != knn.pairs.end());
  EXPECT_EQ(knn.distances.size(), knn.pairs.size());
}

TEST(Knn, ThreeNodeExampleAndRepair) {
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 1.0, 3.0;  // mutual distances 1, 2, 3
  sgl::KnnPairs knn = sgl::knn_pairs(X, 1);
  EXPECT_EQ(knn.pairs, (std::vector<NodePair>{{0, 1}, {1, 2}}));
  sgl::connect_components(X, knn);
  EXPECT_EQ(knn.pairs.size(), 2u);

  Eigen::MatrixXd Y(4, 1);
  Y << 0.0, 0.1, 5.0, 5.2;
  sgl::KnnPairs split = sgl::knn_pairs(Y, 1);
  EXPECT_EQ(split.pairs, (std::vector<NodePair>{{0, 1}, {2, 3}}));
  sgl::connect_components(Y, split);
  EXPECT_EQ(split.pairs, (std::vector<NodePair>{{0, 1}, {1, 2}, {2, 3}}));
  EXPECT_NEAR(split.distances[1], 4.9 * 4.9, 1e-12);
}

TEST(InitGraph, TwoNodeTruth) {
  const WeightedGraph two(2, std::vector<Edge>{{0, 1, 1.0}});
  const Eigen::MatrixXd X = sgl::simulate_voltages(two, sgl::generate_currents(2, 4, 1));
  const sgl::InitialGraph init = sgl::init_graph(X, 5);
  EXPECT_EQ(init.knn.edge_count(), 1u);
  EXPECT_EQ(init.tree, init.knn);
  EXPECT_NEAR(init.knn.edges()[0].w, 4.0 / sgl::data_distance(X, 0, 1), 1e-12);
}

TEST(InitGraph, WeightsAndTree) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(3, 50);
  X(1, 0) = 2.0;   // z(0,1) = 4
  X(2, 0) = 5.0;
  const sgl::InitialGraph init = sgl::init_graph(X, 1);
  EXPECT_NEAR(*init.knn.weight(0, 1), 12.5, 1e-12);
  EXPECT_TRUE(sgl::is_connected(init.tree).connected());
  EXPECT_EQ(init.tree.edge_count(), 2u);

  const Protocol p = grid_protocol(12, 30, 2);
  const sgl::InitialGraph g = sgl::init_graph(p.X, 5);
  EXPECT_EQ(g.tree, sgl::maximum_spanning_tree(g.knn));
  for (const Edge& e : g.knn.edges()) EXPECT_NEAR(e.w, 30.0 / sgl::data_distance(p.X, e.s, e.t), 1e-9 * e.w);
}

TEST(InitGraph, DegenerateRowsRejected) {
  EXPECT_THROW(sgl::init_graph(Eigen::MatrixXd::Ones(5, 3), 2), sgl::InvalidArgument);
}

TEST(InitGraph, DuplicateRowsClampedToFloor) {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 0.0, 1.0, 3.0;
  const sgl::InitialGraph init = sgl::init_graph(X, 1);
  EXPECT_GT(init.z_data_floor, 0.0);
  EXPECT_TRUE(std::isfinite(*init.knn.weight(0, 1)));
  EXPECT_NEAR(*init.knn.weight(0, 1), 1.0 / init.z_data_floor, 1e-6 / init.z_data_floor);
}

TEST(Candidates, ArithmeticFromDefinitions) {
  sgl::SpectralBasis basis;
  basis.eigenvalues = Eigen::VectorXd::Ones(1);
  basis.eigenvectors = Eigen::MatrixXd::Zero(2, 1);
  basis.embedding.resize(2, 1);
  basis.embedding << std::sqrt(0.5), 0.0;  // z_emb = 0.5
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 50);
  X(0, 0) = std::sqrt(10.0);                 // z_data = 10
  const auto c = sgl::score_candidates(basis, X, std::vector<NodePair>{{0, 1}});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0].z_emb, 0.5, 1e-15);
  EXPECT_NEAR(c[0].z_data, 10.0, 1e-14);
  EXPECT_NEAR(c[0].sensitivity, 0.3, 1e-15);
  EXPECT_NEAR(c[0].distortion, 2.5, 1e-14);
}

TEST(Candidates, FixedPointOnTwoNodeTruth) {
  Eigen::MatrixXd X(2, 3);
  X << 0.2, -0.1, 0.5, -0.2, 0.1, -0.5;
  const double w = 3.0 / sgl::data_distance(X, 0, 1);
  const WeightedGraph g(2, std::vector<Edge>{{0, 1, w}});
  const sgl::SpectralBasis b = sgl::build_embedding(sgl::eigensolve_smallest(g, 1), 0.0);
  const auto c = sgl::score_candidates(b, X, std::vector<NodePair>{{0, 1}});
  EXPECT_NEAR(c[0].sensitivity, 0.0, 1e-12);
  EXPECT_NEAR(c[0].distortion, 1.0, 1e-12);
}

TEST(Candidates, SortedWithDeterministicTieBreak) {
  std::vector<sgl::EdgeCandidate> c{{2, 3, 0, 0, 1.0, 0}, {0, 5, 0, 0, 1.0, 0}, {0, 4, 0, 0, 1.0, 0}, {1, 2, 0, 0, 2.0, 0}};
  sgl::sort_candidates(c);
  EXPECT_EQ(c[0].s, 1u);
  EXPECT_EQ(c[1].t, 4u);
  EXPECT_EQ(c[2].t, 5u);
  EXPECT_EQ(c[3].s, 2u);
}

TEST(Candidates, ConsistencyInvariant) {
  const Protocol p = grid_protocol(10, 20, 3);
  const sgl::InitialGraph init = sgl::init_graph(p.X, 5);
  std::vector<NodePair> pool;
  for (const Edge& e : init.knn.edges())
    if (!init.tree.has_edge(e.s, e.t)) pool.push_back(e.pair());
  const sgl::SpectralBasis b = sgl::build_embedding(sgl::eigensolve_smallest(init.tree, 4), 0.0);
  const auto scored = sgl::score_candidates(b, p.X, pool);
  ASSERT_EQ(scored.size(), pool.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const auto& c = scored[i];
    EXPECT_GE(c.z_data, 0.0);
    EXPECT_GE(c.z_emb, 0.0);
    EXPECT_NEAR(c.sensitivity, c.z_data / 20.0 * (c.distortion - 1.0), 1e-12 * std::max(1.0, c.z_emb));
    if (i > 0) {
      EXPECT_GE(scored[i - 1].sensitivity, c.sensitivity);
    }
  }
}

TEST(Candidates, MoreModesNeverLowerSensitivity) {
  const Protocol p = grid_protocol(6, 10, 4);
  const sgl::InitialGraph init = sgl::init_graph(p.X, 5);
  std::vector<NodePair> pool;
  for (const Edge& e : init.knn.edges())
    if (!init.tree.has_edge(e.s, e.t)) pool.push_back(e.pair());
  auto score = [&](std::size_t modes) {
    auto c = sgl::score_candidates(sgl::build_embedding(sgl::eigensolve_smallest(init.tree, modes), 0.0), p.X, pool);
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.s != b.s ? a.s < b.s : a.t < b.t; });
    return c;
  };
  const auto few = score(3), more = score(10), full = score(35);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_LE(few[i].sensitivity, more[i].sensitivity + 1e-12);
    EXPECT_LE(more[i].sensitivity, full[i].sensitivity + 1e-12);
  }
}

TEST(Candidates, ScaleEquivarianceOfRanking) {
  const Protocol p = grid_protocol(8, 15, 5);
  const sgl::InitialGraph init = sgl::init_graph(p.X, 5);
  const sgl::InitialGraph scaled = sgl::init_graph(3.0 * p.X, 5);
  EXPECT_EQ(init.knn.edge_count(), scaled.knn.edge_count());
  for (std::size_t i = 0; i < init.knn.edge_count(); ++i)
    EXPECT_NEAR(scaled.knn.edges()[i].w, init.knn.edges()[i].w / 9.0, 1e-9 * init.knn.edges()[i].w);
  std::vector<NodePair> pool;
  for (const Edge& e : init.knn.edges())
    if (!init.tree.has_edge(e.s, e.t)) pool.push_back(e.pair());
  const auto a = sgl::score_candidates(sgl::build_embedding(sgl::eigensolve_smallest(init.tree, 4), 0.0), p.X, pool);
  const auto b = sgl::score_candidates(sgl::build_embedding(sgl::eigensolve_smallest(scaled.tree, 4), 0.0), 3.0 * p.X, pool);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].s, b[i].s);
    EXPECT_EQ(a[i].t, b[i].t);
  }
}

TEST(Sensitivity, MatchesFiniteDifferenceOfObjective) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const std::size_t n = 8 + seed % 13;
    const WeightedGraph g = oracle::random_graph(n, n / 2, 700 + seed);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(n), 6);
    NodePair cand{0, 0};
    for (std::size_t s = 0; s < n && cand.t == 0; ++s) {
      for (std::size_t t = s + 1; t < n; ++t) {
        if (!g.has_edge(s, t)) {
          cand = {s, t};
          break;
        }
      }
    }
    ASSERT_NE(cand.t, 0u);
    const auto basis = sgl::build_embedding(sgl::eigensolve_smallest(g, n - 1), 0.0);
    const double s = sgl::score_candidates(basis, X, std::vector<NodePair>{cand})[0].sensitivity;
    const Eigen::MatrixXd L = oracle::dense_laplacian(g);
    const double h = 1e-6;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    e[Eigen::Index(cand.s)] = 1.0;
    e[Eigen::Index(cand.t)] = -1.0;
    const Eigen::MatrixXd dL = e * e.transpose();
    const double fd = (oracle::objective(L + h * dL, X, 0.0, n - 1) - oracle::objective(L - h * dL, X, 0.0, n - 1)) / (2 * h);
    EXPECT_NEAR(s, fd, 1e-4 * std::abs(fd));
  }
}

TEST(Perturbation, Examples) {
  EXPECT_EQ(sgl::perturbation_estimate(Eigen::Vector3d(0.5, 0.5, -1.0), 0.3, 0, 1), 0.0);
  const Eigen::Vector2d u(1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0));
  EXPECT_NEAR(sgl::perturbation_estimate(u, 0.1, 0, 1), 0.2, 1e-15);
  const WeightedGraph g(2, std::vector<Edge>{{0, 1, 1.1}});
  EXPECT_NEAR(sgl::eigensolve_smallest(g, 1).eigenvalues[0], 2.2, 1e-10);
}

TEST(Perturbation, MatchesReEigensolve) {
  const WeightedGraph g = oracle::random_graph(30, 40, 31);
  const Eigen::MatrixXd L = oracle::dense_laplacian(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> before(L);
  NodePair p{0, 29};
  if (g.has_edge(0, 29)) p = {1, 28};
  const double dw = 1e-4;
  Eigen::MatrixXd L2 = L;
  L2(Eigen::Index(p.s), Eigen::Index(p.s)) += dw;
  L2(Eigen::Index(p.t), Eigen::Index(p.t)) += dw;
  L2(Eigen::Index(p.s), Eigen::Index(p.t)) -= dw;
  L2(Eigen::Index(p.t), Eigen::Index(p.s)) -= dw;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> after(L2);
  for (Eigen::Index i = 1; i <= 3; ++i) {
    const double est = sgl::perturbation_estimate(before.eigenvectors().col(i), dw, p.s, p.t);
    const double exact = after.eigenvalues()[i] - before.eigenvalues()[i];
    EXPECT_NEAR(est, exact, 0.05 * std::abs(exact) + 1e-12);
  }
}

TEST(EdgeScale, FixedPointAndHomogeneity) {
  const WeightedGraph truth = oracle::random_graph(25, 20, 41);
  const Eigen::MatrixXd Y = sgl::generate_currents(25, 10, 2);
  const Eigen::MatrixXd X = sgl::simulate_voltages(truth, Y);
  EXPECT_NEAR(sgl::edge_scale_factor(truth, X, Y), 1.0, 1e-9);
  EXPECT_NEAR(sgl::edge_scale_factor(truth.scaled(2.0), X, Y), 0.5, 1e-9);
  const WeightedGraph restored = sgl::edge_scale(truth.scaled(2.0), X, Y);
  for (std::size_t i = 0; i < truth.edge_count(); ++i)
    EXPECT_NEAR(restored.edges()[i].w, truth.edges()[i].w, 1e-8 * truth.edges()[i].w);
}

TEST(EdgeScale, RandomTreesRecoverWeights) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const std::size_t n = 5 + seed % 16;
    const WeightedGraph truth = oracle::random_graph(n, 0, 800 + seed);
    const Eigen::MatrixXd Y = sgl::generate_currents(n, 7, seed);
    const Eigen::MatrixXd X = sgl::simulate_voltages(truth, Y);
    const double c = 0.1 + seed;
    const WeightedGraph restored = sgl::edge_scale(truth.scaled(c), X, Y);
    for (std::size_t i = 0; i < truth.edge_count(); ++i)
      EXPECT_NEAR(restored.edges()[i].w, truth.edges()[i].w, 1e-8 * truth.edges()[i].w);
  }
}

TEST(EdgeScale, Errors) {
  const WeightedGraph truth = oracle::random_graph(6, 2, 3);
  const Eigen::MatrixXd Y = sgl::generate_currents(6, 3, 1);
  Eigen::MatrixXd X = sgl::simulate_voltages(truth, Y);
  EXPECT_THROW(sgl::edge_scale(truth, X.leftCols(2), Y), sgl::DimensionMismatch);
  X.col(1).setZero();
  EXPECT_THROW(sgl::edge_scale(truth, X, Y), sgl::InvalidArgument);
}

TEST(Learn, ConfigDefaultsAndValidation) {
  const sgl::LearnConfig c;
  EXPECT_EQ(c.k, 5u);
  EXPECT_EQ(c.r, 5u);
  EXPECT_EQ(c.tol, 1e-12);
  EXPECT_EQ(c.beta_sample, 1e-3);
  EXPECT_EQ(c.inverse_variance, 0.0);
  EXPECT_EQ(c.objective_K, 50u);
  EXPECT_EQ(c.resolved_max_iterations(), 10000u);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 3);
  using Mutation = void (*)(sgl::LearnConfig&);
  const Mutation mutations[] = {[](sgl::LearnConfig& b) { b.k = 0; }, [](sgl::LearnConfig& b) { b.r = 1; },
                                [](sgl::LearnConfig& b) { b.tol = 0; }, [](sgl::LearnConfig& b) { b.beta_sample = 0; },
                                [](sgl::LearnConfig& b) { b.beta_sample = 1.5; },
                                [](sgl::LearnConfig& b) { b.inverse_variance = -1; }};
  for (Mutation bad : mutations) {
    sgl::LearnConfig b;
    bad(b);
    EXPECT_THROW(sgl::learn(X, std::nullopt, b), sgl::InvalidArgument);
  }
  EXPECT_THROW(sgl::learn(X, Eigen::MatrixXd::Random(9, 3), c), sgl::DimensionMismatch);
}

TEST(Learn, TwoNodeTruthRecoveredAfterScaling) {
  const WeightedGraph truth(2, std::vector<Edge>{{0, 1, 3.0}});
  const Eigen::MatrixXd Y = sgl::generate_currents(2, 5, 1);
  const Eigen::MatrixXd X = sgl::simulate_voltages(truth, Y);
  const sgl::LearnResult r = sgl::learn(X, Y, {});
  ASSERT_EQ(r.graph.edge_count(), 1u);
  EXPECT_NEAR(r.graph.edges()[0].w, 3.0, 1e-6);
  EXPECT_NE(r.trace.status, sgl::LearnStatus::max_iterations);
}

TEST(Learn, TreeAlreadyOptimalStopsImmediately) {
  // A path truth with full-rank measurements: the initial tree is the truth
  // and every remaining candidate has negative sensitivity.
  const std::size_t n = 12;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  const WeightedGraph path(n, edges);
  const Eigen::MatrixXd Y = sgl::generate_currents(n, 40, 2);
  const Eigen::MatrixXd X = sgl::simulate_voltages(path, Y);
  sgl::LearnConfig cfg;
  cfg.r = n;
  const sgl::LearnResult r = sgl::learn(X, std::nullopt, cfg);
  EXPECT_EQ(r.trace.status, sgl::LearnStatus::converged);
  ASSERT_EQ(r.trace.records.size(), 1u);
  EXPECT_EQ(r.trace.inclusion_iterations(), 0u);
  EXPECT_EQ(r.graph, r.initial.tree);
}

TEST(Learn, GridRunInvariants) {
  const Protocol p = grid_protocol(8, 50, 1);
  const sgl::LearnResult r = sgl::learn(p.X, p.Y, {});
  EXPECT_EQ(r.trace.status, sgl::LearnStatus::converged);
  EXPECT_LE(r.trace.records.back().s_max, 1e-12);
  EXPECT_LE(r.graph.edge_count(), 2 * 64u);
  EXPECT_TRUE(sgl::is_connected(r.graph).connected());
  for (std::size_t i = 1; i < r.trace.records.size(); ++i)
    EXPECT_GE(r.trace.records[i].edge_count, r.trace.records[i - 1].edge_count);
  for (const auto& c : r.remaining) EXPECT_LE(c.distortion, 1.0 + 1e-12 * 50.0 / c.z_data + 1e-9);
  // Every learned edge comes from the kNN pool.
  for (const Edge& e : r.graph.edges()) EXPECT_TRUE(r.initial.knn.has_edge(e.s, e.t));

  const sgl::LearnResult again = sgl::learn(p.X, p.Y, {});
  EXPECT_EQ(again.graph, r.graph);
}

TEST(Learn, MaxIterationsStatus) {
  const Protocol p = grid_protocol(8, 50, 1);
  sgl::LearnConfig cfg;
  cfg.max_iterations = 2;
  const sgl::LearnResult r = sgl::learn(p.X, std::nullopt, cfg);
  EXPECT_EQ(r.trace.status, sgl::LearnStatus::max_iterations);
  EXPECT_EQ(r.trace.records.size(), 3u);
}

TEST(Learn, PoolExhaustion) {
  // k = 1 on a path-like cloud leaves no off-tree candidates.
  Eigen::MatrixXd X(5, 1);
  X << 0.0, 1.0, 2.5, 4.5, 7.0;
  const sgl::LearnResult r = sgl::learn(X, std::nullopt, sgl::LearnConfig{.k = 1});
  EXPECT_EQ(r.trace.status, sgl::LearnStatus::candidate_pool_exhausted);
  EXPECT_EQ(r.graph.edge_count(), 4u);
}

TEST(Learn, ObjectiveRecording) {
  const Protocol p = grid_protocol(6, 20, 2);
  sgl::LearnConfig cfg;
  cfg.record_objective = true;
  const sgl::LearnResult r = sgl::learn(p.X, std::nullopt, cfg);
  for (const auto& rec : r.trace.records) EXPECT_TRUE(rec.objective.has_value());
}

TEST(Learn, EightByEightGridEndToEnd) {
  const Protocol p = grid_protocol(8, 50, 1);
  const sgl::LearnResult r = sgl::learn(p.X, p.Y, {});
  EXPECT_EQ(r.trace.status, sgl::LearnStatus::converged);
  EXPECT_LE(r.graph.edge_count(), 2 * 64u);
  const sgl::SpectrumComparison sp = sgl::compare_spectra(p.truth, r.graph, 10);
  EXPECT_GE(sp.ratio.minCoeff(), 0.5);
  EXPECT_LE(sp.ratio.maxCoeff(), 2.0);
  const sgl::ResistanceCorrelation rc = sgl::resistance_correlation(p.truth, r.graph, 64 * 63 / 2, 1);
  EXPECT_EQ(rc.samples.size(), 64u * 63u / 2u);
  EXPECT_GE(rc.pearson_r, 0.9);
}
