#ifndef SGL_SGL_SOLVER_HPP
#define SGL_SGL_SOLVER_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/knn.hpp"
#include "sgl/laplacian_solver.hpp"
#include "sgl/parallel.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

/// Off-graph candidate edge scored against the current spectral embedding.
struct EdgeCandidate {
  NodeId s = 0;
  NodeId t = 0;
  double z_data = 0.0;       // ||X^T e_st||^2
  double z_emb = 0.0;        // ||U_r^T e_st||^2
  double sensitivity = 0.0;  // z_emb - z_data / M
  double distortion = 0.0;   // M z_emb / z_data
};

struct LearnConfig {
  std::size_t k = 5;              // kNN neighbors for the candidate pool
  std::size_t r = 5;              // embedding uses r - 1 nontrivial modes; clamped to N
  double tol = 1e-12;             // stop once the largest sensitivity is <= tol
  double beta_sample = 1e-3;      // up to ceil(N * beta_sample) edges added per iteration
  double inverse_variance = 0.0;  // 1 / sigma^2
  std::size_t max_iterations = 0; // 0: 10 * ceil(1 / beta_sample)
  std::size_t objective_K = 50;   // eigenvalues in the truncated log-determinant
  bool record_objective = false;  // evaluate F every iteration (costly)
  EigenOptions eigen{};
  SolveOptions solve{};

  std::size_t resolved_max_iterations() const {
    if (max_iterations > 0) return max_iterations;
    return 10 * static_cast<std::size_t>(std::ceil(1.0 / beta_sample));
  }

  void validate(std::size_t n) const {
    if (k < 1) throw InvalidArgument("LearnConfig: k must be at least 1");
    if (r < 2) throw InvalidArgument("LearnConfig: r must be at least 2");
    if (!(tol > 0.0)) throw InvalidArgument("LearnConfig: tol must be positive");
    if (!(beta_sample > 0.0 && beta_sample <= 1.0)) {
      throw InvalidArgument("LearnConfig: beta_sample must lie in (0, 1]");
    }
    if (!(inverse_variance >= 0.0)) {
      throw InvalidArgument("LearnConfig: inverse_variance must be nonnegative");
    }
    if (n < 2) throw InvalidArgument("learn: need at least 2 nodes");
  }
};

enum class LearnStatus { converged, max_iterations, candidate_pool_exhausted };

inline const char* to_string(LearnStatus status) {
  switch (status) {
    case LearnStatus::converged: return "converged";
    case LearnStatus::max_iterations: return "max_iterations";
    case LearnStatus::candidate_pool_exhausted: return "candidate_pool_exhausted";
  }
  return "unknown";
}

struct IterationRecord {
  std::size_t iteration = 0;
  double s_max = 0.0;
  std::size_t edge_count = 0;  // after this iteration's inclusions
  std::size_t added = 0;
  std::optional<double> objective;
  double seconds = 0.0;
};

struct LearnTrace {
  std::vector<IterationRecord> records;
  LearnStatus status = LearnStatus::converged;

  std::size_t inclusion_iterations() const {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [](const IterationRecord& r) { return r.added > 0; }));
  }
};

struct InitialGraph {
  WeightedGraph knn;           // candidate pool graph, weights M / z_data
  WeightedGraph tree;          // its maximum spanning tree
  double z_data_floor = 0.0;   // lower clamp applied to z_data
};

struct LearnResult {
  WeightedGraph graph;
  LearnTrace trace;
  InitialGraph initial;
  std::vector<EdgeCandidate> remaining;  // candidates scored in the final iteration
  double scale_factor = 1.0;             // edge scaling gamma (1 when skipped)
};

namespace detail {

inline double median(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

inline double clamp_distance(double z, double floor) { return std::max(z, floor); }

}  // namespace detail

/// Connected kNN candidate graph over the rows of X plus its maximum spanning tree.
inline InitialGraph init_graph(const Eigen::MatrixXd& X, std::size_t k) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2) throw InvalidArgument("init_graph: X needs at least 2 rows");
  if (X.cols() < 1) throw InvalidArgument("init_graph: X needs at least 1 column");
  if (((X.rowwise() - X.row(0)).array() == 0.0).all()) {
    throw InvalidArgument("init_graph: all rows of X are identical");
  }
  KnnPairs knn = knn_pairs(X, k);
  connect_components(X, knn);

  std::vector<double> nonzero;
  for (double d : knn.distances) {
    if (d > 0.0) nonzero.push_back(d);
  }
  if (nonzero.empty()) throw InvalidArgument("init_graph: kNN graph has no nonzero distance");
  InitialGraph out;
  out.z_data_floor = 1e-12 * detail::median(std::move(nonzero));

  const double m = static_cast<double>(X.cols());
  std::vector<Edge> edges;
  edges.reserve(knn.pairs.size());
  for (std::size_t i = 0; i < knn.pairs.size(); ++i) {
    const double z = detail::clamp_distance(knn.distances[i], out.z_data_floor);
    edges.push_back({knn.pairs[i].s, knn.pairs[i].t, m / z});
  }
  out.knn = WeightedGraph(n, edges);
  out.tree = maximum_spanning_tree(out.knn);
  return out;
}

/// Orders candidates by sensitivity, descending; ties by (s, t) ascending.
inline void sort_candidates(std::vector<EdgeCandidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const EdgeCandidate& a, const EdgeCandidate& b) {
    if (a.sensitivity != b.sensitivity) return a.sensitivity > b.sensitivity;
    if (a.s != b.s) return a.s < b.s;
    return a.t < b.t;
  });
}

/// Sensitivity and distortion of each candidate pair under the embedding in `basis`.
inline std::vector<EdgeCandidate> score_candidates(const SpectralBasis& basis,
                                                   const Eigen::MatrixXd& X,
                                                   std::span<const NodePair> candidates,
                                                   double z_data_floor = 0.0) {
  if (basis.embedding.size() == 0) throw InvalidArgument("score_candidates: embedding not built");
  if (basis.embedding.rows() != X.rows()) {
    throw DimensionMismatch("score_candidates: basis and X disagree on node count");
  }
  const double m = static_cast<double>(X.cols());
  std::vector<EdgeCandidate> out(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    const NodePair p = candidates[i];
    EdgeCandidate c;
    c.s = std::min(p.s, p.t);
    c.t = std::max(p.s, p.t);
    c.z_data = detail::clamp_distance(data_distance(X, c.s, c.t), z_data_floor);
    c.z_emb = basis.embedding_distance(c.s, c.t);
    c.sensitivity = c.z_emb - c.z_data / m;
    c.distortion = c.z_data > 0.0 ? m * c.z_emb / c.z_data : std::numeric_limits<double>::infinity();
    out[i] = c;
  });
  sort_candidates(out);
  return out;
}

/// First-order eigenvalue change from adding weight delta_w on {s, t}:
/// delta_w * (u_s - u_t)^2 for a unit eigenvector u.
inline double perturbation_estimate(const Eigen::Ref<const Eigen::VectorXd>& u, double delta_w,
                                    NodeId s, NodeId t) {
  const double d = u[static_cast<Eigen::Index>(s)] - u[static_cast<Eigen::Index>(t)];
  return delta_w * d * d;
}

/// Global weight factor sqrt(mean_i ||x~_i||^2 / ||x_i||^2), where L(g) x~_i = y_i.
inline double edge_scale_factor(const WeightedGraph& g, const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& Y, SolveOptions options = {}) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw DimensionMismatch("edge_scale: X and Y shapes differ");
  }
  if (static_cast<std::size_t>(X.rows()) != g.node_count()) {
    throw DimensionMismatch("edge_scale: X rows do not match graph node count");
  }
  if (X.cols() < 1) throw DimensionMismatch("edge_scale: no measurements");
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (X.col(j).squaredNorm() == 0.0) {
      throw InvalidArgument("edge_scale: voltage column " + std::to_string(j) + " is zero");
    }
  }
  const LaplacianSolver solver(g, options);
  std::vector<double> ratios(static_cast<std::size_t>(X.cols()));
  parallel_for(ratios.size(), [&](std::size_t j) {
    const auto col = static_cast<Eigen::Index>(j);
    ratios[j] = solver.solve(Y.col(col)).squaredNorm() / X.col(col).squaredNorm();
  });
  double mean = 0.0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  return std::sqrt(mean);
}

/// Rescales every edge of g so solved voltages match the measured norms on average.
inline WeightedGraph edge_scale(const WeightedGraph& g, const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& Y, SolveOptions options = {}) {
  return g.scaled(edge_scale_factor(g, X, Y, options));
}

/// Learns a sparse graph whose spectral embedding distances match the data
/// distances of the voltage rows.
///
/// Starting from the maximum spanning tree of a kNN graph, each iteration
/// embeds the current graph with r - 1 nontrivial eigenvectors, ranks the
/// remaining kNN edges by sensitivity, and adds the top ceil(N * beta_sample)
/// of them whose sensitivity exceeds tol, each with weight M / z_data. When
/// currents Y are supplied the result is rescaled by edge_scale.
inline LearnResult learn(const Eigen::MatrixXd& X, const std::optional<Eigen::MatrixXd>& Y,
                         const LearnConfig& config) {
  const auto n = static_cast<std::size_t>(X.rows());
  config.validate(n);
  if (X.cols() < 1) throw InvalidArgument("learn: X has no columns");
  if (Y && (Y->rows() != X.rows() || Y->cols() != X.cols())) {
    throw DimensionMismatch("learn: X is " + std::to_string(X.rows()) + "x" +
                            std::to_string(X.cols()) + " but Y is " + std::to_string(Y->rows()) +
                            "x" + std::to_string(Y->cols()));
  }
  const std::size_t modes = std::min(config.r, n) - 1;
  const double m = static_cast<double>(X.cols());
  const std::size_t batch = static_cast<std::size_t>(
      std::ceil(static_cast<double>(n) * config.beta_sample));
  const std::size_t max_iterations = config.resolved_max_iterations();

  LearnResult result;
  result.initial = init_graph(X, config.k);
  WeightedGraph graph = result.initial.tree;

  std::vector<NodePair> pool;
  for (const Edge& e : result.initial.knn.edges()) {
    if (!graph.has_edge(e.s, e.t)) pool.push_back(e.pair());
  }

  EigenOptions eigen = config.eigen;
  for (std::size_t iteration = 0;; ++iteration) {
    if (pool.empty()) {
      result.trace.status = LearnStatus::candidate_pool_exhausted;
      result.remaining.clear();
      break;
    }
    const auto started = std::chrono::steady_clock::now();
    SpectralBasis basis;
    try {
      basis = build_embedding(eigensolve_smallest(graph, modes, eigen), config.inverse_variance);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("learn iteration " + std::to_string(iteration) + ": " + e.what(),
                             e.best_residual(), e.iterations());
    }
    eigen.warm_start = basis.eigenvectors;
    std::vector<EdgeCandidate> scored =
        score_candidates(basis, X, pool, result.initial.z_data_floor);

    IterationRecord record;
    record.iteration = iteration;
    record.s_max = scored.front().sensitivity;
    if (config.record_objective) {
      const std::size_t K = std::min(config.objective_K, n - 1);
      record.objective = objective_value(graph, X, config.inverse_variance, K).total;
    }

    const bool converged = record.s_max <= config.tol;
    const bool capped = !converged && iteration >= max_iterations;
    if (!converged && !capped) {
      for (std::size_t i = 0; i < scored.size() && i < batch; ++i) {
        const EdgeCandidate& c = scored[i];
        if (!(c.sensitivity > config.tol)) break;
        graph.add_edge(c.s, c.t, m / c.z_data);
        ++record.added;
      }
      std::erase_if(pool, [&](const NodePair& p) { return graph.has_edge(p.s, p.t); });
    }
    record.edge_count = graph.edge_count();
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.trace.records.push_back(record);
    if (converged || capped) {
      result.trace.status = converged ? LearnStatus::converged : LearnStatus::max_iterations;
      result.remaining = std::move(scored);
      break;
    }
  }

  if (Y) {
    result.scale_factor = edge_scale_factor(graph, X, *Y, config.solve);
    graph = graph.scaled(result.scale_factor);
  }
  result.graph = std::move(graph);
  return result;
}

}  // namespace sgl

#endif  // SGL_SGL_SOLVER_HPP
