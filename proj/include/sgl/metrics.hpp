#ifndef SGL_METRICS_HPP
#define SGL_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/knn.hpp"
#include "sgl/resistance.hpp"
#include "sgl/rng.hpp"
#include "sgl/sgl_solver.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

/// Pearson correlation, accumulated in one pass with running co-moments.
inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("pearson_correlation: length mismatch");
  if (a.size() < 2) throw InvalidArgument("pearson_correlation: need at least 2 samples");
  double mean_a = 0.0, mean_b = 0.0, m2a = 0.0, m2b = 0.0, co = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double count = static_cast<double>(i + 1);
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    mean_a += da / count;
    mean_b += db / count;
    m2a += da * (a[i] - mean_a);
    m2b += db * (b[i] - mean_b);
    co += da * (b[i] - mean_b);
  }
  if (m2a == 0.0 || m2b == 0.0) {
    throw InvalidArgument("pearson_correlation: a sample has zero variance");
  }
  return std::clamp(co / std::sqrt(m2a * m2b), -1.0, 1.0);
}

struct SpectrumComparison {
  Eigen::VectorXd truth;           // first K nontrivial eigenvalues, ascending
  Eigen::VectorXd learned;
  Eigen::VectorXd ratio;           // learned / truth
  Eigen::VectorXd relative_error;  // (learned - truth) / truth
};

inline SpectrumComparison compare_spectra(const WeightedGraph& truth, const WeightedGraph& learned,
                                          std::size_t K, const EigenOptions& options = {}) {
  const std::size_t n = std::min(truth.node_count(), learned.node_count());
  if (n < 2 || K < 1 || K > n - 1) {
    throw InvalidArgument("compare_spectra: K = " + std::to_string(K) + " out of range");
  }
  SpectrumComparison out;
  out.truth = eigensolve_smallest(truth, K, options).eigenvalues;
  out.learned = eigensolve_smallest(learned, K, options).eigenvalues;
  out.ratio = out.learned.cwiseQuotient(out.truth);
  out.relative_error = (out.learned - out.truth).cwiseQuotient(out.truth);
  return out;
}

/// `count` distinct node pairs drawn uniformly without replacement. Asking for
/// at least all N(N-1)/2 pairs returns every pair in lexicographic order.
inline std::vector<NodePair> sample_pairs(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("sample_pairs: need at least 2 nodes");
  const std::size_t total = n * (n - 1) / 2;
  std::vector<NodePair> out;
  if (count >= total || total <= 10000) {
    out.reserve(total);
    for (NodeId s = 0; s < n; ++s) {
      for (NodeId t = s + 1; t < n; ++t) out.push_back({s, t});
    }
    if (count >= total) return out;
    Rng rng(seed, Stream::pairs);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
      std::swap(out[i], out[j]);
    }
    out.resize(count);
    return out;
  }
  Rng rng(seed, Stream::pairs);
  std::unordered_set<std::uint64_t> seen;
  out.reserve(count);
  while (out.size() < count) {
    const auto a = static_cast<NodeId>(rng.below(n));
    const auto b = static_cast<NodeId>(rng.below(n));
    if (a == b) continue;
    const NodePair p{std::min(a, b), std::max(a, b)};
    if (seen.insert(static_cast<std::uint64_t>(p.s) * n + p.t).second) out.push_back(p);
  }
  return out;
}

struct ResistanceSample {
  NodePair pair;
  double truth = 0.0;
  double learned = 0.0;
};

struct ResistanceCorrelation {
  std::vector<ResistanceSample> samples;
  double pearson_r = 0.0;
};

inline ResistanceCorrelation resistance_correlation(const WeightedGraph& truth,
                                                    const WeightedGraph& learned,
                                                    std::size_t pair_count, std::uint64_t seed,
                                                    const ResistanceOptions& options = {}) {
  if (truth.node_count() != learned.node_count()) {
    throw DimensionMismatch("resistance_correlation: graphs have different node counts");
  }
  const std::vector<NodePair> pairs = sample_pairs(truth.node_count(), pair_count, seed);
  const std::vector<double> r_true = ResistanceCalculator(truth, options)(pairs);
  const std::vector<double> r_learned = ResistanceCalculator(learned, options)(pairs);
  ResistanceCorrelation out;
  out.samples.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.samples.push_back({pairs[i], r_true[i], r_learned[i]});
  }
  out.pearson_r = pearson_correlation(r_true, r_learned);
  return out;
}

/// Spectral drawing coordinates: column 0 is u_2, column 1 is u_3. Each
/// column's largest-magnitude entry (lowest index on ties) is made positive.
inline Eigen::MatrixXd layout_coordinates(const WeightedGraph& g, const EigenOptions& options = {}) {
  if (g.node_count() < 3) throw InvalidArgument("layout_coordinates: need at least 3 nodes");
  Eigen::MatrixXd xy = eigensolve_smallest(g, 2, options).eigenvectors;
  for (Eigen::Index c = 0; c < xy.cols(); ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < xy.rows(); ++i) {
      if (std::abs(xy(i, c)) > std::abs(xy(arg, c))) arg = i;
    }
    if (xy(arg, c) < 0.0) xy.col(c) *= -1.0;
  }
  return xy;
}

struct DistortionStats {
  std::vector<double> values;          // eta per candidate, input order
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> bucket_edges;    // upper edges; a final bucket catches the rest
  std::vector<std::size_t> bucket_counts;
};

/// Embedding distortion eta = M R_eff(s, t) / z_data over the given pairs,
/// using exact (full-spectrum) effective resistances on g.
inline DistortionStats distortion_stats(const WeightedGraph& g, const Eigen::MatrixXd& X,
                                        std::span<const NodePair> candidates,
                                        std::vector<double> bucket_edges = {0.5, 0.9, 1.1, 2.0, 10.0},
                                        const ResistanceOptions& options = {}) {
  if (static_cast<std::size_t>(X.rows()) != g.node_count()) {
    throw DimensionMismatch("distortion_stats: X rows do not match graph node count");
  }
  std::sort(bucket_edges.begin(), bucket_edges.end());
  DistortionStats out;
  out.bucket_edges = bucket_edges;
  out.bucket_counts.assign(bucket_edges.size() + 1, 0);
  if (candidates.empty()) return out;
  const std::vector<double> resistance = ResistanceCalculator(g, options)(candidates);
  const double m = static_cast<double>(X.cols());
  out.values.reserve(candidates.size());
  out.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double z = data_distance(X, candidates[i].s, candidates[i].t);
    const double eta = z > 0.0 ? m * resistance[i] / z : std::numeric_limits<double>::infinity();
    out.values.push_back(eta);
    out.max = std::max(out.max, eta);
    sum += eta;
    const auto bucket = static_cast<std::size_t>(
        std::upper_bound(bucket_edges.begin(), bucket_edges.end(), eta) - bucket_edges.begin());
    ++out.bucket_counts[bucket];
  }
  out.mean = sum / static_cast<double>(candidates.size());
  return out;
}

/// Summary comparison of a learned graph against its ground truth. Distortion
/// statistics need the measurements and are present only when X is given.
struct EvalReport {
  SpectrumComparison spectra;
  ResistanceCorrelation resistance;
  std::optional<DistortionStats> distortion;
  std::size_t edges_true = 0;
  std::size_t edges_learned = 0;
};

/// With X, distortion is measured on the learned graph over the kNN(k) pairs
/// of X that the learned graph does not contain.
inline EvalReport evaluate(const WeightedGraph& truth, const WeightedGraph& learned,
                           std::size_t pair_count, std::size_t spectrum_k, std::uint64_t seed,
                           const Eigen::MatrixXd* X = nullptr, std::size_t k = 5) {
  if (truth.node_count() != learned.node_count()) {
    throw DimensionMismatch("evaluate: truth has " + std::to_string(truth.node_count()) +
                            " nodes, learned graph has " + std::to_string(learned.node_count()));
  }
  EvalReport report;
  report.spectra = compare_spectra(truth, learned, spectrum_k);
  report.resistance = resistance_correlation(truth, learned, pair_count, seed);
  report.edges_true = truth.edge_count();
  report.edges_learned = learned.edge_count();
  if (X != nullptr) {
    std::vector<NodePair> candidates;
    for (const NodePair& p : knn_pairs(*X, k).pairs) {
      if (!learned.has_edge(p.s, p.t)) candidates.push_back(p);
    }
    report.distortion = distortion_stats(learned, *X, candidates);
  }
  return report;
}

}  // namespace sgl

#endif  // SGL_METRICS_HPP
