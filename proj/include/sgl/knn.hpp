#ifndef SGL_KNN_HPP
#define SGL_KNN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/spectral.hpp"

namespace sgl {

/// k-nearest-neighbor pairs over the rows of X with exact squared distances.
struct KnnPairs {
  std::vector<NodePair> pairs;     // sorted, unique
  std::vector<double> distances;   // squared Euclidean distance per pair
};

namespace detail {

constexpr Eigen::Index kKnnRowBlock = 256;

}  // namespace detail

/// Symmetrized kNN: {s, t} is kept when t is among the k nearest rows of s or
/// vice versa. Ties are broken by the smaller row index.
inline KnnPairs knn_pairs(const Eigen::MatrixXd& X, std::size_t k) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (n < 2) throw InvalidArgument("knn: need at least 2 rows");
  if (k < 1) throw InvalidArgument("knn: k must be at least 1");
  k = std::min(k, n - 1);
  // Gram-based distances rank a shortlist; exact differences decide.
  const std::size_t shortlist = std::min(n - 1, k + 8);
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  std::vector<NodePair> found;
  found.reserve(n * k);
  std::vector<std::pair<double, NodeId>> scratch(n);
  for (Eigen::Index begin = 0; begin < X.rows(); begin += detail::kKnnRowBlock) {
    const Eigen::Index rows = std::min(detail::kKnnRowBlock, X.rows() - begin);
    const Eigen::MatrixXd gram = X.middleRows(begin, rows) * X.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto i = static_cast<std::size_t>(begin + r);
      std::size_t count = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const auto jj = static_cast<Eigen::Index>(j);
        scratch[count++] = {sq[begin + r] + sq[jj] - 2.0 * gram(r, jj), j};
      }
      std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(shortlist),
                        scratch.begin() + static_cast<std::ptrdiff_t>(count));
      for (std::size_t c = 0; c < shortlist; ++c) {
        scratch[c].first = data_distance(X, i, scratch[c].second);
      }
      std::sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(shortlist));
      for (std::size_t c = 0; c < k; ++c) {
        const NodeId j = scratch[c].second;
        found.push_back({std::min(i, j), std::max(i, j)});
      }
    }
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  KnnPairs out;
  out.distances.reserve(found.size());
  for (const NodePair& p : found) out.distances.push_back(data_distance(X, p.s, p.t));
  out.pairs = std::move(found);
  return out;
}

/// Adds bridging pairs until the pair graph is connected, each time joining
/// the two components whose closest rows are nearest.
inline void connect_components(const Eigen::MatrixXd& X, KnnPairs& knn) {
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<Edge> unit;
  unit.reserve(knn.pairs.size());
  for (const NodePair& p : knn.pairs) unit.push_back({p.s, p.t, 1.0});
  const Components comps = connected_components(n, unit);
  if (comps.connected()) return;

  // Closest pair of rows between every two components.
  const std::size_t c = comps.count;
  struct Link {
    double approx = std::numeric_limits<double>::infinity();
    NodeId s = 0;
    NodeId t = 0;
  };
  std::vector<Link> best(c * c);
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  for (Eigen::Index begin = 0; begin < X.rows(); begin += detail::kKnnRowBlock) {
    const Eigen::Index rows = std::min(detail::kKnnRowBlock, X.rows() - begin);
    const Eigen::MatrixXd gram = X.middleRows(begin, rows) * X.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto i = static_cast<std::size_t>(begin + r);
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::size_t a = comps.labels[i];
        const std::size_t b = comps.labels[j];
        if (a == b) continue;
        const auto jj = static_cast<Eigen::Index>(j);
        const double d = sq[begin + r] + sq[jj] - 2.0 * gram(r, jj);
        Link& link = best[std::min(a, b) * c + std::max(a, b)];
        if (d < link.approx) link = {d, i, j};
      }
    }
  }
  std::vector<std::tuple<double, NodeId, NodeId, std::size_t, std::size_t>> links;
  for (std::size_t a = 0; a < c; ++a) {
    for (std::size_t b = a + 1; b < c; ++b) {
      const Link& link = best[a * c + b];
      if (std::isinf(link.approx)) continue;
      links.emplace_back(data_distance(X, link.s, link.t), link.s, link.t, a, b);
    }
  }
  std::sort(links.begin(), links.end());
  DisjointSets merged(c);
  std::size_t remaining = c - 1;
  for (const auto& [d, s, t, a, b] : links) {
    if (remaining == 0) break;
    if (!merged.unite(a, b)) continue;
    --remaining;
    const NodePair p{s, t};
    const auto pos = std::lower_bound(knn.pairs.begin(), knn.pairs.end(), p);
    const auto offset = pos - knn.pairs.begin();
    knn.pairs.insert(pos, p);
    knn.distances.insert(knn.distances.begin() + offset, d);
  }
}

}  // namespace sgl

#endif  // SGL_KNN_HPP
