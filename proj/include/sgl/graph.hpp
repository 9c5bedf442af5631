#ifndef SGL_GRAPH_HPP
#define SGL_GRAPH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sgl/error.hpp"

namespace sgl {

using NodeId = std::size_t;

/// Unordered node pair stored with s < t.
struct NodePair {
  NodeId s = 0;
  NodeId t = 0;

  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

/// Weighted undirected edge, canonical orientation s < t, conductance w > 0.
struct Edge {
  NodeId s = 0;
  NodeId t = 0;
  double w = 0.0;

  NodePair pair() const { return {s, t}; }
  friend bool operator==(const Edge&, const Edge&) = default;
};

namespace detail {

template <typename Edges>
auto find_position(Edges& edges, NodeId s, NodeId t) {
  return std::lower_bound(edges.begin(), edges.end(), NodePair{s, t},
                          [](const Edge& e, const NodePair& key) { return e.pair() < key; });
}

}  // namespace detail

/// Undirected graph with positive edge weights (conductances).
///
/// Edges are kept sorted by (s, t) with s < t. Inserting an existing pair
/// replaces its weight.
class WeightedGraph {
 public:
  WeightedGraph() = default;

  explicit WeightedGraph(std::size_t node_count) : n_(node_count) {}

  WeightedGraph(std::size_t node_count, std::span<const Edge> edges) : n_(node_count) {
    edges_.reserve(edges.size());
    for (const Edge& e : edges) {
      edges_.push_back(canonical(e.s, e.t, e.w));
    }
    std::stable_sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.s, a.t) < std::tie(b.s, b.t);
    });
    // Later duplicates win, matching add_edge replacement semantics.
    std::vector<Edge> unique;
    unique.reserve(edges_.size());
    for (const Edge& e : edges_) {
      if (!unique.empty() && unique.back().s == e.s && unique.back().t == e.t) {
        unique.back().w = e.w;
      } else {
        unique.push_back(e);
      }
    }
    edges_ = std::move(unique);
  }

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  /// Inserts edge {a, b} or replaces its weight.
  void add_edge(NodeId a, NodeId b, double w) {
    const Edge e = canonical(a, b, w);
    auto it = detail::find_position(edges_, e.s, e.t);
    if (it != edges_.end() && it->s == e.s && it->t == e.t) {
      it->w = e.w;
    } else {
      edges_.insert(it, e);
    }
  }

  bool has_edge(NodeId a, NodeId b) const { return weight(a, b).has_value(); }

  std::optional<double> weight(NodeId a, NodeId b) const {
    if (a == b) return std::nullopt;
    if (a > b) std::swap(a, b);
    auto it = detail::find_position(edges_, a, b);
    if (it != edges_.end() && it->s == a && it->t == b) return it->w;
    return std::nullopt;
  }

  /// Copy with every weight multiplied by `factor` (> 0).
  WeightedGraph scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
      throw InvalidArgument("weight scale factor must be positive and finite");
    }
    WeightedGraph out = *this;
    for (Edge& e : out.edges_) e.w *= factor;
    return out;
  }

  double total_weight() const {
    double sum = 0.0;
    for (const Edge& e : edges_) sum += e.w;
    return sum;
  }

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

 private:
  Edge canonical(NodeId a, NodeId b, double w) const {
    if (a >= n_ || b >= n_) {
      throw InvalidArgument("edge endpoint out of range: {" + std::to_string(a) + ", " +
                            std::to_string(b) + "} with " + std::to_string(n_) + " nodes");
    }
    if (a == b) throw InvalidArgument("self-loop on node " + std::to_string(a));
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw InvalidArgument("edge weight must be positive and finite");
    }
    if (a > b) std::swap(a, b);
    return {a, b, w};
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

/// Graph Laplacian L = D - W in compressed adjacency form.
///
/// apply() computes (Lx)_i = sum_j w_ij (x_i - x_j), so L*1 is exactly zero.
class LaplacianOperator {
 public:
  explicit LaplacianOperator(const WeightedGraph& g)
      : n_(g.node_count()), edges_(g.edges().begin(), g.edges().end()) {
    offsets_.assign(n_ + 1, 0);
    for (const Edge& e : edges_) {
      ++offsets_[e.s + 1];
      ++offsets_[e.t + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
    neighbors_.resize(2 * edges_.size());
    weights_.resize(2 * edges_.size());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const Edge& e : edges_) {
      neighbors_[fill[e.s]] = e.t;
      weights_[fill[e.s]++] = e.w;
      neighbors_[fill[e.t]] = e.s;
      weights_[fill[e.t]++] = e.w;
    }
    degree_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      double d = 0.0;
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) d += weights_[k];
      degree_[static_cast<Eigen::Index>(i)] = d;
    }
  }

  std::size_t node_count() const noexcept { return n_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Eigen::VectorXd& degree() const noexcept { return degree_; }

  void apply(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> y) const {
    if (static_cast<std::size_t>(x.size()) != n_ || static_cast<std::size_t>(y.size()) != n_) {
      throw DimensionMismatch("Laplacian apply: vector length does not match node count");
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double xi = x[static_cast<Eigen::Index>(i)];
      double acc = 0.0;
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
        acc += weights_[k] * (xi - x[static_cast<Eigen::Index>(neighbors_[k])]);
      }
      y[static_cast<Eigen::Index>(i)] = acc;
    }
  }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n_));
    apply(x, y);
    return y;
  }

  /// Upper bound on the largest eigenvalue (Gershgorin: 2 * max degree).
  double spectral_bound() const { return n_ == 0 ? 0.0 : 2.0 * degree_.maxCoeff(); }

  Eigen::SparseMatrix<double> to_sparse() const {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n_ + 2 * edges_.size());
    for (std::size_t i = 0; i < n_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      triplets.emplace_back(ii, ii, degree_[ii]);
    }
    for (const Edge& e : edges_) {
      const auto s = static_cast<Eigen::Index>(e.s);
      const auto t = static_cast<Eigen::Index>(e.t);
      triplets.emplace_back(s, t, -e.w);
      triplets.emplace_back(t, s, -e.w);
    }
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(triplets.begin(), triplets.end());
    return L;
  }

  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(to_sparse()); }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<double> weights_;
  Eigen::VectorXd degree_;
};

inline LaplacianOperator build_laplacian(const WeightedGraph& g) { return LaplacianOperator(g); }

/// Laplacian quadratic form: sum over edges of w (x_s - x_t)^2.
inline double quadratic_form(const WeightedGraph& g, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (static_cast<std::size_t>(x.size()) != g.node_count()) {
    throw DimensionMismatch("quadratic_form: vector has length " + std::to_string(x.size()) +
                            ", graph has " + std::to_string(g.node_count()) + " nodes");
  }
  double sum = 0.0;
  for (const Edge& e : g.edges()) {
    const double d = x[static_cast<Eigen::Index>(e.s)] - x[static_cast<Eigen::Index>(e.t)];
    sum += e.w * d * d;
  }
  return sum;
}

/// Union-find with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// Connected components; labels are numbered in order of each
/// component's smallest node.
struct Components {
  std::size_t count = 0;
  std::vector<std::size_t> labels;

  bool connected() const noexcept { return count == 1; }
};

inline Components connected_components(std::size_t node_count, std::span<const Edge> edges) {
  DisjointSets sets(node_count);
  for (const Edge& e : edges) sets.unite(e.s, e.t);
  Components out;
  out.labels.assign(node_count, 0);
  std::vector<std::size_t> label_of_root(node_count, node_count);
  for (std::size_t v = 0; v < node_count; ++v) {
    const std::size_t root = sets.find(v);
    if (label_of_root[root] == node_count) label_of_root[root] = out.count++;
    out.labels[v] = label_of_root[root];
  }
  return out;
}

inline Components is_connected(const WeightedGraph& g) {
  return connected_components(g.node_count(), g.edges());
}

inline void require_connected(const WeightedGraph& g, const std::string& context) {
  const Components c = is_connected(g);
  if (!c.connected()) throw DisconnectedGraph(context + ": graph is not connected", c.count);
}

/// Maximum-weight spanning tree (Kruskal). Equal weights are taken in
/// lexicographic (s, t) order.
inline WeightedGraph maximum_spanning_tree(const WeightedGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<Edge> order(g.edges().begin(), g.edges().end());
  // edges() is already (s, t)-sorted; a stable sort on weight keeps that order for ties.
  std::stable_sort(order.begin(), order.end(),
                   [](const Edge& a, const Edge& b) { return a.w > b.w; });
  DisjointSets sets(n);
  std::vector<Edge> tree;
  tree.reserve(n > 0 ? n - 1 : 0);
  for (const Edge& e : order) {
    if (sets.unite(e.s, e.t)) {
      tree.push_back(e);
      if (tree.size() + 1 == n) break;
    }
  }
  if (n > 0 && tree.size() + 1 != n) {
    throw DisconnectedGraph("maximum_spanning_tree: input is not connected", is_connected(g).count);
  }
  return WeightedGraph(n, tree);
}

}  // namespace sgl

#endif  // SGL_GRAPH_HPP
