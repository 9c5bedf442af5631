#ifndef SGL_GENERATORS_HPP
#define SGL_GENERATORS_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/rng.hpp"

namespace sgl {

/// rows x cols 2-D mesh; node (i, j) has index i * cols + j.
inline WeightedGraph grid_graph(std::size_t rows, std::size_t cols, double weight = 1.0) {
  if (rows * cols < 2) throw InvalidArgument("grid_graph: need at least 2 nodes");
  WeightedGraph g(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t v = i * cols + j;
      if (j + 1 < cols) g.add_edge(v, v + 1, weight);
      if (i + 1 < rows) g.add_edge(v, v + cols, weight);
    }
  }
  return g;
}

/// Random connected graph: a random recursive tree plus distinct random
/// extra edges, weights uniform in [w_min, w_max].
inline WeightedGraph random_connected_graph(std::size_t n, std::size_t edge_count,
                                            std::uint64_t seed, double w_min = 0.5,
                                            double w_max = 2.0) {
  if (n < 2) throw InvalidArgument("random_connected_graph: need at least 2 nodes");
  const std::size_t max_edges = n * (n - 1) / 2;
  if (edge_count < n - 1 || edge_count > max_edges) {
    throw InvalidArgument("random_connected_graph: edge count " + std::to_string(edge_count) +
                          " outside [N-1, N(N-1)/2]");
  }
  Rng rng(seed, Stream::generator);
  auto weight = [&] { return w_min + (w_max - w_min) * rng.uniform(); };
  WeightedGraph g(n);
  for (std::size_t v = 1; v < n; ++v) g.add_edge(v, static_cast<NodeId>(rng.below(v)), weight());
  while (g.edge_count() < edge_count) {
    const auto a = static_cast<NodeId>(rng.below(n));
    const auto b = static_cast<NodeId>(rng.below(n));
    if (a == b || g.has_edge(a, b)) continue;
    g.add_edge(a, b, weight());
  }
  return g;
}

}  // namespace sgl

#endif  // SGL_GENERATORS_HPP
