#ifndef SGL_MEASUREMENTS_HPP
#define SGL_MEASUREMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/laplacian_solver.hpp"
#include "sgl/parallel.hpp"
#include "sgl/rng.hpp"

namespace sgl {

/// Voltage responses X (N x M, one measurement per column) and, when known,
/// the current excitations Y that produced them.
struct MeasurementSet {
  Eigen::MatrixXd X;
  std::optional<Eigen::MatrixXd> Y;
  std::uint64_t seed = 0;
  double noise_level = 0.0;

  std::size_t node_count() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t measurement_count() const { return static_cast<std::size_t>(X.cols()); }
};

/// M random current vectors: i.i.d. standard normal entries, mean removed,
/// scaled to unit 2-norm. Column j depends only on (seed, j).
inline Eigen::MatrixXd generate_currents(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("generate_currents: need at least 2 nodes");
  if (m < 1) throw InvalidArgument("generate_currents: need at least 1 measurement");
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    Rng rng(seed, Stream::currents, static_cast<std::uint64_t>(j));
    auto col = Y.col(j);
    // A draw that is exactly constant cannot be normalized; redraw.
    for (;;) {
      for (Eigen::Index i = 0; i < col.size(); ++i) col[i] = rng.normal();
      col.array() -= col.mean();
      const double norm = col.norm();
      if (norm > 0.0) {
        col /= norm;
        break;
      }
    }
  }
  return Y;
}

/// Voltages X with L(g) x_i = y_i for every column.
inline Eigen::MatrixXd simulate_voltages(const WeightedGraph& g, const Eigen::MatrixXd& Y,
                                         SolveOptions options = {}) {
  if (static_cast<std::size_t>(Y.rows()) != g.node_count()) {
    throw DimensionMismatch("simulate_voltages: Y has " + std::to_string(Y.rows()) +
                            " rows, graph has " + std::to_string(g.node_count()) + " nodes");
  }
  const LaplacianSolver solver(g, options);
  Eigen::MatrixXd X(Y.rows(), Y.cols());
  parallel_for(static_cast<std::size_t>(Y.cols()), [&](std::size_t j) {
    const auto col = static_cast<Eigen::Index>(j);
    X.col(col) = solver.solve(Y.col(col));
  });
  return X;
}

/// x~ = x + zeta * ||x|| * e per column, with e a unit-norm Gaussian direction.
inline Eigen::MatrixXd add_noise(const Eigen::MatrixXd& X, double zeta, std::uint64_t seed) {
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) {
    throw InvalidArgument("add_noise: noise level must be a nonnegative finite number");
  }
  Eigen::MatrixXd out = X;
  if (zeta == 0.0) return out;
  Eigen::VectorXd direction(X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Rng rng(seed, Stream::noise, static_cast<std::uint64_t>(j));
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index i = 0; i < direction.size(); ++i) direction[i] = rng.normal();
      norm = direction.norm();
    }
    out.col(j) += (zeta * X.col(j).norm() / norm) * direction;
  }
  return out;
}

/// Measurement count for the random-projection sketch: ceil(24 ln N / eps^2).
inline std::size_t jl_measurement_count(std::size_t n, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidArgument("jl_measurement_count: epsilon must lie in (0, 1)");
  }
  if (n < 2) throw InvalidArgument("jl_measurement_count: need at least 2 nodes");
  const double m = std::ceil(24.0 * std::log(static_cast<double>(n)) / (epsilon * epsilon));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

/// Voltages whose pairwise row distances approximate effective resistances.
///
/// Builds Y = C W^{1/2} B with C an M x |E| matrix of random +-1/sqrt(M)
/// entries and B the signed edge-node incidence matrix, then solves
/// L x_i = y_i for each row y_i of Y.
inline MeasurementSet generate_jl_measurements(const WeightedGraph& g, double epsilon,
                                               std::uint64_t seed, SolveOptions options = {}) {
  const std::size_t n = g.node_count();
  const std::size_t m = jl_measurement_count(n, epsilon);
  require_connected(g, "generate_jl_measurements");
  const double entry = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(m));
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    Rng rng(seed, Stream::jl_sketch, static_cast<std::uint64_t>(j));
    auto col = Y.col(j);
    for (const Edge& e : g.edges()) {
      const double c = (rng.next_u64() >> 63) != 0 ? entry : -entry;
      const double v = c * std::sqrt(e.w);
      col[static_cast<Eigen::Index>(e.s)] += v;
      col[static_cast<Eigen::Index>(e.t)] -= v;
    }
  }
  MeasurementSet out;
  out.X = simulate_voltages(g, Y, options);
  out.Y = std::move(Y);
  out.seed = seed;
  return out;
}

/// Random subset of rows of X.
struct SubsampledMeasurements {
  Eigen::MatrixXd X;
  std::vector<NodeId> kept;  // ascending original node indices
};

/// Keeps ceil(fraction * N) distinct rows chosen uniformly at random.
inline SubsampledMeasurements subsample_nodes(const Eigen::MatrixXd& X, double fraction,
                                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("subsample_nodes: fraction must lie in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(X.rows());
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (keep < 2) {
    throw InvalidArgument("subsample_nodes: fraction keeps " + std::to_string(keep) +
                          " node(s); at least 2 are required");
  }
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed, Stream::subsample);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  SubsampledMeasurements out;
  out.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  std::sort(out.kept.begin(), out.kept.end());
  out.X.resize(static_cast<Eigen::Index>(keep), X.cols());
  for (std::size_t i = 0; i < keep; ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(out.kept[i]));
  }
  return out;
}

}  // namespace sgl

#endif  // SGL_MEASUREMENTS_HPP
