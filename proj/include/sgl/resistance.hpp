#ifndef SGL_RESISTANCE_HPP
#define SGL_RESISTANCE_HPP

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/laplacian_solver.hpp"
#include "sgl/parallel.hpp"

namespace sgl {

struct ResistanceOptions {
  /// Graphs with at most this many nodes use the dense pseudoinverse.
  std::size_t dense_threshold = 2000;
  SolveOptions solve{};
};

/// Answers effective-resistance queries e_st^T L^+ e_st on one graph.
///
/// Dense backend: L^+ + J/N = (L + J/N)^{-1}, and the J/N term cancels
/// against e_st. Iterative backend: one Laplacian solve per query.
class ResistanceCalculator {
 public:
  explicit ResistanceCalculator(const WeightedGraph& g, ResistanceOptions options = {})
      : n_(g.node_count()) {
    if (n_ < 2) throw InvalidArgument("effective_resistance needs at least 2 nodes");
    require_connected(g, "effective_resistance");
    if (n_ <= options.dense_threshold) {
      const auto n = static_cast<Eigen::Index>(n_);
      Eigen::MatrixXd shifted = LaplacianOperator(g).to_dense();
      shifted.array() += 1.0 / static_cast<double>(n_);
      dense_ = shifted.llt().solve(Eigen::MatrixXd::Identity(n, n));
    } else {
      solver_ = std::make_unique<LaplacianSolver>(g, options.solve);
    }
  }

  bool dense() const noexcept { return dense_.size() > 0; }

  double operator()(NodeId s, NodeId t) const {
    check(s, t);
    if (s == t) return 0.0;
    const auto a = static_cast<Eigen::Index>(s);
    const auto b = static_cast<Eigen::Index>(t);
    if (dense()) return dense_(a, a) + dense_(b, b) - 2.0 * dense_(a, b);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    rhs[a] = 1.0;
    rhs[b] = -1.0;
    const Eigen::VectorXd x = solver_->solve(rhs);
    return x[a] - x[b];
  }

  std::vector<double> operator()(std::span<const NodePair> pairs) const {
    std::vector<double> out(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) { out[i] = (*this)(pairs[i].s, pairs[i].t); });
    return out;
  }

 private:
  void check(NodeId s, NodeId t) const {
    if (s >= n_ || t >= n_) {
      throw InvalidArgument("effective_resistance: node index out of range");
    }
  }

  std::size_t n_;
  Eigen::MatrixXd dense_;
  std::unique_ptr<LaplacianSolver> solver_;
};

/// Effective resistance of each pair; pairs must have s != t.
inline std::vector<double> effective_resistance(const WeightedGraph& g,
                                                std::span<const NodePair> pairs,
                                                ResistanceOptions options = {}) {
  for (const NodePair& p : pairs) {
    if (p.s == p.t) throw InvalidArgument("effective_resistance: pair with s == t");
  }
  return ResistanceCalculator(g, options)(pairs);
}

}  // namespace sgl

#endif  // SGL_RESISTANCE_HPP
