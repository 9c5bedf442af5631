#ifndef SGL_LAPLACIAN_SOLVER_HPP
#define SGL_LAPLACIAN_SOLVER_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"

namespace sgl {

enum class Preconditioner {
  automatic,      // spanning tree for near-tree graphs, Jacobi otherwise
  jacobi,
  spanning_tree,
};

struct SolveOptions {
  double tolerance = 1e-10;       // relative residual ||Lx - b|| / ||b||
  std::size_t max_iterations = 0;  // 0: 10 * N + 100
  Preconditioner preconditioner = Preconditioner::automatic;
};

/// Removes the mean of v, projecting it onto the complement of the all-ones vector.
inline void project_out_constant(Eigen::Ref<Eigen::VectorXd> v) {
  if (v.size() > 0) v.array() -= v.mean();
}

namespace detail {

/// Exact solve with the Laplacian of a spanning tree, O(N).
class TreeSolver {
 public:
  explicit TreeSolver(const LaplacianOperator& L) : n_(L.node_count()) {
    const WeightedGraph tree = maximum_spanning_tree(WeightedGraph(n_, L.edges()));
    std::vector<std::vector<std::pair<NodeId, double>>> adj(n_);
    for (const Edge& e : tree.edges()) {
      adj[e.s].emplace_back(e.t, e.w);
      adj[e.t].emplace_back(e.s, e.w);
    }
    order_.reserve(n_);
    parent_.assign(n_, n_);
    parent_weight_.assign(n_, 0.0);
    std::vector<bool> seen(n_, false);
    order_.push_back(0);
    seen[0] = true;
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const NodeId v = order_[head];
      for (auto [u, w] : adj[v]) {
        if (seen[u]) continue;
        seen[u] = true;
        parent_[u] = v;
        parent_weight_[u] = w;
        order_.push_back(u);
      }
    }
  }

  /// z = L_T^+ r for r orthogonal to the all-ones vector.
  void solve(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
    Eigen::VectorXd flow = r;
    project_out_constant(flow);
    for (std::size_t k = n_; k-- > 1;) {
      const NodeId v = order_[k];
      flow[static_cast<Eigen::Index>(parent_[v])] += flow[static_cast<Eigen::Index>(v)];
    }
    z.resize(static_cast<Eigen::Index>(n_));
    z[static_cast<Eigen::Index>(order_[0])] = 0.0;
    for (std::size_t k = 1; k < n_; ++k) {
      const NodeId v = order_[k];
      z[static_cast<Eigen::Index>(v)] = z[static_cast<Eigen::Index>(parent_[v])] +
                                        flow[static_cast<Eigen::Index>(v)] / parent_weight_[v];
    }
    project_out_constant(z);
  }

 private:
  std::size_t n_;
  std::vector<NodeId> order_;
  std::vector<NodeId> parent_;
  std::vector<double> parent_weight_;
};

}  // namespace detail

/// Preconditioned conjugate gradient restricted to the complement of the
/// all-ones vector. Uses only products with L plus the preconditioner.
class LaplacianSolver {
 public:
  explicit LaplacianSolver(const WeightedGraph& g, SolveOptions options = {})
      : LaplacianSolver(LaplacianOperator(g), options) {}

  LaplacianSolver(LaplacianOperator L, SolveOptions options = {})
      : L_(std::move(L)), options_(options) {
    const std::size_t n = L_.node_count();
    if (n == 0) throw InvalidArgument("solve_laplacian: empty graph");
    const Components c = connected_components(n, L_.edges());
    if (!c.connected()) throw DisconnectedGraph("solve_laplacian", c.count);
    Preconditioner kind = options_.preconditioner;
    if (kind == Preconditioner::automatic) {
      const std::size_t off_tree = L_.edges().size() - (n - 1);
      kind = 4 * off_tree <= n ? Preconditioner::spanning_tree : Preconditioner::jacobi;
    }
    if (kind == Preconditioner::spanning_tree && n > 1) {
      tree_ = std::make_unique<detail::TreeSolver>(L_);
    } else {
      inverse_degree_ = L_.degree().cwiseInverse();
    }
    if (options_.max_iterations == 0) options_.max_iterations = 10 * n + 100;
  }

  const LaplacianOperator& laplacian() const noexcept { return L_; }

  /// Returns x with L x = b and x orthogonal to the all-ones vector.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& b_in) const {
    const auto n = static_cast<Eigen::Index>(L_.node_count());
    if (b_in.size() != n) {
      throw DimensionMismatch("solve_laplacian: right-hand side has length " +
                              std::to_string(b_in.size()) + ", expected " + std::to_string(n));
    }
    const double b_norm_raw = b_in.norm();
    if (std::abs(b_in.sum()) > 1e-8 * std::sqrt(static_cast<double>(n)) * b_norm_raw) {
      throw InvalidArgument(
          "solve_laplacian: right-hand side is not orthogonal to the all-ones vector");
    }
    Eigen::VectorXd b = b_in;
    project_out_constant(b);
    const double b_norm = b.norm();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (b_norm == 0.0) return x;

    const double target = options_.tolerance * b_norm;
    Eigen::VectorXd r = b;
    Eigen::VectorXd z(n), p(n), q(n);
    double best = r.norm();
    std::size_t iterations = 0;
    // A restart recomputes the true residual, guarding against drift in the recurrence.
    for (int restart = 0; restart < 4; ++restart) {
      precondition(r, z);
      p = z;
      double rz = r.dot(z);
      while (iterations < options_.max_iterations) {
        L_.apply(p, q);
        const double pq = p.dot(q);
        if (!(pq > 0.0)) break;
        const double alpha = rz / pq;
        x.noalias() += alpha * p;
        r.noalias() -= alpha * q;
        ++iterations;
        const double rn = r.norm();
        best = std::min(best, rn);
        if (rn <= target) break;
        precondition(r, z);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
      }
      project_out_constant(x);
      L_.apply(x, q);
      r = b - q;
      const double true_residual = r.norm();
      best = std::min(best, true_residual);
      if (true_residual <= target) return x;
      if (iterations >= options_.max_iterations) break;
    }
    throw ConvergenceError("solve_laplacian did not converge", best / b_norm, iterations);
  }

 private:
  void precondition(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
    if (tree_) {
      tree_->solve(r, z);
    } else {
      z = r.cwiseProduct(inverse_degree_);
      project_out_constant(z);
    }
  }

  LaplacianOperator L_;
  SolveOptions options_;
  std::unique_ptr<detail::TreeSolver> tree_;
  Eigen::VectorXd inverse_degree_;
};

inline Eigen::VectorXd solve_laplacian(const LaplacianOperator& L,
                                       const Eigen::Ref<const Eigen::VectorXd>& b,
                                       SolveOptions options = {}) {
  return LaplacianSolver(L, options).solve(b);
}

inline Eigen::VectorXd solve_laplacian(const WeightedGraph& g,
                                       const Eigen::Ref<const Eigen::VectorXd>& b,
                                       SolveOptions options = {}) {
  return LaplacianSolver(g, options).solve(b);
}

/// Direct pseudoinverse application through a sparse Cholesky factorization
/// of L with the last node grounded.
class GroundedFactorization {
 public:
  explicit GroundedFactorization(const LaplacianOperator& L) : n_(L.node_count()) {
    const Components c = connected_components(n_, L.edges());
    if (!c.connected()) throw DisconnectedGraph("Laplacian factorization", c.count);
    if (n_ < 2) return;
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n_ + 2 * L.edges().size());
    for (Eigen::Index i = 0; i < m; ++i) triplets.emplace_back(i, i, L.degree()[i]);
    for (const Edge& e : L.edges()) {
      const auto s = static_cast<Eigen::Index>(e.s);
      const auto t = static_cast<Eigen::Index>(e.t);
      if (s < m && t < m) {
        triplets.emplace_back(s, t, -e.w);
        triplets.emplace_back(t, s, -e.w);
      }
    }
    Eigen::SparseMatrix<double> grounded(m, m);
    grounded.setFromTriplets(triplets.begin(), triplets.end());
    factor_.compute(grounded);
    if (factor_.info() != Eigen::Success) {
      throw Error("Laplacian factorization failed");
    }
  }

  /// x = L^+ b after projecting b onto the complement of the all-ones vector.
  Eigen::VectorXd apply_pseudoinverse(const Eigen::Ref<const Eigen::VectorXd>& b) const {
    Eigen::VectorXd rhs = b;
    project_out_constant(rhs);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_));
    if (n_ < 2) return x;
    const auto m = static_cast<Eigen::Index>(n_ - 1);
    x.head(m) = factor_.solve(rhs.head(m));
    project_out_constant(x);
    return x;
  }

 private:
  std::size_t n_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
};

}  // namespace sgl

#endif  // SGL_LAPLACIAN_SOLVER_HPP
