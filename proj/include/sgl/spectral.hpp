#ifndef SGL_SPECTRAL_HPP
#define SGL_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgl/error.hpp"
#include "sgl/graph.hpp"
#include "sgl/laplacian_solver.hpp"
#include "sgl/rng.hpp"

namespace sgl {

struct EigenOptions {
  /// Residual bound ||Lu - lambda u|| <= tolerance * max(1, 2 * max degree).
  double tolerance = 1e-8;
  /// Cap on applications of the inverse operator.
  std::size_t max_iterations = 5000;
  std::uint64_t seed = 0x53474c;
  /// Optional starting subspace (N rows), e.g. eigenvectors of a nearby graph.
  Eigen::MatrixXd warm_start;
};

/// Smallest nontrivial Laplacian eigenpairs and the scaled embedding built from them.
struct SpectralBasis {
  Eigen::VectorXd eigenvalues;   // ascending, trivial zero mode excluded
  Eigen::MatrixXd eigenvectors;  // N x (r-1), unit columns orthogonal to all-ones
  double inverse_variance = 0.0;
  Eigen::MatrixXd embedding;     // column i = u_i / sqrt(lambda_i + 1/sigma^2); empty until built
  double max_residual = 0.0;
  std::size_t operator_applications = 0;

  std::size_t node_count() const { return static_cast<std::size_t>(eigenvectors.rows()); }
  std::size_t mode_count() const { return static_cast<std::size_t>(eigenvalues.size()); }

  /// Squared embedding distance ||U^T e_st||^2.
  double embedding_distance(NodeId s, NodeId t) const {
    if (embedding.size() == 0) throw InvalidArgument("embedding has not been built");
    return (embedding.row(static_cast<Eigen::Index>(s)) -
            embedding.row(static_cast<Eigen::Index>(t)))
        .squaredNorm();
  }
};

namespace detail {

/// Rayleigh-Ritz over a growing block Krylov space of L^+, restricted to
/// the complement of the all-ones vector. The block size covers eigenvalue
/// multiplicities up to its width.
class InverseSubspaceIteration {
 public:
  InverseSubspaceIteration(const LaplacianOperator& L, std::size_t count, const EigenOptions& opt)
      : L_(L),
        inverse_(L),
        n_(L.node_count()),
        count_(count),
        opt_(opt),
        tolerance_(opt.tolerance * std::max(1.0, L.spectral_bound())),
        rng_(opt.seed, Stream::eigensolver) {
    const std::size_t space = n_ - 1;
    block_ = std::min<std::size_t>({std::max<std::size_t>(count_, 2), 8, space});
    capacity_ = std::min(space, std::max(3 * count_ + 2 * block_, count_ + 40));
    const auto rows = static_cast<Eigen::Index>(n_);
    const auto cols = static_cast<Eigen::Index>(capacity_);
    V_.resize(rows, cols);
    AV_.resize(rows, cols);
    H_ = Eigen::MatrixXd::Zero(cols, cols);
  }

  SpectralBasis run() {
    std::size_t start = 0;
    Eigen::MatrixXd initial = starting_block();
    append(initial);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
      if (m_ >= count_) {
        const Check check = rayleigh_ritz();
        best = std::min(best, check.max_residual);
        if (check.max_residual <= tolerance_ || m_ == n_ - 1) {
          if (check.max_residual > tolerance_) {
            throw ConvergenceError("eigensolve_smallest: full subspace reached without convergence",
                                   check.max_residual, applications_);
          }
          return finish(check);
        }
        if (applications_ >= opt_.max_iterations) {
          throw ConvergenceError("eigensolve_smallest did not converge", best, applications_);
        }
        if (m_ >= capacity_) {
          restart(check);
          start = m_;
          append(check_residual_block(check));
          continue;
        }
      } else if (applications_ >= opt_.max_iterations) {
        throw ConvergenceError("eigensolve_smallest did not converge", best, applications_);
      }
      const std::size_t before = m_;
      append(AV_.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(m_ - start)));
      start = before;
      if (m_ == before) {
        // Invariant subspace found before the wanted pairs converged.
        append(random_block(block_));
      }
    }
  }

 private:
  struct Check {
    Eigen::VectorXd theta;      // Ritz values of L^+ (ascending)
    Eigen::MatrixXd ritz;       // coefficient vectors, m x m
    Eigen::VectorXd lambda;     // Rayleigh quotients of L, wanted pairs
    Eigen::MatrixXd vectors;    // wanted Ritz vectors, N x count
    Eigen::VectorXd residuals;  // ||L y - lambda y||
    double max_residual = 0.0;
  };

  Eigen::MatrixXd starting_block() {
    const auto rows = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd block;
    if (opt_.warm_start.size() > 0 && opt_.warm_start.rows() == rows) {
      block = opt_.warm_start;
      if (static_cast<std::size_t>(block.cols()) < block_) {
        Eigen::MatrixXd padded(rows, static_cast<Eigen::Index>(block_));
        padded << block, random_block(block_ - static_cast<std::size_t>(block.cols()));
        block = std::move(padded);
      }
      block_ = std::max<std::size_t>(block_, std::min<std::size_t>(block.cols(), n_ - 1));
      capacity_ = std::min(n_ - 1, std::max(capacity_, count_ + 2 * block_));
      if (static_cast<std::size_t>(V_.cols()) < capacity_) {
        V_.resize(rows, static_cast<Eigen::Index>(capacity_));
        AV_.resize(rows, static_cast<Eigen::Index>(capacity_));
        H_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(capacity_),
                                   static_cast<Eigen::Index>(capacity_));
      }
      return block;
    }
    return random_block(block_);
  }

  Eigen::MatrixXd random_block(std::size_t cols) {
    Eigen::MatrixXd block(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
      for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = rng_.normal();
    }
    return block;
  }

  /// Orthonormalizes the columns of W against the basis and appends the
  /// survivors, applying L^+ to each.
  void append(const Eigen::Ref<const Eigen::MatrixXd>& W) {
    for (Eigen::Index j = 0; j < W.cols() && m_ < capacity_; ++j) {
      Eigen::VectorXd w = W.col(j);
      project_out_constant(w);
      const double original = w.norm();
      if (original == 0.0) continue;
      const auto m = static_cast<Eigen::Index>(m_);
      for (int pass = 0; pass < 2; ++pass) {
        if (m > 0) w.noalias() -= V_.leftCols(m) * (V_.leftCols(m).transpose() * w);
        project_out_constant(w);
      }
      const double norm = w.norm();
      if (norm <= 1e-10 * original) continue;
      V_.col(m) = w / norm;
      AV_.col(m) = inverse_.apply_pseudoinverse(V_.col(m));
      ++applications_;
      const Eigen::VectorXd h = V_.leftCols(m + 1).transpose() * AV_.col(m);
      H_.col(m).head(m + 1) = h;
      H_.row(m).head(m + 1) = h.transpose();
      ++m_;
    }
  }

  Check rayleigh_ritz() const {
    const auto m = static_cast<Eigen::Index>(m_);
    const auto k = static_cast<Eigen::Index>(count_);
    Eigen::MatrixXd Hm = H_.topLeftCorner(m, m);
    Hm = 0.5 * (Hm + Hm.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hm);
    Check c;
    c.theta = es.eigenvalues();
    c.ritz = es.eigenvectors();
    c.lambda.resize(k);
    c.vectors.resize(static_cast<Eigen::Index>(n_), k);
    c.residuals.resize(k);
    Eigen::VectorXd Ly(static_cast<Eigen::Index>(n_));
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::VectorXd y = V_.leftCols(m) * c.ritz.col(m - 1 - j);
      project_out_constant(y);
      y.normalize();
      L_.apply(y, Ly);
      const double lambda = y.dot(Ly);
      c.lambda[j] = lambda;
      c.residuals[j] = (Ly - lambda * y).norm();
      c.vectors.col(j) = y;
    }
    c.max_residual = c.residuals.maxCoeff();
    return c;
  }

  /// Shrinks the basis to the leading Ritz vectors.
  void restart(const Check& c) {
    const auto m = static_cast<Eigen::Index>(m_);
    const auto keep = static_cast<Eigen::Index>(std::min(m_, count_ + block_));
    const Eigen::MatrixXd S = c.ritz.rightCols(keep);
    const Eigen::MatrixXd V_new = V_.leftCols(m) * S;
    const Eigen::MatrixXd AV_new = AV_.leftCols(m) * S;
    V_.leftCols(keep) = V_new;
    AV_.leftCols(keep) = AV_new;
    H_.setZero();
    H_.topLeftCorner(keep, keep) = c.theta.tail(keep).asDiagonal();
    m_ = static_cast<std::size_t>(keep);
  }

  /// Residual directions of the wanted Ritz pairs, largest residual first.
  Eigen::MatrixXd check_residual_block(const Check& c) const {
    const auto keep = static_cast<Eigen::Index>(m_);
    std::vector<Eigen::Index> order(count_);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return c.residuals[a] > c.residuals[b];
    });
    const std::size_t width = std::min(block_, count_);
    Eigen::MatrixXd block(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < width; ++i) {
      // After restart, column keep-1-j of the basis is Ritz vector j.
      const Eigen::Index col = keep - 1 - order[i];
      block.col(static_cast<Eigen::Index>(i)) = AV_.col(col) - c.theta[c.theta.size() - 1 - order[i]] * V_.col(col);
    }
    return block;
  }

  SpectralBasis finish(const Check& c) const {
    const auto k = static_cast<Eigen::Index>(count_);
    std::vector<Eigen::Index> order(count_);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return c.lambda[a] < c.lambda[b]; });
    SpectralBasis basis;
    basis.eigenvalues.resize(k);
    basis.eigenvectors.resize(static_cast<Eigen::Index>(n_), k);
    for (Eigen::Index j = 0; j < k; ++j) {
      basis.eigenvalues[j] = c.lambda[order[static_cast<std::size_t>(j)]];
      basis.eigenvectors.col(j) = c.vectors.col(order[static_cast<std::size_t>(j)]);
    }
    basis.max_residual = c.max_residual;
    basis.operator_applications = applications_;
    return basis;
  }

  const LaplacianOperator& L_;
  GroundedFactorization inverse_;
  std::size_t n_;
  std::size_t count_;
  const EigenOptions& opt_;
  double tolerance_;
  Rng rng_;
  std::size_t block_ = 1;
  std::size_t capacity_ = 1;
  std::size_t m_ = 0;
  std::size_t applications_ = 0;
  Eigen::MatrixXd V_;
  Eigen::MatrixXd AV_;
  Eigen::MatrixXd H_;
};

}  // namespace detail

/// The `count` smallest nontrivial eigenpairs of a connected graph's Laplacian.
inline SpectralBasis eigensolve_smallest(const LaplacianOperator& L, std::size_t count,
                                         const EigenOptions& options = {}) {
  const std::size_t n = L.node_count();
  if (n < 2 || count < 1 || count > n - 1) {
    throw InvalidArgument("eigensolve_smallest: count " + std::to_string(count) +
                          " outside [1, N-1] for N = " + std::to_string(n));
  }
  return detail::InverseSubspaceIteration(L, count, options).run();
}

inline SpectralBasis eigensolve_smallest(const WeightedGraph& g, std::size_t count,
                                         const EigenOptions& options = {}) {
  return eigensolve_smallest(LaplacianOperator(g), count, options);
}

/// Fills the embedding matrix U with columns u_i / sqrt(lambda_i + 1/sigma^2).
/// An infinite inverse variance gives an all-zero embedding.
inline SpectralBasis build_embedding(SpectralBasis basis, double inverse_variance) {
  if (!(inverse_variance >= 0.0)) {
    throw InvalidArgument("build_embedding: inverse variance must be nonnegative");
  }
  basis.inverse_variance = inverse_variance;
  basis.embedding = basis.eigenvectors;
  for (Eigen::Index i = 0; i < basis.embedding.cols(); ++i) {
    const double denom = basis.eigenvalues[i] + inverse_variance;
    basis.embedding.col(i) *= std::isinf(denom) ? 0.0 : 1.0 / std::sqrt(denom);
  }
  return basis;
}

/// Regularized Laplacian log-likelihood split into its two terms.
/// The l1 weight is fixed at zero and does not appear.
struct ObjectiveValue {
  double logdet_term = 0.0;
  double trace_term = 0.0;
  double total = 0.0;
  std::size_t K = 0;
};

struct ObjectiveOptions {
  /// Adds log(1/sigma^2) for the constant eigenvector when 1/sigma^2 > 0.
  bool include_trivial_mode = true;
  EigenOptions eigen{};
};

/// Squared distance between rows s and t of X.
inline double data_distance(const Eigen::MatrixXd& X, NodeId s, NodeId t) {
  return (X.row(static_cast<Eigen::Index>(s)) - X.row(static_cast<Eigen::Index>(t))).squaredNorm();
}

/// Objective F = logdet - (1/M) Tr(X^T (L + I/sigma^2) X), with the log-determinant
/// truncated to the K smallest nonzero Laplacian eigenvalues.
inline ObjectiveValue objective_value(const WeightedGraph& g, const Eigen::MatrixXd& X,
                                      double inverse_variance, std::size_t K,
                                      const ObjectiveOptions& options = {}) {
  const std::size_t n = g.node_count();
  if (static_cast<std::size_t>(X.rows()) != n) {
    throw DimensionMismatch("objective_value: X has " + std::to_string(X.rows()) +
                            " rows, graph has " + std::to_string(n) + " nodes");
  }
  if (X.cols() < 1) throw DimensionMismatch("objective_value: X has no columns");
  if (n < 2 || K < 1 || K > n - 1) {
    throw InvalidArgument("objective_value: K = " + std::to_string(K) + " out of range [1, " +
                          std::to_string(n > 0 ? n - 1 : 0) + "]");
  }
  if (!(inverse_variance >= 0.0)) {
    throw InvalidArgument("objective_value: inverse variance must be nonnegative");
  }
  const SpectralBasis basis = eigensolve_smallest(g, K, options.eigen);
  ObjectiveValue out;
  out.K = K;
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) {
    out.logdet_term += std::log(basis.eigenvalues[i] + inverse_variance);
  }
  if (inverse_variance > 0.0 && options.include_trivial_mode) {
    out.logdet_term += std::log(inverse_variance);
  }
  double trace = 0.0;
  for (const Edge& e : g.edges()) trace += e.w * data_distance(X, e.s, e.t);
  trace += inverse_variance * X.squaredNorm();
  out.trace_term = trace / static_cast<double>(X.cols());
  out.total = out.logdet_term - out.trace_term;
  return out;
}

}  // namespace sgl

#endif  // SGL_SPECTRAL_HPP
