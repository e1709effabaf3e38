#pragma once

// Block Lanczos for the largest algebraic eigenvalues of a symmetric operator.
//
// The Krylov basis is kept fully orthogonal (classical Gram-Schmidt, applied
// twice) and the Ritz values are extracted from the projected matrix
// V^T A V. A block of size > 1 lets the solver resolve eigenvalues of
// multiplicity up to the block size, which Laplacians of graphs with
// repeated substructures routinely have. Rank-deficient blocks (the Krylov
// space became invariant) are refilled with fresh deterministic vectors, so
// the iteration can always continue up to the full dimension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "lad/error.hpp"

namespace lad {

struct LanczosOptions {
  /// Columns per Krylov block; 0 picks k + 2.
  std::size_t block_size = 0;
  /// Upper bound on the basis dimension; 0 means the full operator dimension.
  std::size_t max_basis = 0;
  /// A Ritz pair is accepted when ||A y - theta y|| <= tol * |theta_max|.
  double tolerance = 1e-11;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct LanczosResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // one unit column per value
  std::size_t iterations = 0;
};

namespace detail {

/// Orthogonalizes the columns of `block` against `basis` and against each
/// other. Columns that vanish are replaced by new random directions; returns
/// the number of usable columns written to the front of `block`.
inline Eigen::Index orthonormalize_block(const Eigen::MatrixXd& basis, Eigen::Index basis_cols,
                                         Eigen::MatrixXd& block, std::mt19937_64& rng) {
  const Eigen::Index n = block.rows();
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::Index kept = 0;
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    if (basis_cols + kept >= n) break;
    Eigen::VectorXd v = block.col(j);
    for (int attempt = 0; attempt < 8; ++attempt) {
      const double before = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (basis_cols > 0) {
          const auto q = basis.leftCols(basis_cols);
          v -= q * (q.transpose() * v);
        }
        if (kept > 0) {
          const auto q = block.leftCols(kept);
          v -= q * (q.transpose() * v);
        }
      }
      const double after = v.norm();
      if (before > 0.0 && after > 1e-10 * before) {
        block.col(kept) = v / after;
        ++kept;
        break;
      }
      for (Eigen::Index i = 0; i < n; ++i) v(i) = unif(rng);
    }
  }
  return kept;
}

}  // namespace detail

/// Largest `k` eigenvalues (algebraic) of the symmetric operator `apply` of
/// dimension `n`. `apply` maps an n x b block to an n x b block.
inline LanczosResult block_lanczos(
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& apply, Eigen::Index n,
    Eigen::Index k, const LanczosOptions& opt = {}) {
  if (k < 1) throw ConfigurationError("requested eigenvalue count must be at least 1");
  if (k > n) throw DimensionError("requested more eigenvalues than the operator dimension");

  const Eigen::Index block =
      std::min<Eigen::Index>(n, opt.block_size > 0 ? static_cast<Eigen::Index>(opt.block_size) : k + 2);
  const Eigen::Index cap =
      opt.max_basis > 0 ? std::min<Eigen::Index>(n, static_cast<Eigen::Index>(opt.max_basis)) : n;

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  Eigen::MatrixXd basis(n, std::min<Eigen::Index>(cap + block, n));
  Eigen::MatrixXd image(n, basis.cols());  // A * basis
  Eigen::MatrixXd projected(basis.cols(), basis.cols());
  Eigen::Index m = 0;

  Eigen::MatrixXd next(n, block);
  for (Eigen::Index j = 0; j < next.cols(); ++j)
    for (Eigen::Index i = 0; i < n; ++i) next(i, j) = unif(rng);

  double scale = 0.0;
  std::size_t iterations = 0;
  Eigen::Index last_fresh = 0;
  while (true) {
    const Eigen::Index fresh = detail::orthonormalize_block(basis, m, next, rng);
    const bool exhausted = fresh == 0;
    if (!exhausted) {
      const Eigen::MatrixXd q = next.leftCols(fresh);
      const Eigen::MatrixXd aq = apply(q);
      ++iterations;
      basis.middleCols(m, fresh) = q;
      image.middleCols(m, fresh) = aq;
      const Eigen::MatrixXd cross = basis.leftCols(m + fresh).transpose() * aq;
      projected.block(0, m, m + fresh, fresh) = cross;
      projected.block(m, 0, fresh, m + fresh) = cross.transpose();
      m += fresh;
      last_fresh = fresh;
      scale = std::max(scale, aq.cwiseAbs().maxCoeff());
    }

    if (m >= k) {
      Eigen::MatrixXd h = projected.topLeftCorner(m, m);
      h = 0.5 * (h + h.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      // ascending order; take the top k from the back
      const Eigen::VectorXd theta = es.eigenvalues().tail(k).reverse();
      const Eigen::MatrixXd y = es.eigenvectors().rightCols(k).rowwise().reverse();
      const Eigen::MatrixXd ritz = basis.leftCols(m) * y;
      const Eigen::MatrixXd resid = image.leftCols(m) * y - ritz * theta.asDiagonal();
      const double ref = std::max({std::abs(theta(0)), std::abs(theta(k - 1)), scale * 1e-3,
                                   std::numeric_limits<double>::min()});
      bool converged = m >= n;
      if (!converged) {
        converged = true;
        for (Eigen::Index j = 0; j < k; ++j) {
          if (resid.col(j).norm() > opt.tolerance * ref) {
            converged = false;
            break;
          }
        }
      }
      if (converged) return {theta, ritz, iterations};
    }

    if (exhausted || m >= cap) {
      throw ConvergenceError("block Lanczos did not converge within a basis of " +
                                 std::to_string(m) + " vectors",
                             iterations);
    }
    next.resize(n, block);
    next.leftCols(last_fresh) = image.middleCols(m - last_fresh, last_fresh);
    for (Eigen::Index j = last_fresh; j < block; ++j)
      for (Eigen::Index i = 0; i < n; ++i) next(i, j) = unif(rng);
  }
}

}  // namespace lad
