#pragma once

// Per-snapshot embeddings: the singular spectrum of the graph Laplacian
// (dense or truncated Krylov backend) and the activity vector, i.e. the
// dominant eigenvector of the adjacency matrix.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lad/error.hpp"
#include "lad/graph.hpp"
#include "lad/lanczos.hpp"

namespace lad {

/// Embedding of one snapshot. For Laplacian spectra the values are the
/// singular values in descending order, zero-padded to a fixed length.
struct SignatureVector {
  Eigen::VectorXd values;
  std::size_t time_index = 0;

  std::size_t rank() const noexcept { return static_cast<std::size_t>(values.size()); }
};

class EmbeddingKind {
 public:
  enum class Type { laplacian_spectrum, activity_vector };

  /// Entire Laplacian singular spectrum, one value per id.
  static EmbeddingKind full_spectrum() { return EmbeddingKind(Type::laplacian_spectrum, std::nullopt); }

  static EmbeddingKind truncated_spectrum(std::size_t k) {
    if (k < 1) throw ConfigurationError("spectrum rank must be at least 1");
    return EmbeddingKind(Type::laplacian_spectrum, k);
  }

  static EmbeddingKind activity() { return EmbeddingKind(Type::activity_vector, std::nullopt); }

  Type type() const noexcept { return type_; }
  std::optional<std::size_t> rank() const noexcept { return rank_; }

  std::string name() const {
    if (type_ == Type::activity_vector) return "activity";
    return rank_ ? "laplacian(k=" + std::to_string(*rank_) + ")" : "laplacian(full)";
  }

  friend bool operator==(const EmbeddingKind&, const EmbeddingKind&) = default;

 private:
  EmbeddingKind(Type t, std::optional<std::size_t> k) : type_(t), rank_(k) {}

  Type type_;
  std::optional<std::size_t> rank_;
};

namespace detail {

inline void require_finite(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw NumericalInputError("matrix has non-finite entries");
}

inline void require_finite(const Eigen::SparseMatrix<double>& m) {
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      if (!std::isfinite(it.value())) throw NumericalInputError("matrix has non-finite entries");
}

inline Eigen::VectorXd sorted_descending(Eigen::VectorXd v) {
  std::sort(v.data(), v.data() + v.size(), [](double a, double b) { return a > b; });
  return v;
}

/// Symmetric with nonnegative, weakly dominant diagonal, hence PSD by
/// Gershgorin. Graph Laplacians of undirected snapshots always qualify.
inline bool is_symmetric_psd_by_dominance(const Eigen::SparseMatrix<double>& m) {
  const Eigen::SparseMatrix<double> t = m.transpose();
  if ((m - t).norm() != 0.0) return false;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m.rows());
  Eigen::VectorXd off = Eigen::VectorXd::Zero(m.rows());
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      if (it.row() == it.col()) {
        diag(it.row()) += it.value();
      } else {
        off(it.row()) += std::abs(it.value());
      }
    }
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    // small slack for rounding in weight sums
    if (diag(i) < 0.0 || diag(i) + 1e-12 * std::max(1.0, off(i)) < off(i)) return false;
  }
  return true;
}

/// Sign fix: nonnegative sum, ties broken by first nonzero coordinate positive.
inline void perron_orient(Eigen::VectorXd& v) {
  const double sum = v.sum();
  const double tol = 1e-12 * std::max(1.0, v.cwiseAbs().sum());
  bool flip = sum < -tol;
  if (std::abs(sum) <= tol) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::abs(v(i)) > tol) {
        flip = v(i) < 0.0;
        break;
      }
    }
  }
  if (flip) v = -v;
}

}  // namespace detail

/// All singular values of a square matrix, descending. Symmetric inputs go
/// through the symmetric eigensolver (singular values = |eigenvalues|).
inline SignatureVector full_spectrum(const Eigen::MatrixXd& l) {
  if (l.rows() != l.cols()) throw DimensionError("spectrum requires a square matrix");
  detail::require_finite(l);
  SignatureVector out;
  if (l.size() == 0) return out;
  if (l == l.transpose()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
    out.values = detail::sorted_descending(es.eigenvalues().cwiseAbs());
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(l);
    out.values = detail::sorted_descending(svd.singularValues());
  }
  return out;
}

inline SignatureVector full_spectrum(const Eigen::SparseMatrix<double>& l) {
  return full_spectrum(Eigen::MatrixXd(l));
}

/// Top-k singular values via block Lanczos on the sparse matrix, zero-padded
/// to length k when the matrix is smaller than k.
///
/// PSD symmetric matrices are iterated directly; anything else through the
/// symmetric embedding [[0, L], [L^T, 0]] whose top eigenvalues are the
/// singular values of L.
inline SignatureVector truncated_spectrum(const Eigen::SparseMatrix<double>& l, std::size_t k,
                                          const LanczosOptions& opt = {}) {
  if (k < 1) throw ConfigurationError("spectrum rank must be at least 1");
  if (l.rows() != l.cols()) throw DimensionError("spectrum requires a square matrix");
  detail::require_finite(l);

  SignatureVector out;
  out.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  const Eigen::Index n = l.rows();
  if (n == 0) return out;
  const Eigen::Index kk = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), n);

  Eigen::VectorXd top;
  if (detail::is_symmetric_psd_by_dominance(l)) {
    auto apply = [&l](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return l * x; };
    top = block_lanczos(apply, n, kk, opt).values;
  } else {
    const Eigen::SparseMatrix<double> lt = l.transpose();
    auto apply = [&l, &lt, n](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
      Eigen::MatrixXd y(2 * n, x.cols());
      y.topRows(n) = l * x.bottomRows(n);
      y.bottomRows(n) = lt * x.topRows(n);
      return y;
    };
    top = block_lanczos(apply, 2 * n, kk, opt).values;
  }
  out.values.head(kk) = detail::sorted_descending(top.cwiseMax(0.0));
  return out;
}

struct PowerIterationOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 200000;
};

/// Dominant eigenvector of a nonnegative adjacency matrix, unit 2-norm and
/// Perron-oriented. The zero matrix yields the uniform unit vector.
///
/// Iterates on A + sI with s the largest row sum, which bounds the spectral
/// radius, so the Perron root is the unique eigenvalue of largest modulus.
inline Eigen::VectorXd activity_vector(const Eigen::SparseMatrix<double>& a, std::size_t n,
                                       const PowerIterationOptions& opt = {}) {
  if (a.rows() != static_cast<Eigen::Index>(n) || a.cols() != static_cast<Eigen::Index>(n)) {
    throw DimensionError("adjacency dimension does not match n");
  }
  detail::require_finite(a);
  if (n == 0) return {};
  const auto dim = static_cast<Eigen::Index>(n);

  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it) {
      if (it.value() < 0.0) throw ValidationError("activity vector needs a nonnegative matrix");
      row_sums(it.row()) += it.value();
    }
  }
  const double shift = row_sums.maxCoeff();
  Eigen::VectorXd x = Eigen::VectorXd::Constant(dim, 1.0 / std::sqrt(static_cast<double>(n)));
  if (shift == 0.0) return x;

  for (std::size_t iter = 1; iter <= opt.max_iterations; ++iter) {
    Eigen::VectorXd ax = a * x;
    const double mu = x.dot(ax);
    const double resid = (ax - mu * x).norm();
    Eigen::VectorXd y = ax + shift * x;
    y /= y.norm();
    x = std::move(y);
    if (resid <= opt.tolerance * shift) {
      detail::perron_orient(x);
      return x;
    }
  }
  throw ConvergenceError("activity vector power iteration did not converge", opt.max_iterations);
}

struct EmbedOptions {
  /// Laplacians up to this dimension use the dense solver even when a rank is requested.
  std::size_t dense_threshold = 500;
  /// 0 uses std::thread::hardware_concurrency().
  std::size_t threads = 0;
  LanczosOptions lanczos{};
  PowerIterationOptions power{};
};

/// Embeds a single snapshot on an id space of size n.
inline SignatureVector embed_snapshot(const Snapshot& s, std::size_t n, const EmbeddingKind& kind,
                                      const EmbedOptions& opt = {}) {
  SignatureVector out;
  if (kind.type() == EmbeddingKind::Type::activity_vector) {
    out.values = activity_vector(adjacency(s, n), n, opt.power);
  } else if (!kind.rank()) {
    out = full_spectrum(laplacian(s, n));
  } else if (n <= opt.dense_threshold) {
    const auto k = static_cast<Eigen::Index>(*kind.rank());
    const auto full = full_spectrum(laplacian(s, n));
    out.values = Eigen::VectorXd::Zero(k);
    const Eigen::Index m = std::min(k, full.values.size());
    out.values.head(m) = full.values.head(m);
  } else {
    out = truncated_spectrum(laplacian(s, n), *kind.rank(), opt.lanczos);
  }
  out.time_index = s.time_index();
  return out;
}

namespace detail {

[[noreturn]] inline void rethrow_annotated(std::exception_ptr ep, std::size_t t) {
  const std::string where = "snapshot " + std::to_string(t) + ": ";
  try {
    std::rethrow_exception(ep);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(where + e.what(), e.iterations());
  } catch (const NumericalInputError& e) {
    throw NumericalInputError(where + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  }
}

}  // namespace detail

/// One embedding per snapshot, in time order, all of equal length.
/// Snapshots are embedded independently and may be processed in parallel.
inline std::vector<SignatureVector> embed_sequence(const TemporalGraph& g, const EmbeddingKind& kind,
                                                   const EmbedOptions& opt = {}) {
  const std::size_t steps = g.size();
  const std::size_t n = g.global_node_count();
  std::vector<SignatureVector> out(steps);
  std::vector<std::exception_ptr> errors(steps);

  std::size_t workers = opt.threads > 0 ? opt.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(steps, 1));

  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (std::size_t t = cursor++; t < steps; t = cursor++) {
      try {
        out[t] = embed_snapshot(g[t], n, kind, opt);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  for (std::size_t t = 0; t < steps; ++t) {
    if (errors[t]) detail::rethrow_annotated(errors[t], t);
  }
  return out;
}

/// One row per timestep (in sequence order), columns <prefix>_1 .. <prefix>_k.
inline void write_embedding_csv(std::ostream& out, const std::vector<SignatureVector>& seq,
                                const std::string& prefix = "sigma") {
  const Eigen::Index k = seq.empty() ? 0 : seq.front().values.size();
  for (Eigen::Index i = 1; i <= k; ++i) out << (i > 1 ? "," : "") << prefix << '_' << i;
  out << '\n';
  for (const auto& s : seq) {
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
      out << (i > 0 ? "," : "") << detail::format_double(s.values(i));
    out << '\n';
  }
}

}  // namespace lad
