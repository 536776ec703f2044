#ifndef BNN_NUMERICS_PCA_HPP
#define BNN_NUMERICS_PCA_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "bnn/error.hpp"
#include "bnn/numerics/rng.hpp"
#include "bnn/numerics/types.hpp"

namespace bnn {

struct PcaResult {
  /// k x d, orthonormal rows.
  Matrix components;
  /// Share of total variance per component, non-increasing.
  Vector explained_variance_ratio;
  /// S x k projections of the centered samples.
  Matrix scores;
};

namespace detail {

/// Top-k eigenpairs of a symmetric PSD matrix by power iteration with
/// deflation (each iterate is re-orthogonalized against the converged
/// vectors). Returns eigenvectors as columns.
inline std::pair<Matrix, Vector> power_iteration_topk(const Matrix& a, Eigen::Index k,
                                                       int max_iterations = 20000,
                                                       double tolerance = 1e-13) {
  const Eigen::Index n = a.rows();
  Matrix vectors(n, k);
  Vector values(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v[i] = keyed_normal(hash_keys({static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)}));
    }
    auto deflate = [&](Vector& x) {
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index m = 0; m < j; ++m) x -= vectors.col(m).dot(x) * vectors.col(m);
      }
    };
    deflate(v);
    v.normalize();
    for (int it = 0; it < max_iterations; ++it) {
      Vector w = a * v;
      deflate(w);
      const double norm = w.norm();
      if (!(norm > 0.0)) break;  // remaining spectrum is zero; any unit vector will do
      w /= norm;
      const double change = 1.0 - std::abs(w.dot(v));
      v = w;
      if (change < tolerance) break;
    }
    deflate(v);
    v.normalize();
    vectors.col(j) = v;
    values[j] = std::max(0.0, v.dot(a * v));
  }
  return {vectors, values};
}

}  // namespace detail

/// Principal components of the rows of `samples` (S x d).
///
/// Works on the d x d covariance, or on the S x S Gram matrix when
/// d > S, and extracts the leading k eigenvectors by power iteration.
inline PcaResult pca_top_k(const Matrix& samples, Eigen::Index k) {
  const Eigen::Index s = samples.rows();
  const Eigen::Index d = samples.cols();
  if (s < 2) throw Error(ErrorKind::dimension, "pca_top_k needs at least 2 samples");
  if (k < 1 || k > std::min(s - 1, d)) {
    throw Error(ErrorKind::dimension, "pca_top_k: k=" + std::to_string(k) +
                                          " must be in [1, min(S-1, d)] = [1, " +
                                          std::to_string(std::min(s - 1, d)) + "]");
  }
  const Vector mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - mean.transpose();
  const double denom = static_cast<double>(s - 1);

  Matrix components(k, d);
  Vector variances(k);
  double total = 0.0;
  if (d <= s) {
    const Matrix cov = centered.transpose() * centered / denom;
    total = cov.trace();
    auto [vecs, vals] = detail::power_iteration_topk(cov, k);
    components = vecs.transpose();
    variances = vals;
  } else {
    const Matrix gram = centered * centered.transpose() / denom;
    total = gram.trace();
    auto [vecs, vals] = detail::power_iteration_topk(gram, k);
    for (Eigen::Index j = 0; j < k; ++j) {
      Vector c = centered.transpose() * vecs.col(j);
      const double norm = c.norm();
      if (norm > 0.0) {
        c /= norm;
      } else {
        c.setZero();
        c[j % d] = 1.0;
      }
      components.row(j) = c.transpose();
    }
    variances = vals;
    // Zero-variance directions may come back non-orthogonal; restore.
    for (Eigen::Index j = 0; j < k; ++j) {
      Vector c = components.row(j).transpose();
      for (Eigen::Index probe = 0;; ++probe) {
        for (Eigen::Index m = 0; m < j; ++m) c -= components.row(m).dot(c) * components.row(m).transpose();
        if (c.norm() > 1e-8 || probe >= d) break;
        c = Vector::Unit(d, probe);
      }
      components.row(j) = c.normalized().transpose();
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return variances[a] > variances[b]; });

  PcaResult out;
  out.components.resize(k, d);
  out.explained_variance_ratio.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.components.row(j) = components.row(src);
    out.explained_variance_ratio[j] = total > 0.0 ? std::clamp(variances[src] / total, 0.0, 1.0) : 0.0;
  }
  out.scores = centered * out.components.transpose();
  return out;
}

}  // namespace bnn

#endif  // BNN_NUMERICS_PCA_HPP
