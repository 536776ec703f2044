#ifndef BNN_NUMERICS_OLS_HPP
#define BNN_NUMERICS_OLS_HPP

#include <cmath>
#include <string>

#include "bnn/error.hpp"
#include "bnn/numerics/types.hpp"

namespace bnn {

struct OlsFit {
  /// Intercept first, then one coefficient per design column.
  Vector coefficients;
  /// Maximum-likelihood residual standard deviation sqrt(RSS / n).
  double residual_sd = 0.0;

  double predict(const Eigen::Ref<const Vector>& x) const {
    return coefficients[0] + coefficients.tail(coefficients.size() - 1).dot(x);
  }

  Vector predict(const Matrix& X) const {
    return (X * coefficients.tail(coefficients.size() - 1)).array() + coefficients[0];
  }
};

namespace detail {

// Pivots of the equilibrated normal matrix below this are treated as
// linear dependence.
inline constexpr double kOlsPivotTolerance = 1e-9;
inline constexpr double kOlsJitter = 1e-10;

inline bool cholesky_in_place(Matrix& a, int& weak_pivots) {
  const Eigen::Index n = a.rows();
  weak_pivots = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - a.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) return false;
    if (d < kOlsPivotTolerance) ++weak_pivots;
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      a(i, j) = (a(i, j) - a.row(i).head(j).dot(a.row(j).head(j))) / l;
    }
  }
  return true;
}

}  // namespace detail

/// Intercept-augmented least squares via the normal equations.
///
/// The normal matrix is equilibrated to unit diagonal and factored by
/// Cholesky. A failed factorization is retried once with a 1e-10 diagonal
/// jitter; weak pivots after that mean the design is rank deficient.
inline OlsFit ols_fit(const Matrix& X, const Vector& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) {
    throw Error(ErrorKind::dimension, "ols_fit: X has " + std::to_string(n) +
                                          " rows but y has " + std::to_string(y.size()));
  }
  if (n <= p + 1) {
    throw Error(ErrorKind::dimension, "ols_fit: need n > p + 1 observations (n=" +
                                          std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  Matrix design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = X;

  Matrix gram = design.transpose() * design;
  Vector rhs = design.transpose() * y;
  Vector scale = gram.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j <= p; ++j) {
    if (!(scale[j] > 0.0)) {
      throw Error(ErrorKind::singular_matrix,
                  "ols_fit: design is rank deficient (1 of " + std::to_string(p + 1) +
                      " columns is identically zero)");
    }
  }
  Vector inv_scale = scale.cwiseInverse();
  Matrix normal = inv_scale.asDiagonal() * gram * inv_scale.asDiagonal();

  Matrix factor = normal;
  int weak = 0;
  bool ok = detail::cholesky_in_place(factor, weak);
  if (!ok) {
    factor = normal;
    factor.diagonal().array() += detail::kOlsJitter;
    ok = detail::cholesky_in_place(factor, weak);
  }
  if (!ok || weak > 0) {
    const int dependent = ok ? weak : 1;
    throw Error(ErrorKind::singular_matrix,
                "ols_fit: design is rank deficient (" + std::to_string(dependent) + " of " +
                    std::to_string(p + 1) + " intercept-augmented columns are linearly dependent)");
  }
  const Matrix& cf = factor;
  Vector z = cf.triangularView<Eigen::Lower>().solve(inv_scale.cwiseProduct(rhs));
  Vector b = cf.transpose().triangularView<Eigen::Upper>().solve(z);

  OlsFit fit;
  fit.coefficients = inv_scale.cwiseProduct(b);
  const Vector residual = y - design * fit.coefficients;
  fit.residual_sd = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  return fit;
}

}  // namespace bnn

#endif  // BNN_NUMERICS_OLS_HPP
