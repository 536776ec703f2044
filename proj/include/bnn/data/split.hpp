#ifndef BNN_DATA_SPLIT_HPP
#define BNN_DATA_SPLIT_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "bnn/data/csv.hpp"
#include "bnn/network/dataset.hpp"
#include "bnn/numerics/rng.hpp"

namespace bnn {

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::size_t max_rows = 0;  // 0 keeps every row; otherwise subsample first

  std::uint64_t split_seed() const noexcept { return hash_keys({seed, replicate}); }

  void validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw Error(ErrorKind::invalid_parameter, "test_fraction must lie in (0, 1)");
    }
  }
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_index;  // rows of the source table
  std::vector<std::size_t> test_index;
};

/// Mean and population sd (divisor n) of each column of A.
inline std::pair<Vector, Vector> column_moments(const Matrix& A) {
  const Vector mean = A.colwise().mean();
  Vector sd(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    sd[j] = std::sqrt((A.col(j).array() - mean[j]).square().mean());
  }
  return {mean, sd};
}

/// Seeded permutation split; standardization fitted on the train rows and
/// applied to both parts.
inline SplitResult normalize_split(const Matrix& X, const Vector& y, const SplitSpec& spec,
                                   const std::vector<std::string>& feature_names = {},
                                   const std::string& target_name = "y") {
  spec.validate();
  const auto n_all = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(y.size()) != n_all) throw Error(ErrorKind::dimension, "X and y row counts differ");
  if (n_all < 10) throw Error(ErrorKind::validation, "need at least 10 rows to split, got " + std::to_string(n_all));

  std::vector<std::size_t> perm(n_all);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng(spec.split_seed(), 0);
  rng.shuffle(perm);
  if (spec.max_rows > 0 && spec.max_rows < n_all) perm.resize(spec.max_rows);
  const std::size_t n = perm.size();
  std::size_t n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 2);

  SplitResult out;
  out.test_index.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_index.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());

  auto gather = [&](const std::vector<std::size_t>& idx, Matrix& Xo, Vector& yo) {
    Xo.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    yo.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Xo.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
      yo[static_cast<Eigen::Index>(i)] = y[static_cast<Eigen::Index>(idx[i])];
    }
  };
  Matrix Xtr, Xte;
  Vector ytr, yte;
  gather(out.train_index, Xtr, ytr);
  gather(out.test_index, Xte, yte);

  Normalization norm;
  norm.feature_names = feature_names;
  if (norm.feature_names.empty()) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) norm.feature_names.push_back("x" + std::to_string(j));
  }
  norm.target_name = target_name;
  std::tie(norm.feature_mean, norm.feature_sd) = column_moments(Xtr);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (!(norm.feature_sd[j] > 0.0)) {
      throw Error(ErrorKind::validation, "column '" + norm.feature_names[static_cast<std::size_t>(j)] +
                                             "' has zero variance in the training split");
    }
  }
  norm.target_mean = ytr.mean();
  norm.target_sd = std::sqrt((ytr.array() - norm.target_mean).square().mean());
  if (!(norm.target_sd > 0.0)) {
    throw Error(ErrorKind::validation, "column '" + target_name + "' has zero variance in the training split");
  }

  auto apply = [&](Matrix& Xo, Vector& yo, Dataset& d) {
    d.X = ((Xo.rowwise() - norm.feature_mean.transpose()).array().rowwise() /
           norm.feature_sd.transpose().array())
              .matrix();
    d.y = ((yo.array() - norm.target_mean) / norm.target_sd).matrix();
    d.normalization = norm;
  };
  apply(Xtr, ytr, out.train);
  apply(Xte, yte, out.test);
  return out;
}

inline SplitResult normalize_split(const RawTable& table, const SplitSpec& spec) {
  return normalize_split(table.features(), table.targets(), spec, table.feature_names(),
                         table.columns[table.target]);
}

}  // namespace bnn

#endif  // BNN_DATA_SPLIT_HPP
