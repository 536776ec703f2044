#ifndef BNN_NETWORK_DATASET_HPP
#define BNN_NETWORK_DATASET_HPP

#include <string>
#include <vector>

#include "bnn/numerics/types.hpp"

namespace bnn {

/// Affine standardization fitted on one split: z = (x - mean) / sd.
struct Normalization {
  std::vector<std::string> feature_names;
  std::string target_name;
  Vector feature_mean;
  Vector feature_sd;
  double target_mean = 0.0;
  double target_sd = 1.0;

  static Normalization identity(std::size_t p) {
    Normalization n;
    n.feature_mean = Vector::Zero(static_cast<Eigen::Index>(p));
    n.feature_sd = Vector::Ones(static_cast<Eigen::Index>(p));
    return n;
  }

  double denormalize_target(double z) const { return target_mean + target_sd * z; }
  double normalize_target(double y) const { return (y - target_mean) / target_sd; }
};

/// Regression data: X is n x p (one row per observation).
struct Dataset {
  Matrix X;
  Vector y;
  Normalization normalization;

  std::size_t size() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(X.cols()); }
  bool empty() const noexcept { return y.size() == 0; }

  /// Rows [begin, begin + count).
  Dataset rows(std::size_t begin, std::size_t count) const {
    Dataset out;
    out.X = X.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
    out.y = y.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
    out.normalization = normalization;
    return out;
  }
};

}  // namespace bnn

#endif  // BNN_NETWORK_DATASET_HPP
