#ifndef BNN_NUMERICS_TYPES_HPP
#define BNN_NUMERICS_TYPES_HPP

#include <Eigen/Dense>

namespace bnn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace bnn

#endif  // BNN_NUMERICS_TYPES_HPP
