#pragma once

#include <Eigen/Dense>

namespace polyboot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// K structural parameters.
using ParamVector = Eigen::VectorXd;

}  // namespace polyboot
