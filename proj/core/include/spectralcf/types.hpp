#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace spectralcf {

using Index = std::int64_t;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace spectralcf
