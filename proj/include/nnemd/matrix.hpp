#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace nnemd {

using MatD = Eigen::MatrixXd;
using MatI = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using VecD = Eigen::VectorXd;

}  // namespace nnemd
