#pragma once

#include <Eigen/Dense>

namespace gplsiam {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace gplsiam
