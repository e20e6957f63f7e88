#ifndef SQFILM_TYPES_HPP
#define SQFILM_TYPES_HPP

#include <Eigen/Dense>

namespace sqfilm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

constexpr const char* kVersion = "0.1.0";

}  // namespace sqfilm

#endif  // SQFILM_TYPES_HPP
