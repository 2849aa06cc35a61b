// Shared scalar and dense-matrix typedefs. Eigen is the only math dependency.

#pragma once

#include <complex>

#include <Eigen/Dense>

namespace sagnac {

using Scalar  = double;
using Complex = std::complex<Scalar>;

using Vec2c = Eigen::Vector2cd;
using Vec4c = Eigen::Vector4cd;
using Mat2c = Eigen::Matrix2cd;
using Mat4c = Eigen::Matrix4cd;

using VecX  = Eigen::VectorXd;
using MatX  = Eigen::MatrixXd;
using VecXc = Eigen::VectorXcd;
using MatXc = Eigen::MatrixXcd;

// Vacuum speed of light, SI.
inline constexpr Scalar kSpeedOfLightMps = 299792458.0;

}  // namespace sagnac
