#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace sgslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using MatX = Eigen::MatrixXd;
using Quat = Eigen::Quaterniond;

enum class ErrorCode {
  kBehindCamera,
  kInvalidDepth,
  kDegenerateRotation,
  kFrameMismatch,
  kNonSimplex,
  kDomainViolation,
  kEmptyInput,
  kOutOfBounds,
  kNonMonotoneTime,
  kEstimatorDegenerate,
  kParseError,
  kSceneInvalid,
  kIoError,
};

/// Error type carried by all throwing operations in the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sgslam
