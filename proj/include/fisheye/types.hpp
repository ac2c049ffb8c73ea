#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fisheye {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

/// Input lies outside the valid domain of the requested mapping
/// (point behind the model's horizon, image point outside I2, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Input is singular for the requested operation (zero vector, parallel rays).
class DegenerateInput : public std::runtime_error {
 public:
  explicit DegenerateInput(const std::string& what) : std::runtime_error(what) {}
};

/// Container sizes do not match what the operation requires.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solve hit its iteration cap without meeting tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Problem data is structurally unsolvable (too few points, rank deficiency).
class DegenerateData : public std::runtime_error {
 public:
  explicit DegenerateData(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fisheye
