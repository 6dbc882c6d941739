#ifndef DQFLEET_TYPES_HPP
#define DQFLEET_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dqf {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using VecX = Eigen::VectorXd;

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using MatX = Eigen::MatrixXd;

/// Raised when an error state leaves the domain where the scalar part of a
/// unit (dual) quaternion can be recovered, i.e. the filter has diverged.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// 3x3 skew-symmetric matrix such that skew3(a) * b == a.cross(b).
inline Mat3 skew3(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
      -a.y(), a.x(), 0.0;
  return m;
}

}  // namespace dqf

#endif  // DQFLEET_TYPES_HPP
