#include "dqfleet/quaternion.hpp"

#include <cmath>
#include <stdexcept>

namespace dqf {

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
  const double s = a.s() * b.s() - a.vec().dot(b.vec());
  const Vec3 v = a.s() * b.vec() + b.s() * a.vec() + a.vec().cross(b.vec());
  return Quaternion(s, v);
}

Mat4 lqm(const Quaternion& a) {
  Mat4 m;
  m(0, 0) = a.s();
  m.block<1, 3>(0, 1) = -a.vec().transpose();
  m.block<3, 1>(1, 0) = a.vec();
  m.block<3, 3>(1, 1) = a.s() * Mat3::Identity() + skew3(a.vec());
  return m;
}

Mat4 rqm(const Quaternion& a) {
  Mat4 m;
  m(0, 0) = a.s();
  m.block<1, 3>(0, 1) = -a.vec().transpose();
  m.block<3, 1>(1, 0) = a.vec();
  m.block<3, 3>(1, 1) = a.s() * Mat3::Identity() - skew3(a.vec());
  return m;
}

Mat4 cross4(const Quaternion& a) {
  Mat4 m = Mat4::Zero();
  m.block<3, 3>(1, 1) = skew3(a.vec());
  return m;
}

Mat3 rotation_matrix(const Quaternion& q) {
  const double s = q.s();
  const Vec3 v = q.vec();
  return (s * s - v.squaredNorm()) * Mat3::Identity() +
         2.0 * v * v.transpose() + 2.0 * s * skew3(v);
}

Quaternion quat_from_rotation_matrix(const Mat3& r) {
  const double tr = r.trace();
  Vec4 c;
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    c << 0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s,
        (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    c << (r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s,
        (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    c << (r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s,
        (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    c << (r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s,
        0.25 * s;
  }
  return canonical(normalized(Quaternion(c)));
}

Quaternion normalized(const Quaternion& q) {
  const double n = q.norm();
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalize zero quaternion");
  return Quaternion(Vec4(q.c / n));
}

bool is_unit(const Quaternion& q, double tol) {
  return std::abs(q.norm() - 1.0) <= tol;
}

Quaternion canonical(const Quaternion& q) {
  return q.s() < 0.0 ? -q : q;
}

double recover_scalar(const Vec3& vbar) {
  const double n2 = vbar.squaredNorm();
  if (n2 > 1.0 + 1e-12) {
    throw DivergenceError("error-state vector part exceeds unit norm");
  }
  return std::sqrt(std::max(0.0, 1.0 - n2));
}

Quaternion rot_from_axis_angle(const Vec3& n, double theta) {
  return Quaternion(std::cos(theta / 2.0), std::sin(theta / 2.0) * n);
}

Quaternion quat_scale_error(const Quaternion& q, double mu) {
  const double rad = 1.0 - mu * mu * q.vec().squaredNorm();
  if (rad < -1e-12) {
    throw std::domain_error("quaternion scaling radicand is negative");
  }
  return Quaternion(std::sqrt(std::max(0.0, rad)), mu * q.vec());
}

Quaternion quat_average(const std::vector<Quaternion>& qs) {
  if (qs.empty()) throw std::invalid_argument("quat_average of empty sequence");
  Mat3 c = Mat3::Zero();
  for (const Quaternion& q : qs) c += rotation_matrix(q);

  // Tr(A(q) C^T) = q^T K q; convention-matched Davenport K.
  Mat4 k;
  k(0, 0) = c.trace();
  const Vec3 z(c(2, 1) - c(1, 2), c(0, 2) - c(2, 0), c(1, 0) - c(0, 1));
  k.block<1, 3>(0, 1) = z.transpose();
  k.block<3, 1>(1, 0) = z;
  k.block<3, 3>(1, 1) = c + c.transpose() - c.trace() * Mat3::Identity();

  Eigen::SelfAdjointEigenSolver<Mat4> eig(k);
  // Eigenvalues are ascending; the maximizer is the last column.
  const Vec4 v = eig.eigenvectors().col(3);
  return canonical(normalized(Quaternion(v)));
}

}  // namespace dqf
