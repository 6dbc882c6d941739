#include "dqfleet/dual_quaternion.hpp"

#include <cmath>
#include <stdexcept>

namespace dqf {

DualQuaternion dq_mul(const DualQuaternion& a, const DualQuaternion& b) {
  return DualQuaternion(
      quat_mul(a.real, b.real),
      Quaternion(Vec4(quat_mul(a.real, b.dual).c + quat_mul(a.dual, b.real).c)));
}

DualQuaternion dq_add(const DualQuaternion& a, const DualQuaternion& b) {
  return DualQuaternion(Quaternion(Vec4(a.real.c + b.real.c)),
                        Quaternion(Vec4(a.dual.c + b.dual.c)));
}

DualQuaternion dq_scale(double lambda, const DualQuaternion& a) {
  return DualQuaternion(Quaternion(Vec4(lambda * a.real.c)),
                        Quaternion(Vec4(lambda * a.dual.c)));
}

Mat8 ldqm(const DualQuaternion& a) {
  Mat8 m = Mat8::Zero();
  m.block<4, 4>(0, 0) = lqm(a.real);
  m.block<4, 4>(4, 0) = lqm(a.dual);
  m.block<4, 4>(4, 4) = lqm(a.real);
  return m;
}

Mat8 rdqm(const DualQuaternion& a) {
  Mat8 m = Mat8::Zero();
  m.block<4, 4>(0, 0) = rqm(a.real);
  m.block<4, 4>(4, 0) = rqm(a.dual);
  m.block<4, 4>(4, 4) = rqm(a.real);
  return m;
}

Mat6 dual_skew6(const DualVelocity& w) {
  Mat6 m = Mat6::Zero();
  m.block<3, 3>(0, 0) = skew3(w.angular);
  m.block<3, 3>(3, 0) = skew3(w.linear);
  m.block<3, 3>(3, 3) = skew3(w.angular);
  return m;
}

DualQuaternion dq_cross(const DualQuaternion& a, const DualQuaternion& b) {
  const Vec3 r = a.real.vec().cross(b.real.vec());
  const Vec3 d = a.dual.vec().cross(b.real.vec()) + a.real.vec().cross(b.dual.vec());
  return DualQuaternion(Quaternion::pure(r), Quaternion::pure(d));
}

bool is_unit_pose(const DualQuaternion& q, double tol) {
  return std::abs(q.real.norm() - 1.0) <= tol &&
         std::abs(q.real.c.dot(q.dual.c)) <= tol;
}

DualQuaternion normalize_pose(const DualQuaternion& q) {
  const Quaternion r = normalized(q.real);
  const Vec4 d = q.dual.c - r.c.dot(q.dual.c) * r.c;
  return DualQuaternion(r, Quaternion(d));
}

void check_unit_pose(const DualQuaternion& q, double tol) {
  if (!is_unit_pose(q, tol)) {
    throw std::invalid_argument("dual quaternion violates unit pose invariants");
  }
}

DualQuaternion pose_from_parts(const Quaternion& q, const Vec3& r_inertial) {
  if (!is_unit(q)) {
    throw std::invalid_argument("pose_from_parts requires a unit attitude quaternion");
  }
  const Quaternion dual(Vec4(0.5 * quat_mul(Quaternion::pure(r_inertial), q).c));
  return DualQuaternion(q, dual);
}

PoseParts pose_to_parts(const DualQuaternion& pose) {
  PoseParts parts;
  parts.attitude = pose.real;
  parts.r_inertial = 2.0 * quat_mul(pose.dual, pose.real.conj()).vec();
  parts.r_body = 2.0 * quat_mul(pose.real.conj(), pose.dual).vec();
  return parts;
}

}  // namespace dqf
