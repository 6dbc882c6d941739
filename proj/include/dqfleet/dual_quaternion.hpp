#ifndef DQFLEET_DUAL_QUATERNION_HPP
#define DQFLEET_DUAL_QUATERNION_HPP

#include "dqfleet/quaternion.hpp"
#include "dqfleet/types.hpp"

namespace dqf {

/// Dual quaternion q_r + eps q_d. Unit dual quaternions (|real| = 1,
/// real . dual = 0) represent poses q̂_{B/I}; helpers below check and
/// restore those invariants.
struct DualQuaternion {
  Quaternion real;
  Quaternion dual;

  DualQuaternion() = default;
  DualQuaternion(const Quaternion& r, const Quaternion& d) : real(r), dual(d) {}

  static DualQuaternion identity() {
    return DualQuaternion(Quaternion::identity(), Quaternion());
  }

  DualQuaternion conj() const { return DualQuaternion(real.conj(), dual.conj()); }

  Vec8 vec8() const {
    Vec8 v;
    v << real.c, dual.c;
    return v;
  }
  static DualQuaternion from_vec8(const Vec8& v) {
    return DualQuaternion(Quaternion(Vec4(v.head<4>())), Quaternion(Vec4(v.tail<4>())));
  }

  /// Reduced 6-vector (vector parts of real and dual).
  Vec6 vec6() const {
    Vec6 v;
    v << real.vec(), dual.vec();
    return v;
  }
};

DualQuaternion dq_mul(const DualQuaternion& a, const DualQuaternion& b);
DualQuaternion dq_add(const DualQuaternion& a, const DualQuaternion& b);
DualQuaternion dq_scale(double lambda, const DualQuaternion& a);

/// Block operators: ldqm(a) * vec8(b) == vec8(ab), rdqm(a) * vec8(b) == vec8(ba).
Mat8 ldqm(const DualQuaternion& a);
Mat8 rdqm(const DualQuaternion& a);

/// Dual velocity: angular (real) and linear (dual) body-frame rates.
struct DualVelocity {
  Vec3 angular = Vec3::Zero();  // [rad/s]
  Vec3 linear = Vec3::Zero();   // [m/s]

  DualVelocity() = default;
  DualVelocity(const Vec3& w, const Vec3& v) : angular(w), linear(v) {}

  DualQuaternion embed() const {
    return DualQuaternion(Quaternion::pure(angular), Quaternion::pure(linear));
  }
  Vec6 vec6() const {
    Vec6 v;
    v << angular, linear;
    return v;
  }
  static DualVelocity from_vec6(const Vec6& v) {
    return DualVelocity(v.head<3>(), v.tail<3>());
  }
};

/// 6x6 dual cross block [[w x, 0], [v x, w x]] of a reduced dual vector.
Mat6 dual_skew6(const DualVelocity& w);

/// Dual cross product per the component rule a x b = a_r x b_r
/// + eps (a_d x b_r + a_r x b_d), acting on vector parts.
DualQuaternion dq_cross(const DualQuaternion& a, const DualQuaternion& b);

bool is_unit_pose(const DualQuaternion& q, double tol = 1e-9);
/// Renormalizes the real part and projects the dual part onto the
/// orthogonality constraint real . dual = 0.
DualQuaternion normalize_pose(const DualQuaternion& q);
void check_unit_pose(const DualQuaternion& q, double tol = 1e-9);

/// Pose from unit attitude quaternion and inertial position: dual = 1/2 r q.
DualQuaternion pose_from_parts(const Quaternion& q, const Vec3& r_inertial);

struct PoseParts {
  Quaternion attitude;
  Vec3 r_inertial;  // vec(2 q_d q_r*)
  Vec3 r_body;      // vec(2 q_r* q_d)
};
PoseParts pose_to_parts(const DualQuaternion& pose);

}  // namespace dqf

#endif  // DQFLEET_DUAL_QUATERNION_HPP
