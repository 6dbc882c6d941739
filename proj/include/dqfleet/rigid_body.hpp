#ifndef DQFLEET_RIGID_BODY_HPP
#define DQFLEET_RIGID_BODY_HPP

#include "dqfleet/dual_quaternion.hpp"
#include "dqfleet/types.hpp"

namespace dqf {

struct RigidBodyParams {
  double mass = 1.0;            // [kg]
  Mat3 inertia = Mat3::Identity();  // [kg m^2], symmetric positive definite

  RigidBodyParams() = default;
  RigidBodyParams(double m, const Mat3& j);

  /// blkdiag{1, m I3, 1, J}.
  Mat8 extended_inertia() const;
};

struct RigidBodyState {
  DualQuaternion pose;   // q̂_{B/I}
  DualVelocity velocity;  // body frame
};

struct DualForce {
  Vec3 torque = Vec3::Zero();  // [N m], body frame
  Vec3 force = Vec3::Zero();   // [N], body frame
};

/// Dual kinematics q̇ = 1/2 q̂ ω̂, returned as the 8-vector derivative.
Vec8 kinematics_deriv(const DualQuaternion& pose, const DualVelocity& w);

/// Dual dynamics in the dual-momentum form (Newton in the body frame plus
/// Euler's equations). Throws on a singular extended inertia.
DualVelocity dynamics_deriv(const DualVelocity& w, const RigidBodyParams& params,
                            const DualForce& f);

/// One RK4 step of the coupled pose/velocity ODEs; the pose is restored to
/// the unit invariants afterwards.
RigidBodyState integrate_step(const RigidBodyState& state, const RigidBodyParams& params,
                              const DualForce& f, double dt);

/// Pose propagation over dt holding the dual velocity constant (RK4 on the
/// linear ODE q̇ = 1/2 q ω̂, then renormalized). Shared by the filters so the
/// single-satellite and distributed time updates are bit-identical.
DualQuaternion propagate_pose(const DualQuaternion& pose, const DualVelocity& w, double dt);

}  // namespace dqf

#endif  // DQFLEET_RIGID_BODY_HPP
