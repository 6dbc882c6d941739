#include "dqfleet/rigid_body.hpp"

#include <stdexcept>

namespace dqf {

RigidBodyParams::RigidBodyParams(double m, const Mat3& j) : mass(m), inertia(j) {
  if (!(m > 0.0)) throw std::invalid_argument("mass must be positive");
  if ((j - j.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("inertia matrix must be symmetric");
  }
}

Mat8 RigidBodyParams::extended_inertia() const {
  Mat8 j8 = Mat8::Zero();
  j8(0, 0) = 1.0;
  j8.block<3, 3>(1, 1) = mass * Mat3::Identity();
  j8(4, 4) = 1.0;
  j8.block<3, 3>(5, 5) = inertia;
  return j8;
}

Vec8 kinematics_deriv(const DualQuaternion& pose, const DualVelocity& w) {
  return dq_scale(0.5, dq_mul(pose, w.embed())).vec8();
}

namespace {
DualQuaternion swap_parts(const DualQuaternion& a) {
  return DualQuaternion(a.dual, a.real);
}
}  // namespace

DualVelocity dynamics_deriv(const DualVelocity& w, const RigidBodyParams& params,
                            const DualForce& f) {
  const Mat8 j8 = params.extended_inertia();
  Eigen::FullPivLU<Mat8> lu(j8);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("extended inertia matrix is singular");
  }

  // Dual momentum h = J8 * swap(w); then swap(ẇ) = J8^{-1} (swap(f) - w x h).
  const DualQuaternion wd = w.embed();
  const DualQuaternion h = DualQuaternion::from_vec8(j8 * swap_parts(wd).vec8());
  DualQuaternion fd(Quaternion::pure(f.torque), Quaternion::pure(f.force));
  const DualQuaternion rhs = dq_add(swap_parts(fd), dq_scale(-1.0, dq_cross(wd, h)));
  const DualQuaternion acc = swap_parts(DualQuaternion::from_vec8(lu.solve(rhs.vec8())));
  return DualVelocity(acc.real.vec(), acc.dual.vec());
}

namespace {
struct Deriv {
  Vec8 pose;
  Vec6 vel;
};

Deriv ode_rhs(const RigidBodyState& s, const RigidBodyParams& params, const DualForce& f) {
  Deriv d;
  d.pose = kinematics_deriv(s.pose, s.velocity);
  d.vel = dynamics_deriv(s.velocity, params, f).vec6();
  return d;
}

RigidBodyState advance(const RigidBodyState& s, const Deriv& d, double h) {
  RigidBodyState out;
  out.pose = DualQuaternion::from_vec8(s.pose.vec8() + h * d.pose);
  out.velocity = DualVelocity::from_vec6(s.velocity.vec6() + h * d.vel);
  return out;
}
}  // namespace

RigidBodyState integrate_step(const RigidBodyState& state, const RigidBodyParams& params,
                              const DualForce& f, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integration step must be positive");
  const Deriv k1 = ode_rhs(state, params, f);
  const Deriv k2 = ode_rhs(advance(state, k1, dt / 2.0), params, f);
  const Deriv k3 = ode_rhs(advance(state, k2, dt / 2.0), params, f);
  const Deriv k4 = ode_rhs(advance(state, k3, dt), params, f);

  RigidBodyState out;
  out.pose = DualQuaternion::from_vec8(
      state.pose.vec8() + dt / 6.0 * (k1.pose + 2.0 * k2.pose + 2.0 * k3.pose + k4.pose));
  out.velocity = DualVelocity::from_vec6(
      state.velocity.vec6() + dt / 6.0 * (k1.vel + 2.0 * k2.vel + 2.0 * k3.vel + k4.vel));
  out.pose = normalize_pose(out.pose);
  return out;
}

DualQuaternion propagate_pose(const DualQuaternion& pose, const DualVelocity& w, double dt) {
  const auto rhs = [&w](const DualQuaternion& q) {
    return dq_scale(0.5, dq_mul(q, w.embed())).vec8();
  };
  const Vec8 q0 = pose.vec8();
  const Vec8 k1 = rhs(pose);
  const Vec8 k2 = rhs(DualQuaternion::from_vec8(q0 + dt / 2.0 * k1));
  const Vec8 k3 = rhs(DualQuaternion::from_vec8(q0 + dt / 2.0 * k2));
  const Vec8 k4 = rhs(DualQuaternion::from_vec8(q0 + dt * k3));
  return normalize_pose(
      DualQuaternion::from_vec8(q0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)));
}

}  // namespace dqf
