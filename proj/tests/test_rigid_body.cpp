#include <doctest.h>

#include <random>

#include "dqfleet/rigid_body.hpp"

using namespace dqf;

namespace {

Quaternion random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return normalized(Quaternion(n(rng), n(rng), n(rng), n(rng)));
}

Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

const RigidBodyParams kBody(2.5, (Vec3(3.0, 5.0, 7.0)).asDiagonal());

}  // namespace

TEST_CASE("extended inertia layout") {
  const Mat8 j8 = kBody.extended_inertia();
  CHECK(j8(0, 0) == 1.0);
  CHECK(j8(4, 4) == 1.0);
  CHECK((j8.block<3, 3>(1, 1) - 2.5 * Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((j8.block<3, 3>(5, 5) - kBody.inertia).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(RigidBodyParams(1.0, (Mat3() << 1, 2, 0, 0, 1, 0, 0, 0, 1).finished()),
                  std::invalid_argument);
}

TEST_CASE("kinematics derivative") {
  const DualQuaternion pose = DualQuaternion::identity();
  CHECK(kinematics_deriv(pose, DualVelocity()).norm() == 0.0);

  const Vec8 d = kinematics_deriv(pose, DualVelocity(Vec3(0, 0, 1), Vec3::Zero()));
  CHECK((d.head<4>() - Vec4(0, 0, 0, 0.5)).norm() == 0.0);
  CHECK(d.tail<4>().norm() == 0.0);
}

TEST_CASE("kinematics matches finite difference of the integrated motion") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    RigidBodyState s;
    s.pose = pose_from_parts(random_unit(rng), random_vec(rng, 3.0));
    s.velocity = DualVelocity(random_vec(rng, 0.5), random_vec(rng, 0.5));
    const double h = 1e-6;
    // Central difference of the constant-velocity propagation.
    const Vec8 fwd = propagate_pose(s.pose, s.velocity, h).vec8();
    const Vec8 bwd = propagate_pose(s.pose, s.velocity, -h).vec8();
    const Vec8 fd = (fwd - bwd) / (2.0 * h);
    CHECK((fd - kinematics_deriv(s.pose, s.velocity)).norm() < 1e-6);
  }
}

TEST_CASE("dynamics: principal-axis spin has zero angular acceleration") {
  const DualVelocity w(Vec3(0.7, 0, 0), Vec3::Zero());
  const DualVelocity dw = dynamics_deriv(w, kBody, DualForce{});
  CHECK(dw.angular.norm() < 1e-15);
}

TEST_CASE("dynamics: spherical inertia is torque-free stationary") {
  const RigidBodyParams ball(1.0, Mat3::Identity());
  std::mt19937_64 rng(32);
  const DualVelocity w(random_vec(rng), Vec3::Zero());
  CHECK(dynamics_deriv(w, ball, DualForce{}).angular.norm() < 1e-15);
}

TEST_CASE("dynamics matches component-wise Euler + Newton oracle") {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 50; ++t) {
    const DualVelocity w(random_vec(rng), random_vec(rng));
    DualForce f;
    f.torque = random_vec(rng);
    f.force = random_vec(rng);
    const DualVelocity dw = dynamics_deriv(w, kBody, f);

    // Oracle: J wdot = tau - w x (J w); m vdot = f - m w x v (body frame).
    const Vec3 wdot =
        kBody.inertia.inverse() * (f.torque - w.angular.cross(kBody.inertia * w.angular));
    const Vec3 vdot = f.force / kBody.mass - w.angular.cross(w.linear);
    CHECK((dw.angular - wdot).norm() < 1e-12);
    CHECK((dw.linear - vdot).norm() < 1e-12);
  }
}

TEST_CASE("integrate_step fixed point and axis-angle oracle") {
  RigidBodyState s;
  s.pose = pose_from_parts(Quaternion::identity(), Vec3(1, 2, 3));
  const RigidBodyState unchanged = integrate_step(s, kBody, DualForce{}, 0.05);
  CHECK((unchanged.pose.vec8() - s.pose.vec8()).norm() < 1e-15);
  CHECK(unchanged.velocity.vec6().norm() == 0.0);

  // Spin about z (principal axis) at 0.1 rad/s for 10 s -> 1 rad rotation.
  RigidBodyState spin;
  spin.pose = DualQuaternion::identity();
  spin.velocity = DualVelocity(Vec3(0, 0, 0.1), Vec3::Zero());
  for (int k = 0; k < 200; ++k) spin = integrate_step(spin, kBody, DualForce{}, 0.05);
  const Quaternion expect = rot_from_axis_angle(Vec3::UnitZ(), 1.0);
  CHECK((spin.pose.real.c - expect.c).norm() < 1e-6);
}

TEST_CASE("unit invariants hold over 1e4 steps") {
  std::mt19937_64 rng(34);
  RigidBodyState s;
  s.pose = pose_from_parts(random_unit(rng), random_vec(rng, 2.0));
  s.velocity = DualVelocity(random_vec(rng, 0.3), random_vec(rng, 0.3));
  for (int k = 0; k < 10000; ++k) s = integrate_step(s, kBody, DualForce{}, 0.01);
  CHECK(std::abs(s.pose.real.norm() - 1.0) <= 1e-9);
  CHECK(std::abs(s.pose.real.c.dot(s.pose.dual.c)) <= 1e-9);
}

TEST_CASE("torque-free motion conserves inertial angular momentum and energy") {
  std::mt19937_64 rng(35);
  RigidBodyState s;
  s.pose = pose_from_parts(random_unit(rng), random_vec(rng, 2.0));
  s.velocity = DualVelocity(Vec3(0.4, -0.2, 0.3), Vec3(0.1, 0.2, -0.1));

  const auto inertial_momentum = [&](const RigidBodyState& st) {
    return (rotation_matrix(st.pose.real) * (kBody.inertia * st.velocity.angular)).eval();
  };
  const auto energy = [&](const RigidBodyState& st) {
    const Vec3 v_inertial = rotation_matrix(st.pose.real) * st.velocity.linear;
    return 0.5 * st.velocity.angular.dot(kBody.inertia * st.velocity.angular) +
           0.5 * kBody.mass * v_inertial.squaredNorm();
  };

  const Vec3 h0 = inertial_momentum(s);
  const double e0 = energy(s);
  for (int k = 0; k < 1000; ++k) s = integrate_step(s, kBody, DualForce{}, 0.01);
  CHECK((inertial_momentum(s) - h0).norm() < 1e-6);
  CHECK(std::abs(energy(s) - e0) < 1e-6);
}

TEST_CASE("fourth-order convergence in dt") {
  std::mt19937_64 rng(36);
  RigidBodyState s0;
  s0.pose = pose_from_parts(random_unit(rng), random_vec(rng));
  s0.velocity = DualVelocity(Vec3(0.5, -0.4, 0.6), Vec3(0.2, 0.1, -0.3));
  DualForce f;
  f.torque = Vec3(0.05, -0.02, 0.03);
  f.force = Vec3(0.1, 0.0, -0.1);

  const auto integrate_to = [&](double dt, double horizon) {
    RigidBodyState s = s0;
    const int n = static_cast<int>(horizon / dt + 0.5);
    for (int k = 0; k < n; ++k) s = integrate_step(s, kBody, f, dt);
    return s;
  };

  const Vec8 ref = integrate_to(1e-4, 1.0).pose.vec8();
  const double err_coarse = (integrate_to(0.02, 1.0).pose.vec8() - ref).norm();
  const double err_fine = (integrate_to(0.01, 1.0).pose.vec8() - ref).norm();
  CHECK(err_coarse / err_fine > 10.0);  // ~16x for a 4th-order method
  CHECK(err_coarse / err_fine < 24.0);
}
