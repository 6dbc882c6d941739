#include "dqfleet/mekf_single.hpp"

#include <cmath>
#include <stdexcept>

#include "dqfleet/info_filter.hpp"
#include "dqfleet/rigid_body.hpp"

namespace dqf {

int state_dim(SensorScenario scenario) {
  return scenario == SensorScenario::PoseAndImu ? 15 : 12;
}

SingleFilterState make_initial_state(const DualQuaternion& pose, SensorScenario scenario) {
  check_unit_pose(pose);
  SingleFilterState s;
  s.pose = pose;
  const int n = state_dim(scenario);
  s.covariance = MatX::Zero(n, n);
  s.covariance.block<6, 6>(0, 0) = 1e-1 * Mat6::Identity();
  s.covariance.block(6, 6, n - 6, n - 6) = 1e-2 * MatX::Identity(n - 6, n - 6);
  return s;
}

Mat12 error_state_F(const DualVelocity& w_est) {
  Mat12 f = Mat12::Zero();
  f.block<6, 6>(0, 0) = -dual_skew6(w_est);
  f.block<6, 6>(0, 6) = -0.5 * Mat6::Identity();
  return f;
}

Mat12 error_state_G() {
  Mat12 g = Mat12::Zero();
  g.block<6, 6>(0, 0) = -0.5 * Mat6::Identity();
  g.block<6, 6>(6, 6) = Mat6::Identity();
  return g;
}

namespace {
Mat3 imu_coupling_block(const DualVelocity& w_est, const Vec3& b_v_hat, const Vec3& r) {
  const Vec3 w = w_est.angular;
  return -skew3(b_v_hat) + skew3(w.cross(r)) + skew3(w) * skew3(r);
}
}  // namespace

Eigen::Matrix<double, 15, 15> imu_error_state_F(const DualVelocity& w_est,
                                                const Vec3& b_v_hat,
                                                const Vec3& imu_offset) {
  Eigen::Matrix<double, 15, 15> f = Eigen::Matrix<double, 15, 15>::Zero();
  f.block<3, 3>(0, 0) = -skew3(w_est.angular);
  f.block<3, 3>(3, 0) = -skew3(w_est.linear);
  f.block<3, 3>(3, 3) = -skew3(w_est.angular);
  f.block<3, 3>(0, 6) = -0.5 * Mat3::Identity();
  f.block<3, 3>(3, 9) = -0.5 * Mat3::Identity();
  f.block<3, 3>(9, 6) = imu_coupling_block(w_est, b_v_hat, imu_offset);
  f.block<3, 3>(9, 9) = -skew3(w_est.angular);
  f.block<3, 3>(9, 12) = Mat3::Identity();
  return f;
}

Eigen::Matrix<double, 15, 15> imu_error_state_G(const DualVelocity& w_est,
                                                const Vec3& b_v_hat,
                                                const Vec3& imu_offset) {
  Eigen::Matrix<double, 15, 15> g = Eigen::Matrix<double, 15, 15>::Zero();
  g.block<6, 6>(0, 0) = -0.5 * Mat6::Identity();
  g.block<9, 9>(6, 6) = Eigen::Matrix<double, 9, 9>::Identity();
  g.block<3, 3>(9, 0) = imu_coupling_block(w_est, b_v_hat, imu_offset);
  return g;
}

MatX process_noise(SensorScenario scenario, const NoiseConfig& config) {
  const int n = state_dim(scenario);
  MatX q = MatX::Zero(n, n);
  q.block<6, 6>(0, 0) = config.Q_velocity;
  if (scenario == SensorScenario::PoseAndImu) {
    q.block<3, 3>(6, 6) = config.Q_bias.block<3, 3>(0, 0);
    q.block<3, 3>(9, 9) = config.Q_accel;
    q.block<3, 3>(12, 12) = config.Q_accel_bias;
  } else {
    q.block<6, 6>(6, 6) = config.Q_bias;
  }
  return q;
}

namespace {
Vec3 propagate_velocity_bias(const Vec3& b_v, const Vec3& w_hat, const Vec3& n_hat,
                             const Vec3& r, double dt) {
  const auto rhs = [&](const Vec3& b) {
    return (-w_hat.cross(b) - n_hat + w_hat.cross(w_hat.cross(r))).eval();
  };
  const Vec3 k1 = rhs(b_v);
  const Vec3 k2 = rhs(b_v + dt / 2.0 * k1);
  const Vec3 k3 = rhs(b_v + dt / 2.0 * k2);
  const Vec3 k4 = rhs(b_v + dt * k3);
  return b_v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}
}  // namespace

SingleFilterState time_update(const SingleFilterState& state, SensorScenario scenario,
                              const NoiseConfig& config,
                              const std::optional<DualVelocity>& w_measured,
                              const std::optional<Vec3>& n_measured, double dt) {
  SingleFilterState out = state;
  DualVelocity w_est;
  switch (scenario) {
    case SensorScenario::PoseOnly:
      w_est = DualVelocity::from_vec6(-state.dual_bias);
      break;
    case SensorScenario::PoseAndDualVelocity:
      if (!w_measured) throw std::invalid_argument("dual velocity measurement missing");
      w_est = DualVelocity::from_vec6(w_measured->vec6() - state.dual_bias);
      break;
    case SensorScenario::PoseAndImu: {
      if (!w_measured) throw std::invalid_argument("angular velocity measurement missing");
      if (!n_measured) throw std::invalid_argument("linear acceleration measurement missing");
      const Vec3 w_hat = w_measured->angular - state.dual_bias.head<3>();
      const Vec3 n_hat = *n_measured - state.imu_bias;
      const Vec3 b_v = propagate_velocity_bias(state.dual_bias.tail<3>(), w_hat, n_hat,
                                               config.imu_offset, dt);
      out.dual_bias.tail<3>() = b_v;
      w_est = DualVelocity(w_hat, -b_v);
      break;
    }
  }

  out.pose = propagate_pose(state.pose, w_est, dt);

  const int n = state_dim(scenario);
  MatX f, g;
  if (scenario == SensorScenario::PoseAndImu) {
    f = imu_error_state_F(w_est, out.dual_bias.tail<3>(), config.imu_offset);
    g = imu_error_state_G(w_est, out.dual_bias.tail<3>(), config.imu_offset);
  } else {
    f = error_state_F(w_est);
    g = error_state_G();
  }
  const MatX phi = MatX::Identity(n, n) + f * dt;
  out.covariance = symmetrize(phi * state.covariance * phi.transpose() +
                              dt * g * process_noise(scenario, config) * g.transpose());
  return out;
}

DualQuaternion extend_error_to_unit(const Vec6& reduced) {
  const Vec3 r = reduced.head<3>();
  const Vec3 d = reduced.tail<3>();
  const double s = recover_scalar(r);
  if (s <= 0.0) {
    throw DivergenceError("error-state correction reached a 180 degree singularity");
  }
  return DualQuaternion(Quaternion(s, r), Quaternion(-r.dot(d) / s, d));
}

SingleFilterState measurement_update(const SingleFilterState& state,
                                     SensorScenario scenario, const NoiseConfig& config,
                                     const DualQuaternion& q_measured) {
  check_unit_pose(q_measured, 1e-6);
  DualQuaternion q_m = q_measured;
  if (quat_mul(state.pose.real.conj(), q_m.real).s() < 0.0) {
    q_m = dq_scale(-1.0, q_m);
  }
  const Vec6 z = dq_mul(state.pose.conj(), q_m).vec6();

  const int n = state_dim(scenario);
  MatX h = MatX::Zero(6, n);
  h.block<6, 6>(0, 0) = Mat6::Identity();

  const InfoUpdate up = info_update(VecX::Zero(n), state.covariance, h, config.R, z);

  SingleFilterState out = state;
  out.pose = normalize_pose(dq_mul(state.pose, extend_error_to_unit(up.delta_x.head<6>())));
  out.dual_bias += up.delta_x.segment<6>(6);
  if (scenario == SensorScenario::PoseAndImu) out.imu_bias += up.delta_x.tail<3>();
  out.covariance = symmetrize(up.P_plus);
  return out;
}

}  // namespace dqf
