#ifndef DQFLEET_MEKF_SINGLE_HPP
#define DQFLEET_MEKF_SINGLE_HPP

#include <optional>

#include "dqfleet/dual_quaternion.hpp"
#include "dqfleet/types.hpp"

namespace dqf {

enum class SensorScenario { PoseOnly, PoseAndDualVelocity, PoseAndImu };

/// Process/measurement noise configuration of the single-satellite filter.
///
/// R is the covariance of the 6-dim pose residual vec6(q̂* q_m): attitude
/// vector part (top) and dual part (bottom; the dual part of the residual
/// carries half the position error, so a position sensor std of s maps to
/// (s/2)^2 here).
struct NoiseConfig {
  Mat6 Q_velocity = Mat6::Zero();            // Q̄_ω ⊕ Q̄_v
  Mat6 Q_bias = Mat6::Identity() * 1e-6;     // Q̄_bω ⊕ Q̄_bv
  Mat3 Q_accel = Mat3::Zero();               // Q̄_n, accelerometer noise (IMU)
  Mat3 Q_accel_bias = Mat3::Zero();          // Q̄_bn (IMU)
  Mat6 R = Mat6::Identity() * 1e-6;          // pose residual covariance
  Vec3 imu_offset = Vec3::Zero();            // r^B_{A/B} [m]
};

struct SingleFilterState {
  DualQuaternion pose = DualQuaternion::identity();  // q̂_{B/I}
  Vec6 dual_bias = Vec6::Zero();                     // [b̂_ω; b̂_v]
  Vec3 imu_bias = Vec3::Zero();                      // b̂_n (IMU scenario only)
  MatX covariance;                                   // 12x12, or 15x15 with IMU
};

/// Covariance dimension of a scenario (12, or 15 with the IMU bias).
int state_dim(SensorScenario scenario);

/// State with P(0) = blkdiag{1e-1 I6, 1e-2 I6} (12-dim) or
/// blkdiag{1e-1 I6, 1e-2 I9} (15-dim).
SingleFilterState make_initial_state(const DualQuaternion& pose, SensorScenario scenario);

/// Error-dynamics Jacobian [[-(ω̂)x6, -1/2 I6], [0, 0]] evaluated at the
/// estimated dual velocity. Shared with the distributed filter blocks.
Mat12 error_state_F(const DualVelocity& w_est);
Mat12 error_state_G();

/// 15-dim Jacobians of the pose + dual-bias + IMU-bias error dynamics
/// (gravity neglected).
Eigen::Matrix<double, 15, 15> imu_error_state_F(const DualVelocity& w_est,
                                                const Vec3& b_v_hat,
                                                const Vec3& imu_offset);
Eigen::Matrix<double, 15, 15> imu_error_state_G(const DualVelocity& w_est,
                                                const Vec3& b_v_hat,
                                                const Vec3& imu_offset);

/// Process noise in the reduced coordinates; IMU ordering is
/// {Q_ω, Q_v, Q_bω, Q_n, Q_bn} (the accelerometer noise drives b_v).
MatX process_noise(SensorScenario scenario, const NoiseConfig& config);

/// Time update: forms the estimated dual velocity per scenario, propagates
/// the pose by the dual kinematics and the covariance by
/// P <- (I + F dt) P (I + F dt)^T + dt G Q G^T. Biases are held constant
/// except b̂_v in the IMU scenario, which follows the linear-acceleration
/// approximation. Throws std::invalid_argument on missing scenario inputs.
SingleFilterState time_update(const SingleFilterState& state, SensorScenario scenario,
                              const NoiseConfig& config,
                              const std::optional<DualVelocity>& w_measured,
                              const std::optional<Vec3>& n_measured, double dt);

/// Measurement update from an absolute pose measurement. The innovation is
/// vec6(q̂⁻* q_m); the measured pose is sign-aligned to the estimate first.
/// Throws DivergenceError when the correction leaves the unit-recoverable
/// domain.
SingleFilterState measurement_update(const SingleFilterState& state,
                                     SensorScenario scenario, const NoiseConfig& config,
                                     const DualQuaternion& q_measured);

/// Restores the scalar parts of a reduced error vector, yielding a unit
/// error dual quaternion (multiplicative correction).
DualQuaternion extend_error_to_unit(const Vec6& reduced);

}  // namespace dqf

#endif  // DQFLEET_MEKF_SINGLE_HPP
