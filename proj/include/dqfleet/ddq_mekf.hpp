#ifndef DQFLEET_DDQ_MEKF_HPP
#define DQFLEET_DDQ_MEKF_HPP

#include <map>
#include <optional>
#include <vector>

#include "dqfleet/dual_quaternion.hpp"
#include "dqfleet/fleet_graph.hpp"
#include "dqfleet/mekf_single.hpp"
#include "dqfleet/types.hpp"

namespace dqf {

/// One satellite's stacked filter state: pose and dual-bias estimates for
/// every tracked node (ascending node order), covariance 12K x 12K with
/// K = k_i + 1 tracked nodes.
struct LocalFilterState {
  Neighbourhood order;
  std::vector<DualQuaternion> poses;
  std::vector<Vec6> biases;
  MatX covariance;

  int tracked() const { return order.size(); }
  const DualQuaternion& pose_of(NodeId j) const { return poses[order.slot_of(j)]; }
  const DualQuaternion& own_pose() const { return pose_of(order.owner); }
  const Vec6& own_bias() const { return biases[order.slot_of(order.owner)]; }
};

LocalFilterState make_local_state(const Neighbourhood& order,
                                  const std::vector<DualQuaternion>& poses,
                                  const Mat12& P0_per_node);

/// Relative pose measurement taken by the observer in its own body frame,
/// with the sensor noise covariances (raw attitude-vector / meter units).
struct RelativePoseMeasurement {
  Quaternion attitude;  // q_{B_k/B_i,m}
  Vec3 position;        // r^{B_i}_{B_k/B_i,m} [m]
  Mat3 R_attitude = Mat3::Identity() * 1e-6;
  Mat3 R_position = Mat3::Identity() * 1e-6;
};

struct AbsolutePoseMeasurement {
  DualQuaternion pose;  // q_{B_i/I,m}
  Mat3 R_attitude = Mat3::Identity() * 1e-6;
  Mat3 R_position = Mat3::Identity() * 1e-6;
};

struct MeasurementSet {
  std::optional<AbsolutePoseMeasurement> absolute;
  std::map<NodeId, RelativePoseMeasurement> relative;  // keys = N_i
};

/// Stacked dual velocities, one 6-vector per tracked node.
struct StackedVelocity {
  std::vector<Vec6> blocks;
};

/// Stacks own + received velocity measurements in ascending node order.
/// Throws unless `measured` covers exactly the tracked set.
StackedVelocity stack_velocity(const std::map<NodeId, Vec6>& measured,
                               const Neighbourhood& order);
/// Subtracts the stacked bias estimate blockwise.
StackedVelocity estimate_velocity(const StackedVelocity& measured,
                                  const std::vector<Vec6>& biases);

/// Per-node process noise blocks (identical copies across the fleet in the
/// experiments).
struct NodeNoise {
  Mat6 Q_velocity = Mat6::Zero();
  Mat6 Q_bias = Mat6::Identity() * 1e-6;
};

/// Propagates every tracked pose with its own velocity block and the
/// covariance with the block-diagonal F/G of the stacked error dynamics.
LocalFilterState time_update(const LocalFilterState& state, const StackedVelocity& w_est,
                             const NodeNoise& noise, double dt);

/// The six sensitivity blocks of the relative pose measurement functions
/// (4x4, full quaternion coordinates). reduced() deletes the scalar row and
/// column of a block.
struct RelativePoseJacobian {
  Mat4 q_wrt_dq_i;  // rqm(q̂_i* q̂_k) I*
  Mat4 q_wrt_dq_k;  // lqm(q̂_i* q̂_k)
  Mat4 r_wrt_dq_i;
  Mat4 r_wrt_dq_k;
  Mat4 r_wrt_dp_i;  // -2 I
  Mat4 r_wrt_dp_k;

  static Mat3 reduced(const Mat4& h) { return h.block<3, 3>(1, 1); }
};

RelativePoseJacobian jacobian_relative_pose(const DualQuaternion& pose_i,
                                            const DualQuaternion& pose_k);

/// One block row of the stacked measurement: the row of tracked node j
/// carries the relative measurement of j (with blocks at j's and the
/// observer's columns) or, when j is the observer, the own-pose residual
/// with an identity block.
struct MeasurementRow {
  enum class Kind { Absent, Own, Relative };
  Kind kind = Kind::Absent;
  Vec6 z = Vec6::Zero();
  Mat6 R = Mat6::Identity();  // residual-unit covariance
  Mat6 h_self = Mat6::Zero();
  Mat6 h_node = Mat6::Zero();
  Mat8 hf_self = Mat8::Zero();
  Mat8 hf_node = Mat8::Zero();
};

/// Block-sparse measurement vector + Jacobian in a given state layout.
struct MeasurementMatrix {
  NodeId observer = 0;
  Neighbourhood layout;
  std::vector<MeasurementRow> rows;

  VecX z() const;
  MatX H_reduced() const;  // 6K x 12K
  MatX H_full() const;     // 8K x 14K
};

/// Builds the residualized measurement vector and the stacked Jacobian.
/// Requires `meas.relative` to cover N_i exactly and an absolute pose to be
/// present (real or synthesized).
MeasurementMatrix assemble_measurement(const LocalFilterState& state,
                                       const MeasurementSet& meas);

struct InfoQuantities {
  VecX u;          // H̄^T R̄^{-1} z
  MatX U_reduced;  // H̄^T R̄^{-1} H̄
  MatX U_full;     // H^T R^{-1} H with R extended by diagonal padding
};

/// Information quantities computed blockwise from the sparse structure.
/// `padding` fills the diagonal entries of the extended R at the scalar
/// measurement rows; it does not affect u or U_reduced.
InfoQuantities info_quantities(const MeasurementMatrix& mm, double padding = 1.0);

/// Per-round message between neighbours: information quantities plus the
/// sender's state snapshot.
struct InfoPacket {
  NodeId sender = 0;
  VecX u;
  MatX U_reduced;
  MatX U_full;
  std::vector<DualQuaternion> poses;
  std::vector<Vec6> biases;
};

/// Information-form measurement update under the MEKF reset convention:
/// M = (P^{-1} + Ū)^{-1}, Δx = M u, multiplicative pose update, additive
/// bias update, P <- M.
LocalFilterState measurement_update(const LocalFilterState& state, const VecX& u,
                                    const MatX& U_reduced);

}  // namespace dqf

#endif  // DQFLEET_DDQ_MEKF_HPP
