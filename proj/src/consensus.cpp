#include "dqfleet/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dqf {

ConsensusSnapshot make_snapshot(const LocalFilterState& state,
                                const std::vector<NodeId>& common) {
  ConsensusSnapshot snap;
  snap.sender = state.order.owner;
  for (NodeId j : common) {
    if (!state.order.contains(j)) continue;
    const int m = state.order.slot_of(j);
    snap.attitude[j] = state.poses[m].real;
    snap.position[j] = pose_to_parts(state.poses[m]).r_inertial;
    snap.bias[j] = state.biases[m];
  }
  return snap;
}

SoftResult soft_consensus_step(const LocalFilterState& state,
                               const std::vector<ConsensusSnapshot>& snapshots,
                               const ConsensusWeights& weights) {
  if (weights.mu_q < 0.0 || weights.mu_r < 0.0 || weights.mu_b < 0.0 ||
      weights.mu_q > 1.0) {
    throw std::invalid_argument("consensus weights out of domain");
  }
  // Snapshots must come from exactly N_i; products are taken in ascending
  // sender order, so sort first.
  std::vector<const ConsensusSnapshot*> ordered;
  ordered.reserve(snapshots.size());
  for (const auto& s : snapshots) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const ConsensusSnapshot* a, const ConsensusSnapshot* b) {
              return a->sender < b->sender;
            });
  std::vector<NodeId> expected;
  for (NodeId j : state.order.members) {
    if (j != state.order.owner) expected.push_back(j);
  }
  if (ordered.size() != expected.size()) {
    throw std::invalid_argument("soft consensus needs one snapshot per neighbour");
  }
  for (size_t n = 0; n < ordered.size(); ++n) {
    if (ordered[n]->sender != expected[n]) {
      throw std::invalid_argument("soft consensus snapshot from a non-neighbour");
    }
  }

  SoftResult result;
  result.state = state;
  for (int m = 0; m < state.tracked(); ++m) {
    const NodeId j = state.order.members[m];
    const Quaternion own_att = state.poses[m].real;
    const Vec3 own_pos = pose_to_parts(state.poses[m]).r_inertial;
    const Vec6 own_bias = state.biases[m];

    Quaternion theta = Quaternion::identity();
    Vec3 pos_term = Vec3::Zero();
    Vec6 bias_term = Vec6::Zero();
    for (const ConsensusSnapshot* snap : ordered) {
      const auto att_it = snap->attitude.find(j);
      if (att_it == snap->attitude.end()) continue;  // j not in the common set
      theta = quat_mul(theta, quat_mul(own_att.conj(), att_it->second));
      pos_term += snap->position.at(j) - own_pos;
      bias_term += snap->bias.at(j) - own_bias;
    }

    double mu_q = weights.mu_q;
    const double vn = theta.vec().norm();
    if (mu_q * vn > 1.0) {
      mu_q = (1.0 - 1e-12) / vn;
      ++result.clamp_events;
    }
    const Quaternion phi_q = quat_scale_error(theta, mu_q);
    const Quaternion new_att = normalized(quat_mul(own_att, phi_q));
    const Vec3 new_pos = own_pos + weights.mu_r * pos_term;
    result.state.poses[m] = pose_from_parts(new_att, new_pos);
    result.state.biases[m] = own_bias + weights.mu_b * bias_term;
  }
  return result;
}

MeasurementMatrix reshape_for_receiver(const MeasurementMatrix& own,
                                       const Neighbourhood& receiver) {
  if (!own.layout.contains(receiver.owner)) {
    throw std::invalid_argument("hard consensus receiver is not in V_i");
  }
  if (!receiver.contains(own.observer)) {
    throw std::invalid_argument("receiver does not track the sender");
  }
  MeasurementMatrix out;
  out.observer = own.observer;
  out.layout = receiver;
  out.rows.resize(receiver.size());
  for (int o = 0; o < receiver.size(); ++o) {
    const NodeId j = receiver.members[o];
    if (!own.layout.contains(j)) continue;  // stays Absent
    out.rows[o] = own.rows[own.layout.slot_of(j)];
  }
  return out;
}

InfoPacket hard_prepare(const MeasurementMatrix& own, const LocalFilterState& state,
                        const Neighbourhood& receiver, double padding) {
  const MeasurementMatrix reshaped = reshape_for_receiver(own, receiver);
  const InfoQuantities q = info_quantities(reshaped, padding);
  InfoPacket pkt;
  pkt.sender = own.observer;
  pkt.u = q.u;
  pkt.U_reduced = q.U_reduced;
  pkt.U_full = q.U_full;
  pkt.poses = state.poses;
  pkt.biases = state.biases;
  return pkt;
}

LocalFilterState hard_aggregate_update(const LocalFilterState& state,
                                       const std::vector<InfoPacket>& packets,
                                       bool stubborn, bool is_leader) {
  const int n = 12 * state.tracked();
  std::vector<NodeId> senders;
  for (const auto& p : packets) senders.push_back(p.sender);
  std::sort(senders.begin(), senders.end());
  if (senders != state.order.members) {
    throw std::invalid_argument("hard consensus needs one packet per tracked node");
  }

  VecX y = VecX::Zero(n);
  MatX s_bar = MatX::Zero(n, n);
  for (const auto& p : packets) {
    if (stubborn && is_leader && p.sender != state.order.owner) continue;
    if (p.u.size() != n || p.U_reduced.rows() != n) {
      throw std::invalid_argument("hard consensus packet has the wrong layout");
    }
    y += p.u;
    s_bar += p.U_reduced;
  }
  return measurement_update(state, y, s_bar);
}

DualQuaternion synthesize_absolute_pose(const LocalFilterState& state,
                                        const MeasurementSet& meas) {
  if (meas.relative.empty()) {
    throw std::invalid_argument("isolated follower: no neighbour to synthesize from");
  }
  std::vector<Quaternion> attitudes;
  Vec3 position = Vec3::Zero();
  for (const auto& [k, rel] : meas.relative) {
    const DualQuaternion& est = state.pose_of(k);
    const Quaternion q_abs = quat_mul(est.real, rel.attitude.conj());
    const Vec3 r_k = pose_to_parts(est).r_inertial;
    const Vec3 offset = quat_mul(quat_mul(q_abs, Quaternion::pure(rel.position)),
                                 q_abs.conj())
                            .vec();
    attitudes.push_back(q_abs);
    position += r_k - offset;
  }
  position /= static_cast<double>(meas.relative.size());
  return pose_from_parts(quat_average(attitudes), position);
}

}  // namespace dqf
