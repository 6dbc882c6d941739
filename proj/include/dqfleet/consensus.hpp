#ifndef DQFLEET_CONSENSUS_HPP
#define DQFLEET_CONSENSUS_HPP

#include <map>
#include <vector>

#include "dqfleet/ddq_mekf.hpp"

namespace dqf {

/// Soft-consensus gains of one satellite. mu_q must stay within the domain
/// of the quaternion scaling function.
struct ConsensusWeights {
  double mu_q = 0.0;
  double mu_r = 0.0;
  double mu_b = 0.0;
};

/// Post-update estimates a satellite shares with one neighbour, restricted
/// to the commonly tracked set. Positions are inertial.
struct ConsensusSnapshot {
  NodeId sender = 0;
  std::map<NodeId, Quaternion> attitude;
  std::map<NodeId, Vec3> position;
  std::map<NodeId, Vec6> bias;
};

ConsensusSnapshot make_snapshot(const LocalFilterState& state,
                                const std::vector<NodeId>& common);

struct SoftResult {
  LocalFilterState state;
  int clamp_events = 0;  // entries where mu_q had to be clamped into domain
};

/// One soft-consensus exchange: position and bias terms are weight-scaled
/// sums of neighbour differences over the common members; the attitude term
/// is the ordered product of own*-times-neighbour quaternions scaled through
/// the quaternion scaling function and applied multiplicatively. Snapshots
/// must cover N_i.
SoftResult soft_consensus_step(const LocalFilterState& state,
                               const std::vector<ConsensusSnapshot>& snapshots,
                               const ConsensusWeights& weights);

/// Reshapes this satellite's measurement rows into the receiver's state
/// layout: rows of nodes the receiver does not track are dropped, rows the
/// receiver tracks but this satellite did not measure are zero. Throws if
/// the receiver is not in V_i.
MeasurementMatrix reshape_for_receiver(const MeasurementMatrix& own,
                                       const Neighbourhood& receiver);

/// (Ū_{i,k}, U_{i,k}, u_{i,k}) message for neighbour k.
InfoPacket hard_prepare(const MeasurementMatrix& own, const LocalFilterState& state,
                        const Neighbourhood& receiver, double padding = 1.0);

/// Hard-consensus fusion: y = Σ u_{j,i}, S̄ = Σ Ū_{j,i} over packets from
/// V_i (own packet included), then the information-form update. A stubborn
/// leader sums only its own packet.
LocalFilterState hard_aggregate_update(const LocalFilterState& state,
                                       const std::vector<InfoPacket>& packets,
                                       bool stubborn, bool is_leader);

/// Synthetic absolute pose of a follower from its neighbour estimates and
/// relative measurements: per-neighbour absolute poses averaged
/// (arithmetically for positions, via the trace-maximization program for
/// attitudes). Throws when there is no neighbour to synthesize from.
DualQuaternion synthesize_absolute_pose(const LocalFilterState& state,
                                        const MeasurementSet& meas);

}  // namespace dqf

#endif  // DQFLEET_CONSENSUS_HPP
