#include <doctest.h>

#include <random>

#include "dqfleet/consensus.hpp"
#include "dqfleet/info_filter.hpp"

using namespace dqf;

namespace {

Quaternion random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return normalized(Quaternion(n(rng), n(rng), n(rng), n(rng)));
}

Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)) * scale;
}

DualQuaternion random_pose(std::mt19937_64& rng, double span = 4.0) {
  return pose_from_parts(random_unit(rng), random_vec(rng, span));
}

LocalFilterState state_with(NodeId owner, std::vector<NodeId> members,
                            std::vector<DualQuaternion> poses) {
  return make_local_state(Neighbourhood{owner, std::move(members)}, std::move(poses),
                          Mat12::Identity() * 0.05);
}

MeasurementSet noiseless_measurements(const LocalFilterState& state,
                                      const std::vector<DualQuaternion>& truths) {
  MeasurementSet meas;
  const int own_slot = state.order.slot_of(state.order.owner);
  const DualQuaternion& own_truth = truths[own_slot];
  AbsolutePoseMeasurement abs;
  abs.pose = own_truth;
  meas.absolute = abs;
  const Vec3 r_own = pose_to_parts(own_truth).r_inertial;
  for (int m = 0; m < state.tracked(); ++m) {
    const NodeId j = state.order.members[m];
    if (j == state.order.owner) continue;
    RelativePoseMeasurement rel;
    rel.attitude = quat_mul(own_truth.real.conj(), truths[m].real);
    rel.position =
        quat_mul(quat_mul(own_truth.real.conj(),
                          Quaternion::pure(pose_to_parts(truths[m]).r_inertial - r_own)),
                 own_truth.real)
            .vec();
    meas.relative[j] = rel;
  }
  return meas;
}

std::vector<DualQuaternion> perturb(const std::vector<DualQuaternion>& poses,
                                    std::mt19937_64& rng, double mag) {
  std::vector<DualQuaternion> out;
  for (const auto& p : poses) {
    Vec6 e;
    e << random_vec(rng, mag), random_vec(rng, mag);
    out.push_back(normalize_pose(dq_mul(p, extend_error_to_unit(e))));
  }
  return out;
}

}  // namespace

TEST_CASE("soft consensus: full agreement is a fixed point") {
  std::mt19937_64 rng(81);
  std::vector<DualQuaternion> shared = {random_pose(rng), random_pose(rng)};
  LocalFilterState s1 = state_with(1, {1, 2}, shared);
  LocalFilterState s2 = state_with(2, {1, 2}, shared);

  const std::vector<NodeId> common = {1, 2};
  const ConsensusWeights w{0.5, 0.5, 0.5};
  const SoftResult r1 = soft_consensus_step(s1, {make_snapshot(s2, common)}, w);
  for (int m = 0; m < 2; ++m) {
    CHECK((r1.state.poses[m].vec8() - s1.poses[m].vec8()).norm() < 1e-12);
    CHECK(r1.state.biases[m].norm() < 1e-12);
  }
  CHECK(r1.clamp_events == 0);
}

TEST_CASE("soft consensus: 2-node position disagreement (hand-evaluated oracle)") {
  // Both satellites estimate node 1's position; the estimates differ by d.
  // With mu_r = 1/2 and the single neighbour term of the consensus sum,
  // the equation evaluates to a move of mu_r * d = d/2 for each satellite:
  // they meet in the middle.
  std::mt19937_64 rng(82);
  const Quaternion att = random_unit(rng);
  const Vec3 base(1.0, 2.0, 3.0);
  const Vec3 d(0.4, 0.0, -0.2);

  LocalFilterState s1 = state_with(
      1, {1, 2}, {pose_from_parts(att, base), pose_from_parts(att, Vec3(5, 5, 5))});
  LocalFilterState s2 = state_with(
      2, {1, 2}, {pose_from_parts(att, base + d), pose_from_parts(att, Vec3(5, 5, 5))});

  const std::vector<NodeId> common = {1, 2};
  const ConsensusWeights w{0.5, 0.5, 0.5};
  const SoftResult r1 = soft_consensus_step(s1, {make_snapshot(s2, common)}, w);
  const SoftResult r2 = soft_consensus_step(s2, {make_snapshot(s1, common)}, w);

  CHECK((pose_to_parts(r1.state.poses[0]).r_inertial - (base + 0.5 * d)).norm() < 1e-12);
  CHECK((pose_to_parts(r2.state.poses[0]).r_inertial - (base + 0.5 * d)).norm() < 1e-12);
  CHECK((pose_to_parts(r1.state.poses[1]).r_inertial - Vec3(5, 5, 5)).norm() < 1e-12);
}

TEST_CASE("soft consensus: mu_q = 0 leaves attitudes untouched, mu = 0 is identity") {
  std::mt19937_64 rng(83);
  LocalFilterState s1 = state_with(1, {1, 2}, {random_pose(rng), random_pose(rng)});
  LocalFilterState s2 = state_with(2, {1, 2}, {random_pose(rng), random_pose(rng)});
  const std::vector<NodeId> common = {1, 2};

  const SoftResult att_frozen = soft_consensus_step(s1, {make_snapshot(s2, common)},
                                                    ConsensusWeights{0.0, 0.3, 0.3});
  for (int m = 0; m < 2; ++m) {
    CHECK((att_frozen.state.poses[m].real.c - s1.poses[m].real.c).norm() < 1e-12);
  }

  const SoftResult identity = soft_consensus_step(s1, {make_snapshot(s2, common)},
                                                  ConsensusWeights{0.0, 0.0, 0.0});
  for (int m = 0; m < 2; ++m) {
    CHECK((identity.state.poses[m].vec8() - s1.poses[m].vec8()).norm() < 1e-12);
    CHECK((identity.state.biases[m] - s1.biases[m]).norm() == 0.0);
  }
}

TEST_CASE("soft consensus preserves unit invariants and counts clamping") {
  std::mt19937_64 rng(84);
  LocalFilterState s1 = state_with(1, {1, 2}, {random_pose(rng), random_pose(rng)});
  LocalFilterState s2 = state_with(2, {1, 2}, {random_pose(rng), random_pose(rng)});
  const std::vector<NodeId> common = {1, 2};

  const SoftResult r = soft_consensus_step(s1, {make_snapshot(s2, common)},
                                           ConsensusWeights{1.0, 0.5, 0.5});
  for (int m = 0; m < 2; ++m) CHECK(is_unit_pose(r.state.poses[m], 1e-9));

  // The attitude product is a unit quaternion, so mu_q <= 1 keeps the
  // scaling radicand nonnegative even at the 180-degree boundary; the clamp
  // only guards floating-point drift and must not fire here.
  LocalFilterState s3 = s1;
  s3.order.owner = 2;
  const Quaternion own = s1.poses[0].real;
  s3.poses[0] = normalize_pose(
      DualQuaternion(quat_mul(own, rot_from_axis_angle(Vec3::UnitX(), M_PI)),
                     s1.poses[0].dual));
  const SoftResult boundary = soft_consensus_step(
      s1, {make_snapshot(s3, common)}, ConsensusWeights{1.0, 0.0, 0.0});
  CHECK(boundary.clamp_events <= 1);  // fires only on the eps above-1 side
  for (int m = 0; m < 2; ++m) CHECK(is_unit_pose(boundary.state.poses[m], 1e-9));
}

TEST_CASE("soft consensus validates snapshot senders and weights") {
  std::mt19937_64 rng(85);
  LocalFilterState s1 = state_with(1, {1, 2}, {random_pose(rng), random_pose(rng)});
  CHECK_THROWS_AS(soft_consensus_step(s1, {}, ConsensusWeights{0.1, 0.1, 0.1}),
                  std::invalid_argument);
  LocalFilterState s2 = state_with(2, {1, 2}, {random_pose(rng), random_pose(rng)});
  CHECK_THROWS_AS(soft_consensus_step(s1, {make_snapshot(s2, {1, 2})},
                                      ConsensusWeights{1.5, 0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("soft consensus is permutation equivariant") {
  std::mt19937_64 rng(96);
  // Physical entities A,B on a 2-node fleet, labelled (A=1,B=2) vs (A=2,B=1).
  const DualQuaternion a1 = random_pose(rng), a2 = random_pose(rng);
  const DualQuaternion b1 = random_pose(rng), b2 = random_pose(rng);
  // Observer A's estimates of (A,B) and observer B's estimates of (A,B).
  LocalFilterState a_first = state_with(1, {1, 2}, {a1, a2});
  LocalFilterState b_first = state_with(2, {1, 2}, {b1, b2});
  // Relabelled: A=2, B=1 -> slots swap.
  LocalFilterState a_second = state_with(2, {1, 2}, {a2, a1});
  LocalFilterState b_second = state_with(1, {1, 2}, {b2, b1});

  const ConsensusWeights w{0.5, 0.5, 0.5};
  const SoftResult orig =
      soft_consensus_step(a_first, {make_snapshot(b_first, {1, 2})}, w);
  const SoftResult relab =
      soft_consensus_step(a_second, {make_snapshot(b_second, {1, 2})}, w);
  CHECK((orig.state.poses[0].vec8() - relab.state.poses[1].vec8()).norm() < 1e-12);
  CHECK((orig.state.poses[1].vec8() - relab.state.poses[0].vec8()).norm() < 1e-12);
}

TEST_CASE("hard reshaping reproduces the example-fleet structure") {
  std::mt19937_64 rng(86);
  // Satellite 4 tracks {1,3,4}; its measurement reshaped for receivers 1
  // (tracking {1,2,4}) and 3 (tracking {2,3,4,5}).
  LocalFilterState s4 = state_with(
      4, {1, 3, 4}, {random_pose(rng), random_pose(rng), random_pose(rng)});
  const std::vector<DualQuaternion> truths = perturb(s4.poses, rng, 0.01);
  const MeasurementMatrix own =
      assemble_measurement(s4, noiseless_measurements(s4, truths));

  const Neighbourhood v1{1, {1, 2, 4}};
  const MeasurementMatrix m41 = reshape_for_receiver(own, v1);
  const MatX h41 = m41.H_reduced();
  REQUIRE(h41.rows() == 18);
  REQUIRE(h41.cols() == 36);
  // Row 1: relative measurement of node 1 -> blocks at node 1 and node 4.
  CHECK(h41.block<6, 6>(0, 0).cwiseAbs().maxCoeff() > 0.0);
  CHECK(h41.block<6, 6>(0, 24).cwiseAbs().maxCoeff() > 0.0);
  CHECK(h41.block<6, 6>(0, 12).cwiseAbs().maxCoeff() == 0.0);
  // Row 2: node 2, which satellite 4 does not measure -> zero row.
  CHECK(h41.middleRows(6, 6).cwiseAbs().maxCoeff() == 0.0);
  // Row 3: own-pose identity at node 4's column.
  CHECK((h41.block<6, 6>(12, 24) - Mat6::Identity()).cwiseAbs().maxCoeff() == 0.0);
  // z copies rows into the receiver layout with a zero middle block.
  const VecX z41 = m41.z();
  CHECK((z41.segment<6>(0) - own.rows[0].z).norm() == 0.0);
  CHECK(z41.segment<6>(6).norm() == 0.0);
  CHECK((z41.segment<6>(12) - own.rows[2].z).norm() == 0.0);

  const Neighbourhood v3{3, {2, 3, 4, 5}};
  const MeasurementMatrix m43 = reshape_for_receiver(own, v3);
  const MatX h43 = m43.H_reduced();
  REQUIRE(h43.rows() == 24);
  REQUIRE(h43.cols() == 48);
  CHECK(h43.middleRows(0, 6).cwiseAbs().maxCoeff() == 0.0);   // node 2 row
  CHECK(h43.middleRows(18, 6).cwiseAbs().maxCoeff() == 0.0);  // node 5 row
  CHECK(h43.block<6, 6>(6, 12).cwiseAbs().maxCoeff() > 0.0);  // rel 3 at node 3
  CHECK(h43.block<6, 6>(6, 24).cwiseAbs().maxCoeff() > 0.0);  // rel 3 at node 4
  CHECK((h43.block<6, 6>(12, 24) - Mat6::Identity()).cwiseAbs().maxCoeff() == 0.0);
  const VecX z43 = m43.z();
  CHECK(z43.segment<6>(0).norm() == 0.0);
  CHECK((z43.segment<6>(6) - own.rows[1].z).norm() == 0.0);
  CHECK((z43.segment<6>(12) - own.rows[2].z).norm() == 0.0);
  CHECK(z43.segment<6>(18).norm() == 0.0);

  // Receiver outside V_4 is rejected.
  CHECK_THROWS_AS(reshape_for_receiver(own, Neighbourhood{5, {3, 5}}),
                  std::invalid_argument);
}

TEST_CASE("reshape to self is the plain information pipeline") {
  std::mt19937_64 rng(87);
  LocalFilterState s = state_with(
      2, {1, 2, 3}, {random_pose(rng), random_pose(rng), random_pose(rng)});
  const std::vector<DualQuaternion> truths = perturb(s.poses, rng, 0.01);
  const MeasurementMatrix own = assemble_measurement(s, noiseless_measurements(s, truths));
  const InfoQuantities plain = info_quantities(own);
  const InfoPacket self = hard_prepare(own, s, s.order);
  CHECK((self.u - plain.u).norm() == 0.0);
  CHECK((self.U_reduced - plain.U_reduced).cwiseAbs().maxCoeff() == 0.0);
  CHECK((self.U_full - plain.U_full).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hard consensus equals the centrally pooled update on a K3 fleet") {
  std::mt19937_64 rng(88);
  // Complete graph, all satellites track {1,2,3} and agree on the estimates.
  std::vector<DualQuaternion> shared = {random_pose(rng), random_pose(rng),
                                        random_pose(rng)};
  const std::vector<DualQuaternion> truths = perturb(shared, rng, 0.01);

  std::vector<LocalFilterState> states;
  std::vector<MeasurementMatrix> mms;
  for (NodeId i = 1; i <= 3; ++i) {
    states.push_back(state_with(i, {1, 2, 3}, shared));
    mms.push_back(assemble_measurement(states.back(),
                                       noiseless_measurements(states.back(), truths)));
  }

  std::vector<InfoPacket> packets;
  for (int j = 0; j < 3; ++j) {
    packets.push_back(hard_prepare(mms[j], states[j], states[0].order));
  }
  const LocalFilterState fused = hard_aggregate_update(states[0], packets, false, false);

  // Central pool: stack all three measurement systems against the shared state.
  MatX h_all(18 * 3, 36);
  VecX z_all(18 * 3);
  MatX r_all = MatX::Zero(18 * 3, 18 * 3);
  for (int j = 0; j < 3; ++j) {
    h_all.middleRows(18 * j, 18) = mms[j].H_reduced();
    z_all.segment(18 * j, 18) = mms[j].z();
    for (int r = 0; r < 3; ++r) {
      r_all.block<6, 6>(18 * j + 6 * r, 18 * j + 6 * r) = mms[j].rows[r].R;
    }
  }
  const MatX r_inv = r_all.inverse();
  const VecX u_central = h_all.transpose() * r_inv * z_all;
  const MatX U_central = h_all.transpose() * r_inv * h_all;
  const LocalFilterState central = measurement_update(states[0], u_central, U_central);

  for (int m = 0; m < 3; ++m) {
    CHECK((fused.poses[m].vec8() - central.poses[m].vec8()).norm() < 1e-9);
    CHECK((fused.biases[m] - central.biases[m]).norm() < 1e-9);
  }
  CHECK((fused.covariance - central.covariance).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("duplicate measurements fuse into a strictly smaller trace") {
  std::mt19937_64 rng(89);
  std::vector<DualQuaternion> shared = {random_pose(rng), random_pose(rng)};
  const std::vector<DualQuaternion> truths = perturb(shared, rng, 0.01);
  LocalFilterState s1 = state_with(1, {1, 2}, shared);
  LocalFilterState s2 = state_with(2, {1, 2}, shared);
  const MeasurementMatrix m1 = assemble_measurement(s1, noiseless_measurements(s1, truths));
  const MeasurementMatrix m2 = assemble_measurement(s2, noiseless_measurements(s2, truths));

  const InfoQuantities q1 = info_quantities(m1);
  const LocalFilterState solo = measurement_update(s1, q1.u, q1.U_reduced);

  const std::vector<InfoPacket> packets = {hard_prepare(m1, s1, s1.order),
                                           hard_prepare(m2, s2, s1.order)};
  const LocalFilterState fused = hard_aggregate_update(s1, packets, false, false);
  CHECK(fused.covariance.trace() < solo.covariance.trace());
}

TEST_CASE("stubborn leaders ignore neighbour packets") {
  std::mt19937_64 rng(90);
  std::vector<DualQuaternion> shared = {random_pose(rng), random_pose(rng)};
  const std::vector<DualQuaternion> truths = perturb(shared, rng, 0.02);
  LocalFilterState s1 = state_with(1, {1, 2}, shared);
  LocalFilterState s2 = state_with(2, {1, 2}, shared);
  const MeasurementMatrix m1 = assemble_measurement(s1, noiseless_measurements(s1, truths));
  const MeasurementMatrix m2 = assemble_measurement(s2, noiseless_measurements(s2, truths));

  const std::vector<InfoPacket> packets = {hard_prepare(m1, s1, s1.order),
                                           hard_prepare(m2, s2, s1.order)};
  const LocalFilterState stubborn = hard_aggregate_update(s1, packets, true, true);

  const InfoQuantities own = info_quantities(m1);
  const LocalFilterState own_only = measurement_update(s1, own.u, own.U_reduced);
  CHECK((stubborn.covariance - own_only.covariance).cwiseAbs().maxCoeff() < 1e-14);
  for (int m = 0; m < 2; ++m) {
    CHECK((stubborn.poses[m].vec8() - own_only.poses[m].vec8()).norm() < 1e-14);
  }

  // A non-leader with the stubborn flag still fuses.
  const LocalFilterState follower = hard_aggregate_update(s1, packets, true, false);
  CHECK(follower.covariance.trace() < own_only.covariance.trace());
}

TEST_CASE("synthesized absolute pose cancels exactly for exact inputs") {
  std::mt19937_64 rng(91);
  // Satellite 2 on a path 1-2-3: estimates of neighbours 1 and 3 are exact,
  // relative measurements noiseless -> the synthesized pose is the truth.
  std::vector<DualQuaternion> truths = {random_pose(rng), random_pose(rng),
                                        random_pose(rng)};
  LocalFilterState s = state_with(2, {1, 2, 3}, truths);
  const MeasurementSet meas = noiseless_measurements(s, truths);

  const DualQuaternion synth = synthesize_absolute_pose(s, meas);
  const PoseParts got = pose_to_parts(synth);
  const PoseParts want = pose_to_parts(truths[1]);
  CHECK((rotation_matrix(got.attitude) - rotation_matrix(want.attitude))
            .cwiseAbs()
            .maxCoeff() < 1e-9);
  CHECK((got.r_inertial - want.r_inertial).norm() < 1e-9);
}

TEST_CASE("single neighbour: average equals the one synthesized pose") {
  std::mt19937_64 rng(92);
  std::vector<DualQuaternion> truths = {random_pose(rng), random_pose(rng)};
  LocalFilterState s = state_with(2, {1, 2}, truths);
  const MeasurementSet meas = noiseless_measurements(s, truths);

  const DualQuaternion synth = synthesize_absolute_pose(s, meas);
  const RelativePoseMeasurement& rel = meas.relative.at(1);
  const Quaternion q_abs = quat_mul(s.poses[0].real, rel.attitude.conj());
  const Vec3 r_abs =
      pose_to_parts(s.poses[0]).r_inertial -
      quat_mul(quat_mul(q_abs, Quaternion::pure(rel.position)), q_abs.conj()).vec();
  CHECK((rotation_matrix(pose_to_parts(synth).attitude) - rotation_matrix(q_abs))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK((pose_to_parts(synth).r_inertial - r_abs).norm() < 1e-10);
}

TEST_CASE("symmetric neighbour position errors cancel in the synthesized position") {
  std::mt19937_64 rng(93);
  std::vector<DualQuaternion> truths = {random_pose(rng), random_pose(rng),
                                        random_pose(rng)};
  const Vec3 e(0.2, -0.1, 0.15);
  std::vector<DualQuaternion> est = truths;
  est[0] = pose_from_parts(pose_to_parts(truths[0]).attitude,
                           pose_to_parts(truths[0]).r_inertial + e);
  est[2] = pose_from_parts(pose_to_parts(truths[2]).attitude,
                           pose_to_parts(truths[2]).r_inertial - e);
  LocalFilterState s = state_with(2, {1, 2, 3}, est);
  const MeasurementSet meas = noiseless_measurements(s, truths);

  const DualQuaternion synth = synthesize_absolute_pose(s, meas);
  CHECK((pose_to_parts(synth).r_inertial - pose_to_parts(truths[1]).r_inertial).norm() <
        1e-10);
}

TEST_CASE("isolated follower cannot synthesize") {
  std::mt19937_64 rng(94);
  LocalFilterState s = state_with(1, {1}, {random_pose(rng)});
  MeasurementSet empty;
  CHECK_THROWS_AS(synthesize_absolute_pose(s, empty), std::invalid_argument);
}

TEST_CASE("hard aggregation validates packet coverage") {
  std::mt19937_64 rng(95);
  std::vector<DualQuaternion> shared = {random_pose(rng), random_pose(rng)};
  LocalFilterState s1 = state_with(1, {1, 2}, shared);
  const MeasurementMatrix m1 =
      assemble_measurement(s1, noiseless_measurements(s1, shared));
  std::vector<InfoPacket> only_own = {hard_prepare(m1, s1, s1.order)};
  CHECK_THROWS_AS(hard_aggregate_update(s1, only_own, false, false),
                  std::invalid_argument);
}
