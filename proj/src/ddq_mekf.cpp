#include "dqfleet/ddq_mekf.hpp"

#include <stdexcept>

#include "dqfleet/info_filter.hpp"
#include "dqfleet/rigid_body.hpp"

namespace dqf {

namespace {
const Mat4 kConjMat = (Mat4() << 1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1).finished();
}

LocalFilterState make_local_state(const Neighbourhood& order,
                                  const std::vector<DualQuaternion>& poses,
                                  const Mat12& P0_per_node) {
  if (static_cast<int>(poses.size()) != order.size()) {
    throw std::invalid_argument("pose count does not match the tracked set");
  }
  LocalFilterState s;
  s.order = order;
  s.poses = poses;
  for (const auto& p : s.poses) check_unit_pose(p, 1e-6);
  s.biases.assign(order.size(), Vec6::Zero());
  const int n = 12 * order.size();
  s.covariance = MatX::Zero(n, n);
  for (int m = 0; m < order.size(); ++m) {
    s.covariance.block<12, 12>(12 * m, 12 * m) = P0_per_node;
  }
  return s;
}

StackedVelocity stack_velocity(const std::map<NodeId, Vec6>& measured,
                               const Neighbourhood& order) {
  StackedVelocity out;
  out.blocks.reserve(order.size());
  for (NodeId j : order.members) {
    const auto it = measured.find(j);
    if (it == measured.end()) {
      throw std::invalid_argument("velocity measurement missing for a tracked node");
    }
    out.blocks.push_back(it->second);
  }
  if (measured.size() != static_cast<size_t>(order.size())) {
    throw std::invalid_argument("velocity measurements for untracked nodes");
  }
  return out;
}

StackedVelocity estimate_velocity(const StackedVelocity& measured,
                                  const std::vector<Vec6>& biases) {
  if (measured.blocks.size() != biases.size()) {
    throw std::invalid_argument("stacked velocity and bias lengths differ");
  }
  StackedVelocity out;
  out.blocks.reserve(measured.blocks.size());
  for (size_t m = 0; m < measured.blocks.size(); ++m) {
    out.blocks.push_back(measured.blocks[m] - biases[m]);
  }
  return out;
}

LocalFilterState time_update(const LocalFilterState& state, const StackedVelocity& w_est,
                             const NodeNoise& noise, double dt) {
  const int K = state.tracked();
  if (static_cast<int>(w_est.blocks.size()) != K) {
    throw std::invalid_argument("stacked velocity does not match the tracked set");
  }
  LocalFilterState out = state;
  std::vector<Mat12> phi(K);
  for (int m = 0; m < K; ++m) {
    const DualVelocity w = DualVelocity::from_vec6(w_est.blocks[m]);
    out.poses[m] = propagate_pose(state.poses[m], w, dt);
    phi[m] = Mat12::Identity() + error_state_F(w) * dt;
  }

  // Phi is block diagonal, so Phi P Phi^T goes blockwise.
  MatX p = MatX::Zero(12 * K, 12 * K);
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      p.block<12, 12>(12 * a, 12 * b) =
          phi[a] * state.covariance.block<12, 12>(12 * a, 12 * b) * phi[b].transpose();
    }
  }
  // G Q G^T = blkdiag{1/4 Q_vel, Q_bias} per node.
  for (int m = 0; m < K; ++m) {
    p.block<6, 6>(12 * m, 12 * m) += dt * 0.25 * noise.Q_velocity;
    p.block<6, 6>(12 * m + 6, 12 * m + 6) += dt * noise.Q_bias;
  }
  out.covariance = symmetrize(p);
  return out;
}

RelativePoseJacobian jacobian_relative_pose(const DualQuaternion& pose_i,
                                            const DualQuaternion& pose_k) {
  const Quaternion qi = pose_i.real;
  const Quaternion pi = pose_i.dual;
  const Quaternion qk = pose_k.real;
  const Quaternion pk = pose_k.dual;

  const Quaternion rel = quat_mul(qi.conj(), qk);          // q̂_i* q̂_k
  const Quaternion rel_back = quat_mul(qk.conj(), qi);     // q̂_k* q̂_i
  const Quaternion a = quat_mul(quat_mul(qi.conj(), quat_mul(pk, qk.conj())), qi);
  const Quaternion b = quat_mul(qi.conj(), pi);

  RelativePoseJacobian j;
  j.q_wrt_dq_i = rqm(rel) * kConjMat;
  j.q_wrt_dq_k = lqm(rel);
  j.r_wrt_dp_k = 2.0 * lqm(rel) * rqm(rel_back);
  j.r_wrt_dp_i = -2.0 * Mat4::Identity();
  j.r_wrt_dq_k = 2.0 * lqm(quat_mul(qi.conj(), pk)) * rqm(rel_back) *
                 (Mat4::Identity() + kConjMat);
  j.r_wrt_dq_i = 2.0 * (lqm(a) + rqm(a) * kConjMat) -
                 2.0 * (lqm(b) * (2.0 * Mat4::Identity() + kConjMat) + rqm(b) * kConjMat);
  return j;
}

namespace {
Quaternion align_sign(const Quaternion& measured, const Quaternion& predicted) {
  return measured.c.dot(predicted.c) < 0.0 ? -measured : measured;
}

Mat6 scaled_reduced_block(const Mat4& hq, const Mat4& hr_q, const Mat4& hr_p) {
  Mat6 h = Mat6::Zero();
  h.block<3, 3>(0, 0) = 0.5 * RelativePoseJacobian::reduced(hq);
  h.block<3, 3>(3, 0) = 0.25 * RelativePoseJacobian::reduced(hr_q);
  h.block<3, 3>(3, 3) = 0.25 * RelativePoseJacobian::reduced(hr_p);
  return h;
}

Mat8 scaled_full_block(const Mat4& hq, const Mat4& hr_q, const Mat4& hr_p) {
  Mat8 h = Mat8::Zero();
  h.block<4, 4>(0, 0) = 0.5 * hq;
  h.block<4, 4>(4, 0) = 0.25 * hr_q;
  h.block<4, 4>(4, 4) = 0.25 * hr_p;
  return h;
}
}  // namespace

MeasurementMatrix assemble_measurement(const LocalFilterState& state,
                                       const MeasurementSet& meas) {
  if (!meas.absolute) {
    throw std::invalid_argument("absolute pose measurement missing (real or synthesized)");
  }
  const NodeId owner = state.order.owner;
  for (NodeId j : state.order.members) {
    if (j != owner && meas.relative.find(j) == meas.relative.end()) {
      throw std::invalid_argument("relative measurement missing for a neighbour");
    }
  }
  if (meas.relative.size() + 1 != static_cast<size_t>(state.order.size())) {
    throw std::invalid_argument("relative measurements for untracked nodes");
  }

  MeasurementMatrix mm;
  mm.observer = owner;
  mm.layout = state.order;
  mm.rows.resize(state.order.size());

  const DualQuaternion& own = state.own_pose();
  const Vec3 r_own = pose_to_parts(own).r_inertial;

  for (int slot = 0; slot < state.order.size(); ++slot) {
    const NodeId j = state.order.members[slot];
    MeasurementRow& row = mm.rows[slot];
    if (j == owner) {
      row.kind = MeasurementRow::Kind::Own;
      DualQuaternion q_m = meas.absolute->pose;
      if (quat_mul(own.real.conj(), q_m.real).s() < 0.0) q_m = dq_scale(-1.0, q_m);
      row.z = dq_mul(own.conj(), q_m).vec6();
      row.R = Mat6::Zero();
      row.R.block<3, 3>(0, 0) = meas.absolute->R_attitude;
      row.R.block<3, 3>(3, 3) = 0.25 * meas.absolute->R_position;
      row.h_self = Mat6::Identity();
      row.hf_self = Mat8::Identity();
    } else {
      const RelativePoseMeasurement& rel = meas.relative.at(j);
      const DualQuaternion& target = state.pose_of(j);
      row.kind = MeasurementRow::Kind::Relative;

      const Quaternion q_rel_pred = quat_mul(own.real.conj(), target.real);
      const Quaternion q_rel_m = align_sign(rel.attitude, q_rel_pred);
      const Vec3 r_pred = quat_mul(quat_mul(own.real.conj(),
                                            Quaternion::pure(pose_to_parts(target).r_inertial - r_own)),
                                   own.real)
                              .vec();
      row.z.head<3>() = 0.5 * (q_rel_m.vec() - q_rel_pred.vec());
      row.z.tail<3>() = 0.25 * (rel.position - r_pred);
      row.R = Mat6::Zero();
      row.R.block<3, 3>(0, 0) = 0.25 * rel.R_attitude;
      row.R.block<3, 3>(3, 3) = (1.0 / 16.0) * rel.R_position;

      const RelativePoseJacobian jac = jacobian_relative_pose(own, target);
      row.h_self = scaled_reduced_block(jac.q_wrt_dq_i, jac.r_wrt_dq_i, jac.r_wrt_dp_i);
      row.h_node = scaled_reduced_block(jac.q_wrt_dq_k, jac.r_wrt_dq_k, jac.r_wrt_dp_k);
      row.hf_self = scaled_full_block(jac.q_wrt_dq_i, jac.r_wrt_dq_i, jac.r_wrt_dp_i);
      row.hf_node = scaled_full_block(jac.q_wrt_dq_k, jac.r_wrt_dq_k, jac.r_wrt_dp_k);
    }
  }
  return mm;
}

VecX MeasurementMatrix::z() const {
  VecX out = VecX::Zero(6 * rows.size());
  for (size_t r = 0; r < rows.size(); ++r) out.segment<6>(6 * r) = rows[r].z;
  return out;
}

MatX MeasurementMatrix::H_reduced() const {
  const int K = static_cast<int>(rows.size());
  MatX h = MatX::Zero(6 * K, 12 * K);
  const int self_slot = layout.slot_of(observer);
  for (int r = 0; r < K; ++r) {
    const MeasurementRow& row = rows[r];
    if (row.kind == MeasurementRow::Kind::Absent) continue;
    h.block<6, 6>(6 * r, 12 * self_slot) = row.h_self;
    if (row.kind == MeasurementRow::Kind::Relative) {
      h.block<6, 6>(6 * r, 12 * r) = row.h_node;
    }
  }
  return h;
}

MatX MeasurementMatrix::H_full() const {
  const int K = static_cast<int>(rows.size());
  MatX h = MatX::Zero(8 * K, 14 * K);
  const int self_slot = layout.slot_of(observer);
  for (int r = 0; r < K; ++r) {
    const MeasurementRow& row = rows[r];
    if (row.kind == MeasurementRow::Kind::Absent) continue;
    h.block<8, 8>(8 * r, 14 * self_slot) = row.hf_self;
    if (row.kind == MeasurementRow::Kind::Relative) {
      h.block<8, 8>(8 * r, 14 * r) = row.hf_node;
    }
  }
  return h;
}

namespace {
/// Extends a 6x6 residual covariance to 8x8 quaternion coordinates with
/// `padding` on the scalar-row diagonal.
Mat8 extend_R(const Mat6& r, double padding) {
  Mat8 out = Mat8::Zero();
  out(0, 0) = padding;
  out(4, 4) = padding;
  out.block<3, 3>(1, 1) = r.block<3, 3>(0, 0);
  out.block<3, 3>(1, 5) = r.block<3, 3>(0, 3);
  out.block<3, 3>(5, 1) = r.block<3, 3>(3, 0);
  out.block<3, 3>(5, 5) = r.block<3, 3>(3, 3);
  return out;
}
}  // namespace

InfoQuantities info_quantities(const MeasurementMatrix& mm, double padding) {
  const int K = static_cast<int>(mm.rows.size());
  InfoQuantities q;
  q.u = VecX::Zero(12 * K);
  q.U_reduced = MatX::Zero(12 * K, 12 * K);
  q.U_full = MatX::Zero(14 * K, 14 * K);
  const int self_slot = mm.layout.slot_of(mm.observer);

  for (int r = 0; r < K; ++r) {
    const MeasurementRow& row = mm.rows[r];
    if (row.kind == MeasurementRow::Kind::Absent) continue;

    Eigen::LLT<Mat6> llt(row.R);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("measurement covariance block is not positive definite");
    }
    const Vec6 rz = llt.solve(row.z);

    struct Col {
      int slot;
      const Mat6* h;
      const Mat8* hf;
    };
    std::vector<Col> cols;
    cols.push_back({self_slot, &row.h_self, &row.hf_self});
    if (row.kind == MeasurementRow::Kind::Relative) {
      cols.push_back({r, &row.h_node, &row.hf_node});
    }

    for (const Col& c : cols) {
      q.u.segment<6>(12 * c.slot) += c.h->transpose() * rz;
      for (const Col& d : cols) {
        q.U_reduced.block<6, 6>(12 * c.slot, 12 * d.slot) +=
            c.h->transpose() * llt.solve(*d.h);
      }
    }

    const Mat8 r_ext = extend_R(row.R, padding);
    Eigen::LLT<Mat8> llt8(r_ext);
    if (llt8.info() != Eigen::Success) {
      throw std::invalid_argument("extended covariance block is not positive definite");
    }
    for (const Col& c : cols) {
      for (const Col& d : cols) {
        q.U_full.block<8, 8>(14 * c.slot, 14 * d.slot) +=
            c.hf->transpose() * llt8.solve(*d.hf);
      }
    }
  }
  return q;
}

LocalFilterState measurement_update(const LocalFilterState& state, const VecX& u,
                                    const MatX& U_reduced) {
  const int K = state.tracked();
  if (u.size() != 12 * K || U_reduced.rows() != 12 * K || U_reduced.cols() != 12 * K) {
    throw std::invalid_argument("information quantities do not match the state layout");
  }
  const InfoUpdate up =
      info_update_from_quantities(VecX::Zero(12 * K), state.covariance, u, U_reduced);

  LocalFilterState out = state;
  for (int m = 0; m < K; ++m) {
    const DualQuaternion corr = extend_error_to_unit(up.delta_x.segment<6>(12 * m));
    out.poses[m] = normalize_pose(dq_mul(state.poses[m], corr));
    out.biases[m] += up.delta_x.segment<6>(12 * m + 6);
  }
  out.covariance = symmetrize(up.P_plus);
  return out;
}

}  // namespace dqf
