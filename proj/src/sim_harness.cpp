#include "dqfleet/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "dqfleet/mekf_single.hpp"

namespace dqf {

std::string to_string(ConsensusMode mode) {
  switch (mode) {
    case ConsensusMode::None: return "none";
    case ConsensusMode::Soft: return "soft";
    case ConsensusMode::HardSoft: return "hardsoft";
  }
  return "?";
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Sweep: return "sweep";
    case ScenarioKind::Asteroid: return "asteroid";
    case ScenarioKind::Leaders: return "leaders";
    case ScenarioKind::SingleDemo: return "single-demo";
  }
  return "?";
}

NoiseModel noise_from_snr(double snr, double position_scale) {
  if (!(snr > 0.0)) throw std::invalid_argument("snr must be positive");
  NoiseModel n;
  n.std_q = 1.0 / snr;
  n.std_r = position_scale / snr;
  n.Q_velocity = Mat6::Zero();
  n.Q_bias = Mat6::Zero();
  n.Q_bias.block<3, 3>(0, 0) = (1e-3 / (snr * snr)) * Mat3::Identity();
  n.Q_bias.block<3, 3>(3, 3) = (1e-1 / (snr * snr)) * Mat3::Identity();
  n.P0 = Mat12::Zero();
  n.P0.block<6, 6>(0, 0) = 1e-1 * Mat6::Identity();
  n.P0.block<6, 6>(6, 6) = 1e-2 * Mat6::Identity();
  return n;
}

void ScenarioConfig::validate() const {
  if (n_sats < 1) throw std::invalid_argument("sats must be >= 1");
  if (!(rate_hz > 0.0)) throw std::invalid_argument("rate must be positive");
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
  if (n_seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  for (double f : leader_fractions) {
    if (!(f > 0.0) || f > 1.0) {
      throw std::invalid_argument("leader fraction must be in (0, 1]");
    }
  }
  for (double s : snrs) {
    if (!(s > 0.0)) throw std::invalid_argument("snr must be positive");
  }
  if (kind == ScenarioKind::Leaders && mode == ConsensusMode::None) {
    throw std::invalid_argument("leaders scenario requires a cooperative mode");
  }
}

std::vector<Vec3> fibonacci_lattice(int n, double radius) {
  if (n < 1) throw std::invalid_argument("lattice needs at least one point");
  std::vector<Vec3> pts;
  pts.reserve(n);
  if (n == 1) {
    pts.emplace_back(0.0, 0.0, radius);
    return pts;
  }
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    pts.emplace_back(radius * rho * std::cos(phi), radius * rho * std::sin(phi), radius * z);
  }
  return pts;
}

LqrGains solve_lqr_gains(double q, double r) {
  if (!(q > 0.0) || !(r > 0.0)) {
    throw std::invalid_argument("LQR weights must be positive");
  }
  // Per-axis CARE for A=[[0,1],[0,0]], B=[0;1]: p12 = sqrt(qr),
  // p22 = sqrt(r(2 p12 + q)).
  const double p12 = std::sqrt(q * r);
  const double p22 = std::sqrt(r * (2.0 * p12 + q));
  return LqrGains{p12 / r, p22 / r};
}

Mat12 lqr_riccati_solution(double q, double r) {
  const double p12 = std::sqrt(q * r);
  const double p22 = std::sqrt(r * (2.0 * p12 + q));
  const double p11 = p12 * p22 / r;
  Mat12 p = Mat12::Zero();
  for (int i = 0; i < 6; ++i) {
    p(i, i) = p11;
    p(i, i + 6) = p12;
    p(i + 6, i) = p12;
    p(i + 6, i + 6) = p22;
  }
  return p;
}

DualForce lqr_track(const DualQuaternion& pose_est, const DualVelocity& vel_est,
                    const DualQuaternion& target_pose, const RigidBodyParams& body,
                    const LqrGains& gains) {
  check_unit_pose(target_pose, 1e-6);
  const PoseParts est = pose_to_parts(pose_est);
  const PoseParts tgt = pose_to_parts(target_pose);

  Quaternion q_err = quat_mul(tgt.attitude.conj(), est.attitude);
  q_err = canonical(q_err);
  const Vec3 theta = 2.0 * q_err.vec();
  const Vec3 alpha_cmd = -(gains.k_pos * theta + gains.k_vel * vel_est.angular);

  const Vec3 r_err = est.r_inertial - tgt.r_inertial;
  const Vec3 v_inertial = rotation_matrix(est.attitude) * vel_est.linear;
  const Vec3 a_cmd = -(gains.k_pos * r_err + gains.k_vel * v_inertial);

  DualForce f;
  f.torque = body.inertia * alpha_cmd;
  f.force = body.mass * (rotation_matrix(est.attitude).transpose() * a_cmd);
  return f;
}

Quaternion pointing_attitude(const Vec3& position, const Vec3& focus) {
  Vec3 b3 = focus - position;
  const double n = b3.norm();
  if (n < 1e-9) throw std::invalid_argument("pointing target coincides with the position");
  b3 /= n;
  Vec3 ref = Vec3::UnitZ();
  if (std::abs(ref.dot(b3)) > 0.99) ref = Vec3::UnitX();
  const Vec3 b1 = (ref - ref.dot(b3) * b3).normalized();
  const Vec3 b2 = b3.cross(b1);
  Mat3 rot;
  rot.col(0) = b1;
  rot.col(1) = b2;
  rot.col(2) = b3;
  return quat_from_rotation_matrix(rot);
}

ErrorSample estimate_errors(const RigidBodyState& truth, const DualQuaternion& pose_est,
                            const DualVelocity& vel_est) {
  ErrorSample e;
  const Quaternion dq = quat_mul(pose_est.real.conj(), truth.pose.real);
  e.att = 2.0 * std::acos(std::min(1.0, std::abs(dq.s())));
  e.pos = (pose_to_parts(pose_est).r_inertial - pose_to_parts(truth.pose).r_inertial).norm();
  e.angvel = (vel_est.angular - truth.velocity.angular).norm();
  e.linvel = (vel_est.linear - truth.velocity.linear).norm();
  return e;
}

namespace {

Quartiles quartiles_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto median_of = [](const std::vector<double>& s, size_t lo, size_t hi) {
    const size_t n = hi - lo;
    return n % 2 == 1 ? s[lo + n / 2] : 0.5 * (s[lo + n / 2 - 1] + s[lo + n / 2]);
  };
  Quartiles q;
  const size_t n = v.size();
  q.median = median_of(v, 0, n);
  q.q1 = median_of(v, 0, n / 2);
  q.q3 = median_of(v, n % 2 == 0 ? n / 2 : n / 2 + 1, n);
  if (n == 1) q.q1 = q.q3 = q.median;
  return q;
}

}  // namespace

RunMetrics compute_metrics(const std::vector<std::vector<ErrorSample>>& samples,
                           int first_round, int last_round) {
  RunMetrics m;
  if (samples.empty()) return m;
  const int n_sats = static_cast<int>(samples.front().size());
  first_round = std::max(0, first_round);
  last_round = std::min<int>(last_round, static_cast<int>(samples.size()));
  const int count = std::max(1, last_round - first_round);

  m.per_sat_rms.assign(n_sats, {0.0, 0.0, 0.0, 0.0});
  for (int r = first_round; r < last_round; ++r) {
    for (int s = 0; s < n_sats; ++s) {
      const ErrorSample& e = samples[r][s];
      m.per_sat_rms[s][0] += e.att * e.att;
      m.per_sat_rms[s][1] += e.pos * e.pos;
      m.per_sat_rms[s][2] += e.angvel * e.angvel;
      m.per_sat_rms[s][3] += e.linvel * e.linvel;
    }
  }
  for (auto& sat : m.per_sat_rms) {
    for (double& x : sat) x = std::sqrt(x / count);
  }
  for (int k = 0; k < 4; ++k) {
    std::vector<double> vals;
    vals.reserve(n_sats);
    for (const auto& sat : m.per_sat_rms) vals.push_back(sat[k]);
    m.fleet[k] = quartiles_of(std::move(vals));
  }
  return m;
}

namespace {

Vec3 draw_vec3(std::mt19937_64& rng, double std) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Vec3(n(rng), n(rng), n(rng)) * std;
}

Quaternion draw_attitude(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return normalized(Quaternion(n(rng), n(rng), n(rng), n(rng)));
}

/// Pose offset consistent with the 12x12 P0 pose block: draws the reduced
/// 6-dim error and restores the scalar parts.
DualQuaternion draw_pose_offset(std::mt19937_64& rng, const Mat12& p0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec6 e;
  for (int i = 0; i < 6; ++i) e[i] = n(rng) * std::sqrt(p0(i, i));
  Vec3 r = e.head<3>();
  if (r.norm() > 0.9) r *= 0.9 / r.norm();
  e.head<3>() = r;
  return extend_error_to_unit(e);
}

struct NoiseDraws {
  std::vector<Vec3> abs_att;                  // per sat
  std::vector<Vec3> abs_pos;                  // per sat
  std::map<std::pair<NodeId, NodeId>, Vec3> rel_att;  // (observer, target)
  std::map<std::pair<NodeId, NodeId>, Vec3> rel_pos;
};

/// Draws every measurement noise of the round in one canonical order so
/// modes see identical data.
NoiseDraws draw_round_noise(std::mt19937_64& rng, const FleetGraph& g,
                            const NoiseModel& noise) {
  NoiseDraws d;
  const int l = g.size();
  d.abs_att.resize(l + 1);
  d.abs_pos.resize(l + 1);
  for (NodeId i = 1; i <= l; ++i) {
    Vec3 nq = draw_vec3(rng, noise.std_q);
    if (nq.norm() > 0.999) nq *= 0.999 / nq.norm();  // sensor saturation
    d.abs_att[i] = nq;
    d.abs_pos[i] = draw_vec3(rng, noise.std_r);
  }
  for (NodeId i = 1; i <= l; ++i) {
    for (NodeId k : g.neighbours(i)) {
      Vec3 nq = draw_vec3(rng, noise.std_q);
      if (nq.norm() > 0.999) nq *= 0.999 / nq.norm();
      d.rel_att[{i, k}] = nq;
      d.rel_pos[{i, k}] = draw_vec3(rng, noise.std_r);
    }
  }
  return d;
}

AbsolutePoseMeasurement make_abs_measurement(const RigidBodyState& truth, const Vec3& n_att,
                                             const Vec3& n_pos, const NoiseModel& noise) {
  const Quaternion dqn(recover_scalar(n_att), n_att);
  const PoseParts parts = pose_to_parts(truth.pose);
  AbsolutePoseMeasurement m;
  m.pose = pose_from_parts(normalized(quat_mul(parts.attitude, dqn)),
                           parts.r_inertial + n_pos);
  m.R_attitude = noise.std_q * noise.std_q * Mat3::Identity();
  m.R_position = noise.std_r * noise.std_r * Mat3::Identity();
  return m;
}

RelativePoseMeasurement make_rel_measurement(const RigidBodyState& obs,
                                             const RigidBodyState& tgt, const Vec3& n_att,
                                             const Vec3& n_pos, const NoiseModel& noise) {
  const Quaternion qi = obs.pose.real;
  const Quaternion qk = tgt.pose.real;
  const Vec3 dr = pose_to_parts(tgt.pose).r_inertial - pose_to_parts(obs.pose).r_inertial;
  RelativePoseMeasurement m;
  m.attitude = normalized(
      quat_mul(quat_mul(qi.conj(), qk), Quaternion(recover_scalar(n_att), n_att)));
  m.position = quat_mul(quat_mul(qi.conj(), Quaternion::pure(dr)), qi).vec() + n_pos;
  m.R_attitude = noise.std_q * noise.std_q * Mat3::Identity();
  m.R_position = noise.std_r * noise.std_r * Mat3::Identity();
  return m;
}

NoiseConfig single_filter_noise(const NoiseModel& noise) {
  NoiseConfig c;
  c.Q_velocity = noise.Q_velocity;
  c.Q_bias = noise.Q_bias;
  c.R = Mat6::Zero();
  c.R.block<3, 3>(0, 0) = noise.std_q * noise.std_q * Mat3::Identity();
  c.R.block<3, 3>(3, 3) = 0.25 * noise.std_r * noise.std_r * Mat3::Identity();
  return c;
}

}  // namespace

RunRecord run_fleet(const FleetRunSpec& spec) {
  const int l = spec.n_sats;
  std::mt19937_64 setup_rng(spec.seed * 0x9E3779B97F4A7C15ull + 0xA5);
  std::mt19937_64 meas_rng(spec.seed * 0xC2B2AE3D27D4EB4Full + 0xB7);

  const FleetGraph graph =
      l == 1 ? FleetGraph(1, {})
             : FleetGraph::random_connected(l, spec.edge_probability, setup_rng());

  // Leader selection, uniform without replacement.
  std::vector<NodeId> ids(l);
  std::iota(ids.begin(), ids.end(), 1);
  std::shuffle(ids.begin(), ids.end(), setup_rng);
  const int n_leaders =
      std::clamp(static_cast<int>(std::lround(spec.leader_fraction * l)), 1, l);
  LeaderSet leaders;
  leaders.leaders.assign(ids.begin(), ids.begin() + n_leaders);
  std::sort(leaders.leaders.begin(), leaders.leaders.end());

  const bool asteroid = !spec.targets.empty();

  // Truth initial conditions.
  std::vector<RigidBodyState> truth(l + 1);
  std::vector<Vec3> start_pos(l + 1);
  for (NodeId i = 1; i <= l; ++i) {
    RigidBodyState s;
    if (asteroid) {
      const int cols = static_cast<int>(std::ceil(std::sqrt(double(l))));
      const int row = (i - 1) / cols;
      const int col = (i - 1) % cols;
      const double half = (cols - 1) / 2.0;
      start_pos[i] = Vec3(spec.base.grid_spacing * (col - half),
                          spec.base.grid_spacing * (row - half), spec.base.plane_distance);
      s.pose = pose_from_parts(pointing_attitude(start_pos[i], Vec3::Zero()), start_pos[i]);
      s.velocity = DualVelocity();
      (void)draw_attitude(setup_rng);  // keep the draw order uniform across scenarios
      (void)draw_vec3(setup_rng, 1.0);
      (void)draw_vec3(setup_rng, 1.0);
    } else {
      const double ang = 2.0 * M_PI * (i - 1) / l;
      start_pos[i] = spec.base.position_scale * Vec3(std::cos(ang), std::sin(ang), 0.0);
      s.pose = pose_from_parts(draw_attitude(setup_rng), start_pos[i]);
      s.velocity = DualVelocity(draw_vec3(setup_rng, spec.base.tumble_rate_std),
                                draw_vec3(setup_rng, spec.base.drift_vel_std));
    }
    truth[i] = s;
  }

  const RigidBodyParams body(spec.base.mass, spec.base.inertia_diag.asDiagonal());

  // Initial estimates: truth composed with P0-consistent offsets, drawn for
  // every (observer, tracked node) pair in canonical order.
  std::vector<Neighbourhood> hoods(l + 1);
  std::vector<std::vector<std::vector<NodeId>>> common(l + 1);
  for (NodeId i = 1; i <= l; ++i) {
    hoods[i] = l == 1 ? Neighbourhood{i, {i}} : neighbourhood(graph, i);
    common[i].resize(l + 1);
    for (NodeId k = 1; k <= l; ++k) {
      if (k != i && l > 1 && graph.has_edge(i, k)) {
        common[i][k] = common_members(graph, i, k);
      }
    }
  }
  std::vector<LocalFilterState> local(l + 1);
  std::vector<SingleFilterState> single(l + 1);
  for (NodeId i = 1; i <= l; ++i) {
    std::vector<DualQuaternion> poses;
    for (NodeId j : hoods[i].members) {
      const DualQuaternion offset = draw_pose_offset(setup_rng, spec.noise.P0);
      poses.push_back(spec.exact_init ? truth[j].pose
                                      : normalize_pose(dq_mul(truth[j].pose, offset)));
    }
    if (spec.mode == ConsensusMode::None) {
      SingleFilterState s = make_initial_state(poses[hoods[i].slot_of(i)],
                                               SensorScenario::PoseOnly);
      s.covariance = spec.noise.P0;
      single[i] = s;
    } else {
      local[i] = make_local_state(hoods[i], poses, spec.noise.P0);
    }
  }

  const NoiseConfig single_cfg = single_filter_noise(spec.noise);
  const NodeNoise node_noise{spec.noise.Q_velocity, spec.noise.Q_bias};
  const LqrGains gains = asteroid ? solve_lqr_gains(spec.lqr_q, spec.lqr_r) : LqrGains{};

  RunRecord rec;
  rec.mode = to_string(spec.mode) + (spec.stubborn ? "-stubborn" : "");
  rec.n_sats = l;
  rec.edge_probability = spec.edge_probability;
  rec.leader_fraction = spec.leader_fraction;
  rec.stubborn = spec.stubborn;
  rec.seed = spec.seed;
  rec.samples.reserve(spec.rounds);

  const auto own_estimate = [&](NodeId i) -> std::pair<DualQuaternion, DualVelocity> {
    if (spec.mode == ConsensusMode::None) {
      return {single[i].pose, DualVelocity::from_vec6(-single[i].dual_bias)};
    }
    const int slot = local[i].order.slot_of(i);
    return {local[i].poses[slot], DualVelocity::from_vec6(-local[i].biases[slot])};
  };

  for (int round = 0; round < spec.rounds; ++round) {
    // Truth propagation (controller forces only in the asteroid scenario).
    const double t = round * spec.dt;
    for (NodeId i = 1; i <= l; ++i) {
      DualForce f;
      if (asteroid) {
        const auto [pose_est, vel_est] = own_estimate(i);
        const double u =
            spec.maneuver_time > 0.0 ? std::min(1.0, t / spec.maneuver_time) : 1.0;
        const double blend = u * u * (3.0 - 2.0 * u);
        const Vec3 r_ref =
            start_pos[i] + blend * (spec.targets[i - 1] - start_pos[i]);
        const Vec3 r_est = pose_to_parts(pose_est).r_inertial;
        const DualQuaternion target =
            pose_from_parts(pointing_attitude(r_est, Vec3::Zero()), r_ref);
        f = lqr_track(pose_est, vel_est, target, body, gains);
      }
      truth[i] = integrate_step(truth[i], body, f, spec.dt);
    }

    NoiseDraws draws = draw_round_noise(meas_rng, graph, spec.noise);
    if (spec.noise_scale != 1.0) {
      for (auto& v : draws.abs_att) v *= spec.noise_scale;
      for (auto& v : draws.abs_pos) v *= spec.noise_scale;
      for (auto& [k, v] : draws.rel_att) v *= spec.noise_scale;
      for (auto& [k, v] : draws.rel_pos) v *= spec.noise_scale;
    }

    try {
      if (spec.mode == ConsensusMode::None) {
        for (NodeId i = 1; i <= l; ++i) {
          single[i] = time_update(single[i], SensorScenario::PoseOnly, single_cfg,
                                  std::nullopt, std::nullopt, spec.dt);
          const auto abs =
              make_abs_measurement(truth[i], draws.abs_att[i], draws.abs_pos[i], spec.noise);
          single[i] = measurement_update(single[i], SensorScenario::PoseOnly, single_cfg,
                                         abs.pose);
        }
      } else {
        // Time update (pose-only fleet: velocity = -bias, no exchange needed).
        for (NodeId i = 1; i <= l; ++i) {
          StackedVelocity zero;
          zero.blocks.assign(local[i].tracked(), Vec6::Zero());
          local[i] = time_update(local[i], estimate_velocity(zero, local[i].biases),
                                node_noise, spec.dt);
        }

        // Measurements + assembly.
        std::vector<MeasurementMatrix> mms(l + 1);
        for (NodeId i = 1; i <= l; ++i) {
          MeasurementSet meas;
          for (NodeId k : (l == 1 ? std::vector<NodeId>{} : graph.neighbours(i))) {
            meas.relative[k] = make_rel_measurement(truth[i], truth[k],
                                                    draws.rel_att.at({i, k}),
                                                    draws.rel_pos.at({i, k}), spec.noise);
          }
          if (leaders.is_leader(i)) {
            meas.absolute =
                make_abs_measurement(truth[i], draws.abs_att[i], draws.abs_pos[i], spec.noise);
          } else {
            AbsolutePoseMeasurement synth;
            synth.pose = synthesize_absolute_pose(local[i], meas);
            synth.R_attitude = spec.noise.std_q * spec.noise.std_q * Mat3::Identity();
            synth.R_position = spec.noise.std_r * spec.noise.std_r * Mat3::Identity();
            meas.absolute = synth;
          }
          mms[i] = assemble_measurement(local[i], meas);
        }

        // Information update: plain (own data) or hard-consensus fusion.
        if (spec.mode == ConsensusMode::HardSoft && l > 1) {
          RoundBus<InfoPacket> bus(graph);
          for (NodeId i = 1; i <= l; ++i) {
            for (NodeId k : graph.neighbours(i)) {
              bus.send(i, k, hard_prepare(mms[i], local[i], hoods[k]));
            }
          }
          std::vector<LocalFilterState> next(l + 1);
          for (NodeId i = 1; i <= l; ++i) {
            std::vector<InfoPacket> packets;
            packets.push_back(hard_prepare(mms[i], local[i], hoods[i]));
            for (const auto& [sender, pkt] : bus.inbox(i)) packets.push_back(*pkt);
            next[i] = hard_aggregate_update(local[i], packets, spec.stubborn,
                                            leaders.is_leader(i));
          }
          for (NodeId i = 1; i <= l; ++i) local[i] = std::move(next[i]);
        } else {
          for (NodeId i = 1; i <= l; ++i) {
            const InfoQuantities q = info_quantities(mms[i]);
            local[i] = measurement_update(local[i], q.u, q.U_reduced);
          }
        }

        // Soft consensus exchange.
        if (l > 1) {
          RoundBus<ConsensusSnapshot> bus(graph);
          for (NodeId i = 1; i <= l; ++i) {
            for (NodeId k : graph.neighbours(i)) {
              bus.send(i, k, make_snapshot(local[i], common[i][k]));
            }
          }
          std::vector<LocalFilterState> next(l + 1);
          for (NodeId i = 1; i <= l; ++i) {
            ConsensusWeights w;
            if (!(spec.stubborn && leaders.is_leader(i))) {
              const double mu = 1.0 / local[i].tracked();
              w = ConsensusWeights{mu, mu, mu};
            }
            std::vector<ConsensusSnapshot> snaps;
            for (const auto& [sender, snap] : bus.inbox(i)) snaps.push_back(*snap);
            SoftResult res = soft_consensus_step(local[i], snaps, w);
            rec.clamp_events += res.clamp_events;
            next[i] = std::move(res.state);
          }
          for (NodeId i = 1; i <= l; ++i) local[i] = std::move(next[i]);
        }
      }
    } catch (const DivergenceError&) {
      rec.diverged = true;
      break;
    }

    std::vector<ErrorSample> row(l);
    for (NodeId i = 1; i <= l; ++i) {
      const auto [pose_est, vel_est] = own_estimate(i);
      row[i - 1] = estimate_errors(truth[i], pose_est, vel_est);
    }
    rec.samples.push_back(std::move(row));
  }
  return rec;
}

namespace {

RunRecord run_single_demo(const ScenarioConfig& config, double snr, std::uint64_t seed) {
  const double dt = 1.0 / config.rate_hz;
  const int rounds = static_cast<int>(std::lround(config.duration_s * config.rate_hz));
  NoiseModel noise = noise_from_snr(snr, config.position_scale);
  if (config.std_q_override) noise.std_q = *config.std_q_override;
  if (config.std_r_override) noise.std_r = *config.std_r_override;
  // Dual-velocity sensing for the demo: per-sample measurement stds.
  const double std_w = 1e-3;
  noise.Q_velocity = 1e-6 * Mat6::Identity();
  noise.Q_bias = 1e-8 * Mat6::Identity();

  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 0xD1);
  RigidBodyState truth;
  truth.pose = pose_from_parts(draw_attitude(rng), draw_vec3(rng, config.position_scale));
  truth.velocity = DualVelocity(draw_vec3(rng, config.tumble_rate_std),
                                draw_vec3(rng, config.drift_vel_std));
  Vec6 true_bias;
  true_bias << draw_vec3(rng, 0.05), draw_vec3(rng, 0.05);

  const RigidBodyParams body(config.mass, config.inertia_diag.asDiagonal());
  NoiseConfig cfg = single_filter_noise(noise);
  cfg.Q_velocity = noise.Q_velocity;
  cfg.Q_bias = noise.Q_bias;

  SingleFilterState filt = make_initial_state(
      normalize_pose(dq_mul(truth.pose, draw_pose_offset(rng, noise.P0))),
      SensorScenario::PoseAndDualVelocity);

  RunRecord rec;
  rec.scenario = "single-demo";
  rec.mode = "single";
  rec.snr = snr;
  rec.n_sats = 1;
  rec.seed = seed;
  for (int round = 0; round < rounds; ++round) {
    truth = integrate_step(truth, body, DualForce{}, dt);
    // Bias random walk.
    for (int i = 0; i < 6; ++i) {
      std::normal_distribution<double> n(0.0, 1.0);
      true_bias[i] += std::sqrt(cfg.Q_bias(i, i) * dt) * n(rng);
    }
    const DualVelocity w_m = DualVelocity::from_vec6(
        truth.velocity.vec6() + true_bias +
        (Vec6() << draw_vec3(rng, std_w), draw_vec3(rng, std_w)).finished());
    Vec3 nq = draw_vec3(rng, noise.std_q);
    if (nq.norm() > 0.999) nq *= 0.999 / nq.norm();
    const auto abs = make_abs_measurement(truth, nq, draw_vec3(rng, noise.std_r), noise);
    try {
      filt = time_update(filt, SensorScenario::PoseAndDualVelocity, cfg, w_m, std::nullopt, dt);
      filt = measurement_update(filt, SensorScenario::PoseAndDualVelocity, cfg, abs.pose);
    } catch (const DivergenceError&) {
      rec.diverged = true;
      break;
    }
    const DualVelocity vel_est = DualVelocity::from_vec6(w_m.vec6() - filt.dual_bias);
    rec.samples.push_back({estimate_errors(truth, filt.pose, vel_est)});
  }
  rec.metrics = compute_metrics(rec.samples, static_cast<int>(rec.samples.size()) / 2,
                                static_cast<int>(rec.samples.size()));
  return rec;
}

int thread_budget(int max_threads) {
  if (max_threads > 0) return max_threads;
  if (const char* env = std::getenv("DQFLEET_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, int max_threads) {
  config.validate();
  const double dt = 1.0 / config.rate_hz;
  const int rounds = static_cast<int>(std::lround(config.duration_s * config.rate_hz));

  struct Job {
    FleetRunSpec spec;
    std::string scenario;
    double snr;
  };
  std::vector<Job> jobs;

  const auto noise_for = [&](double snr) {
    NoiseModel n = noise_from_snr(snr, config.position_scale);
    if (config.std_q_override) n.std_q = *config.std_q_override;
    if (config.std_r_override) n.std_r = *config.std_r_override;
    if (config.kind == ScenarioKind::Asteroid) {
      // Asteroid-table defaults unless explicitly overridden.
      if (!config.std_q_override) n.std_q = std::sqrt(2.79e-7);
      if (!config.std_r_override) n.std_r = std::sqrt(8.55e-4);
      n.Q_bias = Mat6::Zero();
      n.Q_bias.block<3, 3>(0, 0) = 1e-6 * Mat3::Identity();
      n.Q_bias.block<3, 3>(3, 3) = 1e-4 * Mat3::Identity();
    }
    return n;
  };

  const auto base_spec = [&](double snr, std::uint64_t seed) {
    FleetRunSpec s;
    s.n_sats = config.n_sats;
    s.edge_probability = config.edge_probability;
    s.noise = noise_for(snr);
    s.rounds = rounds;
    s.dt = dt;
    s.seed = seed;
    s.base = config;
    return s;
  };

  switch (config.kind) {
    case ScenarioKind::Sweep: {
      for (size_t si = 0; si < config.snrs.size(); ++si) {
        for (int k = 0; k < config.n_seeds; ++k) {
          const std::uint64_t seed = config.base_seed + 1000 * si + k;
          Job base{base_spec(config.snrs[si], seed), "sweep", config.snrs[si]};
          base.spec.mode = ConsensusMode::None;
          jobs.push_back(base);
          if (config.mode != ConsensusMode::None) {
            base.spec.mode = config.mode;
            base.spec.stubborn = config.stubborn;
            jobs.push_back(base);
          }
        }
      }
      break;
    }
    case ScenarioKind::Leaders: {
      for (size_t fi = 0; fi < config.leader_fractions.size(); ++fi) {
        for (int k = 0; k < config.n_seeds; ++k) {
          const std::uint64_t seed = config.base_seed + 1000 * fi + k;
          Job j{base_spec(config.snrs.front(), seed), "leaders", config.snrs.front()};
          j.spec.mode = config.mode;
          j.spec.stubborn = config.stubborn;
          j.spec.leader_fraction = config.leader_fractions[fi];
          jobs.push_back(j);
        }
      }
      break;
    }
    case ScenarioKind::Asteroid: {
      for (int k = 0; k < config.n_seeds; ++k) {
        Job j{base_spec(config.snrs.front(), config.base_seed + k), "asteroid",
              config.snrs.front()};
        j.spec.mode = config.mode;
        j.spec.stubborn = config.stubborn;
        j.spec.leader_fraction = config.leader_fractions.front();
        j.spec.targets = fibonacci_lattice(config.n_sats, config.lattice_radius);
        j.spec.lqr_q = config.lqr_q;
        j.spec.lqr_r = config.lqr_r;
        j.spec.maneuver_time = config.maneuver_fraction * config.duration_s;
        jobs.push_back(j);
      }
      break;
    }
    case ScenarioKind::SingleDemo: {
      ScenarioResult result;
      for (int k = 0; k < config.n_seeds; ++k) {
        result.runs.push_back(
            run_single_demo(config, config.snrs.front(), config.base_seed + k));
      }
      return result;
    }
  }

  ScenarioResult result;
  result.runs.resize(jobs.size());
  const int n_threads = std::min<int>(thread_budget(max_threads), jobs.size());
  std::atomic<size_t> next{0};
  const auto worker = [&]() {
    for (size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) {
      RunRecord rec = run_fleet(jobs[j].spec);
      rec.scenario = jobs[j].scenario;
      rec.snr = jobs[j].snr;
      int first = 0;
      const int total = static_cast<int>(rec.samples.size());
      if (jobs[j].spec.base.metrics_window > 0) {
        first = std::max(0, total - jobs[j].spec.base.metrics_window);
      }
      rec.metrics = compute_metrics(rec.samples, first, total);
      result.runs[j] = std::move(rec);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return result;
}

namespace {
std::string fmt9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}
}  // namespace

std::string run_csv(const std::vector<const RunRecord*>& records, double dt) {
  std::ostringstream os;
  os << "round,t,sat,mode,err_att_rad,err_pos_m,err_angvel,err_linvel\n";
  for (const RunRecord* rec : records) {
    for (size_t r = 0; r < rec->samples.size(); ++r) {
      for (size_t s = 0; s < rec->samples[r].size(); ++s) {
        const ErrorSample& e = rec->samples[r][s];
        os << r << "," << fmt9((r + 1) * dt) << "," << (s + 1) << "," << rec->mode << ","
           << fmt9(e.att) << "," << fmt9(e.pos) << "," << fmt9(e.angvel) << ","
           << fmt9(e.linvel) << "\n";
      }
    }
  }
  return os.str();
}

std::string summary_csv(const ScenarioResult& result) {
  std::ostringstream os;
  os << "scenario,mode,snr,sats,edge_prob,leader_fraction,stubborn,seed,diverged,"
        "clamp_events,att_q1,att_med,att_q3,pos_q1,pos_med,pos_q3,angvel_q1,angvel_med,"
        "angvel_q3,linvel_q1,linvel_med,linvel_q3\n";
  for (const RunRecord& r : result.runs) {
    os << r.scenario << "," << r.mode << "," << fmt9(r.snr) << "," << r.n_sats << ","
       << fmt9(r.edge_probability) << "," << fmt9(r.leader_fraction) << ","
       << (r.stubborn ? "true" : "false") << "," << r.seed << ","
       << (r.diverged ? "true" : "false") << "," << r.clamp_events;
    for (int k = 0; k < 4; ++k) {
      os << "," << fmt9(r.metrics.fleet[k].q1) << "," << fmt9(r.metrics.fleet[k].median)
         << "," << fmt9(r.metrics.fleet[k].q3);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace dqf
