#ifndef DQFLEET_SIM_HARNESS_HPP
#define DQFLEET_SIM_HARNESS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dqfleet/consensus.hpp"
#include "dqfleet/ddq_mekf.hpp"
#include "dqfleet/fleet_graph.hpp"
#include "dqfleet/rigid_body.hpp"

namespace dqf {

enum class ConsensusMode { None, Soft, HardSoft };
enum class ScenarioKind { Sweep, Asteroid, Leaders, SingleDemo };

std::string to_string(ConsensusMode mode);
std::string to_string(ScenarioKind kind);

/// Sensor and process noise magnitudes of one experiment.
struct NoiseModel {
  double std_q = 1e-3;              // attitude vector-part std
  double std_r = 1e-2;              // position std [m]
  Mat6 Q_velocity = Mat6::Zero();   // Q̄_ω ⊕ Q̄_v
  Mat6 Q_bias = Mat6::Zero();       // Q̄_bω ⊕ Q̄_bv
  Mat12 P0 = Mat12::Identity();
};

/// Table-3 scalings: Q̄_bω = 1e-3/SNR² I, Q̄_bv = 1e-1/SNR² I, stds =
/// scale/SNR with attitude scale 1 and the configured position scale.
NoiseModel noise_from_snr(double snr, double position_scale = 10.0);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Sweep;
  int n_sats = 10;
  double duration_s = 60.0;
  double rate_hz = 20.0;
  double edge_probability = 0.5;
  std::vector<double> snrs = {1000.0};
  std::optional<double> std_q_override;  // explicit noise instead of SNR
  std::optional<double> std_r_override;
  std::optional<Vec3> q_bias_diag_override;  // (att, att, pos?) see config docs
  ConsensusMode mode = ConsensusMode::HardSoft;
  std::vector<double> leader_fractions = {1.0};
  bool stubborn = false;
  std::uint64_t base_seed = 1;
  int n_seeds = 1;
  double position_scale = 10.0;
  int metrics_window = 0;  // trailing samples for summary metrics; 0 = full run

  // truth model
  double mass = 10.0;                       // [kg]
  Vec3 inertia_diag = Vec3(4.0, 5.0, 6.0);  // [kg m^2]
  double tumble_rate_std = 0.03;            // [rad/s]
  double drift_vel_std = 0.02;              // [m/s]

  // asteroid scenario
  double lattice_radius = 25.0;        // [m]
  double plane_distance = 40.0;        // [m]
  double grid_spacing = 5.0;           // [m]
  double lqr_q = 0.1;
  double lqr_r = 0.1;
  double maneuver_fraction = 0.8;      // fraction of the run spent blending to the target

  void validate() const;
};

/// Golden-angle spiral on a sphere of the given radius (midpoint rule;
/// n = 1 degenerates to the pole).
std::vector<Vec3> fibonacci_lattice(int n, double radius);

/// Gains of the decoupled double-integrator LQR (one 2x2 CARE per axis,
/// closed form). q and r are the diagonal Q_LQR / R_LQR weights.
struct LqrGains {
  double k_pos = 0.0;
  double k_vel = 0.0;
};
LqrGains solve_lqr_gains(double q, double r);
/// Assembled 12x12 CARE solution for A = [[0, I6], [0, 0]], B = [0; I6]
/// (used by the Riccati residual check).
Mat12 lqr_riccati_solution(double q, double r);

/// Tracking force from the estimated state: commanded accelerations
/// -K [error; rate] mapped through inertia (torque) and mass (force, body
/// frame).
DualForce lqr_track(const DualQuaternion& pose_est, const DualVelocity& vel_est,
                    const DualQuaternion& target_pose, const RigidBodyParams& body,
                    const LqrGains& gains);

/// Attitude with the body z-axis toward `focus`, roll fixed by projecting
/// the inertial z-axis.
Quaternion pointing_attitude(const Vec3& position, const Vec3& focus);

struct ErrorSample {
  double att = 0.0;     // [rad]
  double pos = 0.0;     // [m]
  double angvel = 0.0;  // [rad/s]
  double linvel = 0.0;  // [m/s]
};

ErrorSample estimate_errors(const RigidBodyState& truth, const DualQuaternion& pose_est,
                            const DualVelocity& vel_est);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

struct RunMetrics {
  std::vector<std::array<double, 4>> per_sat_rms;  // att, pos, angvel, linvel
  std::array<Quartiles, 4> fleet;
};

/// RMS over [first_round, last_round) per satellite and fleet quartiles.
RunMetrics compute_metrics(const std::vector<std::vector<ErrorSample>>& samples,
                           int first_round, int last_round);

struct RunRecord {
  std::string scenario;
  std::string mode;  // none | soft | hardsoft | hardsoft-stubborn | ...
  double snr = 0.0;
  int n_sats = 0;
  double edge_probability = 0.0;
  double leader_fraction = 1.0;
  bool stubborn = false;
  std::uint64_t seed = 0;
  bool diverged = false;
  int clamp_events = 0;
  std::vector<std::vector<ErrorSample>> samples;  // [round][sat]
  RunMetrics metrics;
};

struct ScenarioResult {
  std::vector<RunRecord> runs;
};

/// Executes the configured experiment. Deterministic for a fixed config;
/// Monte-Carlo runs execute in parallel up to `max_threads` (0 = use
/// DQFLEET_THREADS or the hardware count).
ScenarioResult run_scenario(const ScenarioConfig& config, int max_threads = 0);

/// Per-round log CSV (columns: round,t,sat,mode,err_att_rad,err_pos_m,
/// err_angvel,err_linvel) for all records in file order.
std::string run_csv(const std::vector<const RunRecord*>& records, double dt);
/// Per-run summary CSV with fleet quartiles of the per-satellite RMS.
std::string summary_csv(const ScenarioResult& result);

/// One mid-level fleet simulation (fixed graph/leaders/mode); exposed for
/// the acceptance suite.
struct FleetRunSpec {
  int n_sats = 10;
  double edge_probability = 0.5;
  ConsensusMode mode = ConsensusMode::HardSoft;
  double leader_fraction = 1.0;
  bool stubborn = false;
  NoiseModel noise;
  double noise_scale = 1.0;  // scales the synthesized sensor noise draws
  bool exact_init = false;   // start the estimates at the truth
  int rounds = 1200;
  double dt = 0.05;
  std::uint64_t seed = 1;
  // asteroid extras; empty targets = free tumbling
  std::vector<Vec3> targets;
  double lqr_q = 0.1;
  double lqr_r = 0.1;
  double maneuver_time = 0.0;
  ScenarioConfig base;  // truth-model parameters
};
RunRecord run_fleet(const FleetRunSpec& spec);

}  // namespace dqf

#endif  // DQFLEET_SIM_HARNESS_HPP
