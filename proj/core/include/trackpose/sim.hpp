#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trackpose/csv.hpp"
#include "trackpose/geometry.hpp"
#include "trackpose/trajectory.hpp"

namespace trackpose::sim {

/// Driving patterns of the synthetic dataset.
enum class ScenarioKind {
  Straight,
  LowSlalom,
  HighSlalom,
  SlalomCarrying,
  ClimbSlope,
  CrossSlope,
  Excavation,
  Turn,
  Grading,
  Random,
};

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view text);
const std::vector<ScenarioKind>& all_scenarios();

/// Phenomenological soil: slip = base + coupling * excess load + bursts.
struct SoilProfile {
  double base_slip = 0.02;
  double burst_rate_per_min = 3.0;
  double burst_gain = 0.3;
  double coupling = 0.3;

  /// Throws Config unless 0 <= base, 0 <= gain, base + gain < 1, rate >= 0, coupling >= 0.
  void validate() const;
  static SoilProfile none() { return {0.0, 0.0, 0.0, 0.0}; }
};

/// Default soil for a scenario. Straight runs are on firm ground with no base
/// slip; high-frequency slalom, excavation and random driving slip more often.
SoilProfile default_soil(ScenarioKind kind);

struct SensorNoise {
  double gyro_white = 0.02;        // rad/s rms
  double gyro_bias = 1e-4;         // rad/s rms of the per-episode bias
  double gyro_vibration = 0.01;    // rad/s amplitude
  double accel_white = 0.3;        // m/s^2 rms
  double accel_bias = 0.02;        // m/s^2 rms of the per-episode bias
  double accel_vibration = 1.0;    // m/s^2 amplitude
  double vibration_hz = 30.0;
  double posture_white = 0.1;      // deg rms
  double encoder_white = 0.01;     // m/s rms
  double pressure_white = 0.2;     // MPa rms
  double channel_white = 0.01;     // relative rms on the remaining analog channels

  static SensorNoise zero() { return {0, 0, 0, 0, 0, 0, 30.0, 0, 0, 0, 0}; }
};

/// Which channel groups react to slip. `BuOnly` keeps the vehicle (Ve)
/// channels and the yaw rate blind to slip, so slip is visible only through
/// the hydraulic pressures.
enum class SlipSignature { VeBu, BuOnly };

std::string_view to_string(SlipSignature s);
SlipSignature parse_slip_signature(std::string_view text);

struct Scenario {
  ScenarioKind kind = ScenarioKind::Straight;
  double duration = 60.0;  // s, within [30, 200]
  SoilProfile soil;
  SensorNoise noise;
  std::uint64_t seed = 0;
  SlipSignature signature = SlipSignature::VeBu;
  double slip_flag_threshold = 0.1;
  /// Commanded cruise speed (m/s); scenarios scale it.
  double speed = 1.0;

  void validate() const;
  std::string name() const { return std::string(to_string(kind)); }
};

/// Scenario with its scenario-default soil.
Scenario make_scenario(ScenarioKind kind, double duration, std::uint64_t seed);

/// {name, duration_s, seed, soil:{base_slip, burst_rate_per_min, burst_gain, coupling},
///  noise:{...}, slip_signature, slip_flag_threshold, speed}. Omitted fields keep defaults.
Scenario scenario_from_json(std::string_view text);
std::string scenario_to_json(const Scenario& sc);

inline constexpr double kFastRate = 100.0;
inline constexpr double kSlowRate = 10.0;

struct Episode {
  Scenario scenario;
  /// 100 Hz ground truth with slip flags.
  Trajectory truth;
  std::vector<Vec3> truth_velocity;  // local frame, m/s
  std::vector<double> slip_ratio;
  /// Commanded forward speed and yaw rate per 100 Hz tick.
  std::vector<double> command_speed;
  std::vector<double> command_yaw_rate;
  /// Drawbar load (dimensionless) per 100 Hz tick.
  std::vector<double> load;
  /// Sensor tables at their native rates; column 0 is `t`.
  csv::Table fast;  // 100 Hz, includes `dt`
  csv::Table slow;  // 10 Hz
};

/// Deterministic in (scenario, seed).
Episode generate_episode(const Scenario& sc);

/// Names of the columns in the two sensor files, `t` first.
const std::vector<std::string>& fast_columns();
const std::vector<std::string>& slow_columns();
const std::vector<std::string>& truth_columns();

struct EpisodeFiles {
  std::filesystem::path fast;
  std::filesystem::path slow;
  std::filesystem::path truth;
};

EpisodeFiles episode_files(const std::filesystem::path& dir, std::string_view id);

/// Writes ep<id>_100hz.csv, ep<id>_10hz.csv and ep<id>_truth.csv into `dir`.
EpisodeFiles export_episode(const Episode& e, const std::filesystem::path& dir, std::string_view id);

}  // namespace trackpose::sim
