#include "trackpose/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "json.hpp"
#include "trackpose/ekf.hpp"
#include "trackpose/error.hpp"
#include "trackpose/estimators.hpp"

namespace trackpose::sim {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ScenarioKind, std::string_view>, 10> kScenarioNames{{
    {ScenarioKind::Straight, "straight"},
    {ScenarioKind::LowSlalom, "low_slalom"},
    {ScenarioKind::HighSlalom, "high_slalom"},
    {ScenarioKind::SlalomCarrying, "slalom_carrying"},
    {ScenarioKind::ClimbSlope, "climb_slope"},
    {ScenarioKind::CrossSlope, "cross_slope"},
    {ScenarioKind::Excavation, "excavation"},
    {ScenarioKind::Turn, "turn"},
    {ScenarioKind::Grading, "grading"},
    {ScenarioKind::Random, "random"},
}};

constexpr double kDt = 1.0 / kFastRate;
constexpr double kRadToDeg = 180.0 / kPi;
constexpr double kMps = 3600.0;  // m/s -> m/h
constexpr double kCommandTau = 0.5;
constexpr double kSlipTau = 0.25;
constexpr double kPreSlip = 0.5;
constexpr double kLoadKnee = 0.3;
constexpr double kMaxSlip = 0.95;

double smoothstep(double t, double t0, double t1) {
  const double x = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

/// Scenario-level intent at one instant, before actuator lag.
struct Intent {
  double speed = 0.0;
  double yaw_rate = 0.0;
  double roll = 0.0;   // terrain
  double pitch = 0.0;  // terrain
  double blade_load = 0.0;
  double blade_height = 0.4;  // m above ground
  double tilt_lever = 0.0;    // %
  double sideslip = 0.0;      // lateral velocity per unit forward speed
};

struct Segment {
  double end;
  double speed;
  double yaw_rate;
  double blade_load;
};

class Controller {
 public:
  Controller(const Scenario& sc, std::mt19937_64& rng) : sc_(sc) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    phase_ = phase(rng);
    if (sc.kind == ScenarioKind::Random) {
      std::uniform_real_distribution<double> len(4.0, 8.0), fwd(0.3, 1.0), rev(0.5, 1.0), u(0.0, 1.0), b(0.0, 0.6);
      double t = 0.0;
      while (t < sc.duration + 1.0) {
        Segment s{};
        t += len(rng);
        s.end = t;
        const bool reverse = u(rng) < 0.25;
        const bool push = !reverse && u(rng) < 0.4;
        s.speed = (reverse ? -rev(rng) : fwd(rng)) * sc.speed;
        s.yaw_rate = (2.0 * u(rng) - 1.0) * (reverse ? 0.1 : (push ? 0.1 : 0.3));
        s.blade_load = push ? b(rng) : 0.0;
        segments_.push_back(s);
      }
    }
  }

  Intent operator()(double t) const {
    Intent in;
    const double v = sc_.speed;
    const double d = sc_.duration;
    switch (sc_.kind) {
      case ScenarioKind::Straight:
        in.speed = v;
        break;
      case ScenarioKind::LowSlalom:
        in.speed = v;
        in.yaw_rate = 0.15 * std::sin(2.0 * kPi * t / 12.0 + phase_);
        break;
      case ScenarioKind::HighSlalom:
        in.speed = v;
        in.yaw_rate = 0.35 * std::sin(2.0 * kPi * t / 4.0 + phase_);
        break;
      case ScenarioKind::SlalomCarrying:
        in.speed = 0.8 * v;
        in.yaw_rate = 0.15 * std::sin(2.0 * kPi * t / 10.0 + phase_);
        in.blade_load = 0.45 + 0.1 * std::sin(0.3 * t + phase_);
        in.blade_height = 0.15;
        break;
      case ScenarioKind::ClimbSlope: {
        const double top = 0.6 * d;
        in.speed = 0.8 * v;
        in.pitch = -0.2 * (smoothstep(t, 5.0, 15.0) - smoothstep(t, top, top + 10.0));
        break;
      }
      case ScenarioKind::CrossSlope:
        in.speed = v;
        in.roll = 0.15 * smoothstep(t, 3.0, 10.0);
        in.yaw_rate = 0.02 * std::sin(2.0 * kPi * t / 25.0 + phase_);
        in.sideslip = 0.3;
        break;
      case ScenarioKind::Excavation: {
        const double c = std::fmod(t, 14.0);
        if (c < 8.0) {
          in.speed = 0.7 * v;
          in.blade_load = c / 8.0;
          in.blade_height = -0.05;
        } else if (c < 9.0) {
          in.blade_height = 0.3;
        } else if (c < 13.0) {
          in.speed = -v;
          in.blade_height = 0.3;
        } else {
          in.blade_height = -0.05;
        }
        break;
      }
      case ScenarioKind::Turn:
        in.speed = 0.7 * v;
        in.yaw_rate = 0.25 * (std::fmod(t, 40.0) < 20.0 ? 1.0 : -1.0);
        break;
      case ScenarioKind::Grading:
        in.speed = v;
        in.yaw_rate = 0.03 * std::sin(2.0 * kPi * t / 20.0 + phase_);
        in.blade_load = 0.3 + 0.15 * std::sin(2.0 * kPi * t / 7.0 + phase_);
        in.blade_height = -0.02;
        in.tilt_lever = 20.0 * std::sin(2.0 * kPi * t / 9.0);
        break;
      case ScenarioKind::Random: {
        auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                                   [](const Segment& s, double x) { return s.end <= x; });
        if (it == segments_.end()) it = std::prev(segments_.end());
        in.speed = it->speed;
        in.yaw_rate = it->yaw_rate;
        in.blade_load = it->blade_load;
        in.blade_height = it->blade_load > 0 ? -0.03 : 0.4;
        in.pitch = 0.05 * std::sin(2.0 * kPi * t / 30.0 + phase_);
        in.roll = 0.04 * std::sin(2.0 * kPi * t / 23.0);
        break;
      }
    }
    return in;
  }

 private:
  const Scenario& sc_;
  double phase_ = 0.0;
  std::vector<Segment> segments_;
};

double drawbar_load(const Intent& in, double speed_cmd, double yaw_rate_cmd, bool with_blade) {
  double load = 0.2;
  if (with_blade) load += 0.8 * in.blade_load;
  load += 1.5 * (-std::sin(in.pitch)) * sign(speed_cmd);
  load += 0.5 * std::abs(std::sin(in.roll));
  load += 2.0 * std::abs(yaw_rate_cmd);
  return std::max(0.0, load);
}

/// Slip bursts: idle -> pre-slip load build-up -> slipping.
struct BurstState {
  enum class Phase { Idle, Pre, Slip } phase = Phase::Idle;
  double remaining = 0.0;
  double amplitude = 0.0;
  double slip_length = 0.0;
};

std::vector<std::string> make_fast_columns() {
  return {"t",
          "dt",
          "acc_x",
          "acc_y",
          "acc_z",
          "gyro_x",
          "gyro_y",
          "gyro_z",
          "imu_roll",
          "imu_pitch",
          "imu_yaw",
          "fnr_gear",
          "steering_stroke",
          "blade_lift_lever",
          "blade_tilt_lever",
          "blade_current_lift",
          "blade_current_tilt",
          "blade_current_angle",
          "blade_right_edge_x",
          "blade_right_edge_y",
          "blade_right_edge_z",
          "blade_left_edge_x",
          "blade_left_edge_y",
          "blade_left_edge_z",
          "engine_speed",
          "engine_torque"};
}

std::vector<std::string> make_slow_columns() {
  return {"t",           "crawler_right",   "crawler_left",    "speed_gear",          "steering_state",
          "blade_state", "blade_lift_angle", "hst_pressure_rf", "hst_pressure_lf",     "hst_pressure_rr",
          "hst_pressure_lr", "blade_pump_pressure", "relief_level", "traction_force"};
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  for (const auto& [k, name] : kScenarioNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
  for (const auto& [k, name] : kScenarioNames) {
    if (name == text) return k;
  }
  fail(ErrorCode::Config, "unknown scenario '" + std::string(text) + "'");
}

const std::vector<ScenarioKind>& all_scenarios() {
  static const std::vector<ScenarioKind> all = [] {
    std::vector<ScenarioKind> v;
    for (const auto& [k, name] : kScenarioNames) v.push_back(k);
    return v;
  }();
  return all;
}

void SoilProfile::validate() const {
  const bool ok = std::isfinite(base_slip) && std::isfinite(burst_gain) && std::isfinite(burst_rate_per_min) &&
                  std::isfinite(coupling) && base_slip >= 0.0 && burst_gain >= 0.0 && base_slip + burst_gain < 1.0 &&
                  burst_rate_per_min >= 0.0 && coupling >= 0.0;
  if (!ok) fail(ErrorCode::Config, "soil profile out of range (need base >= 0, gain >= 0, base + gain < 1)");
}

SoilProfile default_soil(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::HighSlalom:
      return {0.02, 8.0, 0.4, 0.4};
    case ScenarioKind::Excavation:
      return {0.02, 6.0, 0.35, 0.5};
    case ScenarioKind::Random:
      return {0.02, 6.0, 0.35, 0.4};
    case ScenarioKind::Straight:
      return {0.0, 2.0, 0.25, 0.3};
    default:
      return {0.02, 3.0, 0.3, 0.3};
  }
}

std::string_view to_string(SlipSignature s) { return s == SlipSignature::VeBu ? "ve_bu" : "bu_only"; }

SlipSignature parse_slip_signature(std::string_view text) {
  if (text == "ve_bu") return SlipSignature::VeBu;
  if (text == "bu_only") return SlipSignature::BuOnly;
  fail(ErrorCode::Config, "unknown slip signature '" + std::string(text) + "'");
}

void Scenario::validate() const {
  if (!(duration >= 30.0 && duration <= 200.0)) {
    fail(ErrorCode::Config, "scenario duration must be within [30, 200] s");
  }
  soil.validate();
  if (!(slip_flag_threshold > 0.0 && slip_flag_threshold < 1.0)) {
    fail(ErrorCode::Config, "slip flag threshold must be in (0, 1)");
  }
  if (!(std::isfinite(speed) && speed > 0.0 && speed <= 3.0)) fail(ErrorCode::Config, "speed must be in (0, 3] m/s");
}

Scenario make_scenario(ScenarioKind kind, double duration, std::uint64_t seed) {
  Scenario sc;
  sc.kind = kind;
  sc.duration = duration;
  sc.seed = seed;
  sc.soil = default_soil(kind);
  return sc;
}

Scenario scenario_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("scenario JSON: ") + e.what());
  }
  try {
    Scenario sc = make_scenario(parse_scenario_kind(j.at("name").get<std::string>()), j.value("duration_s", 60.0),
                                j.value("seed", std::uint64_t{0}));
    if (j.contains("soil")) {
      const json& s = j["soil"];
      sc.soil.base_slip = s.value("base_slip", sc.soil.base_slip);
      sc.soil.burst_rate_per_min = s.value("burst_rate_per_min", sc.soil.burst_rate_per_min);
      sc.soil.burst_gain = s.value("burst_gain", sc.soil.burst_gain);
      sc.soil.coupling = s.value("coupling", sc.soil.coupling);
    }
    if (j.contains("noise")) {
      const json& n = j["noise"];
      if (n.is_string()) {
        if (n.get<std::string>() != "zero") fail(ErrorCode::Config, "noise preset must be \"zero\"");
        sc.noise = SensorNoise::zero();
      } else {
        SensorNoise& z = sc.noise;
        z.gyro_white = n.value("gyro_white", z.gyro_white);
        z.gyro_bias = n.value("gyro_bias", z.gyro_bias);
        z.gyro_vibration = n.value("gyro_vibration", z.gyro_vibration);
        z.accel_white = n.value("accel_white", z.accel_white);
        z.accel_bias = n.value("accel_bias", z.accel_bias);
        z.accel_vibration = n.value("accel_vibration", z.accel_vibration);
        z.vibration_hz = n.value("vibration_hz", z.vibration_hz);
        z.posture_white = n.value("posture_white", z.posture_white);
        z.encoder_white = n.value("encoder_white", z.encoder_white);
        z.pressure_white = n.value("pressure_white", z.pressure_white);
        z.channel_white = n.value("channel_white", z.channel_white);
      }
    }
    if (j.contains("slip_signature")) sc.signature = parse_slip_signature(j["slip_signature"].get<std::string>());
    sc.slip_flag_threshold = j.value("slip_flag_threshold", sc.slip_flag_threshold);
    sc.speed = j.value("speed", sc.speed);
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("scenario JSON: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& sc) {
  const SensorNoise& n = sc.noise;
  json j = {
      {"name", sc.name()},
      {"duration_s", sc.duration},
      {"seed", sc.seed},
      {"soil",
       {{"base_slip", sc.soil.base_slip},
        {"burst_rate_per_min", sc.soil.burst_rate_per_min},
        {"burst_gain", sc.soil.burst_gain},
        {"coupling", sc.soil.coupling}}},
      {"noise",
       {{"gyro_white", n.gyro_white},
        {"gyro_bias", n.gyro_bias},
        {"gyro_vibration", n.gyro_vibration},
        {"accel_white", n.accel_white},
        {"accel_bias", n.accel_bias},
        {"accel_vibration", n.accel_vibration},
        {"vibration_hz", n.vibration_hz},
        {"posture_white", n.posture_white},
        {"encoder_white", n.encoder_white},
        {"pressure_white", n.pressure_white},
        {"channel_white", n.channel_white}}},
      {"slip_signature", std::string(to_string(sc.signature))},
      {"slip_flag_threshold", sc.slip_flag_threshold},
      {"speed", sc.speed},
  };
  return j.dump();
}

const std::vector<std::string>& fast_columns() {
  static const std::vector<std::string> c = make_fast_columns();
  return c;
}

const std::vector<std::string>& slow_columns() {
  static const std::vector<std::string> c = make_slow_columns();
  return c;
}

const std::vector<std::string>& truth_columns() {
  static const std::vector<std::string> c = {"t",  "x",  "y",  "z",          "roll", "pitch",
                                             "yaw", "vx", "vy", "vz", "slip_ratio", "slip"};
  return c;
}

Episode generate_episode(const Scenario& sc) {
  sc.validate();
  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto noise = [&](double sigma) { return sigma > 0.0 ? sigma * gauss(rng) : 0.0; };

  const Controller controller(sc, rng);
  const auto n = static_cast<std::size_t>(std::llround(sc.duration * kFastRate));
  const bool slip_in_ve = sc.signature == SlipSignature::VeBu;

  Episode e;
  e.scenario = sc;
  e.truth_velocity.resize(n);
  e.slip_ratio.resize(n);
  e.command_speed.resize(n);
  e.command_yaw_rate.resize(n);
  e.load.resize(n);
  std::vector<Intent> intents(n);
  std::vector<Vec3> body_rate(n);
  std::vector<double> pre_slip(n, 0.0);

  const Intent first = controller(0.0);
  double v_cmd = first.speed;
  double w_cmd = first.yaw_rate;
  double slip = -1.0;
  BurstState burst;
  StateVector pose;
  const double alpha = kDt / (kCommandTau + kDt);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / kFastRate;
    const Intent in = controller(t);
    if (k > 0) {
      v_cmd += alpha * (in.speed - v_cmd);
      w_cmd += alpha * (in.yaw_rate - w_cmd);
    }
    const double load = drawbar_load(in, v_cmd, w_cmd, true);

    double burst_slip = 0.0;
    switch (burst.phase) {
      case BurstState::Phase::Idle: {
        const double rate = sc.soil.burst_rate_per_min / 60.0 * (0.5 + load) * (std::abs(v_cmd) > 0.1 ? 1.0 : 0.0);
        if (rate > 0.0 && unit(rng) < rate * kDt) {
          burst.phase = BurstState::Phase::Pre;
          burst.remaining = kPreSlip;
          burst.amplitude = sc.soil.burst_gain * (0.6 + 0.4 * unit(rng));
          burst.slip_length = 1.0 + 2.0 * unit(rng);
        }
        break;
      }
      case BurstState::Phase::Pre:
        pre_slip[k] = 1.0 - burst.remaining / kPreSlip;
        burst.remaining -= kDt;
        if (burst.remaining <= 1e-12) {
          burst.phase = BurstState::Phase::Slip;
          burst.remaining = burst.slip_length;
        }
        break;
      case BurstState::Phase::Slip:
        burst_slip = burst.amplitude;
        burst.remaining -= kDt;
        if (burst.remaining <= 1e-12) burst.phase = BurstState::Phase::Idle;
        break;
    }
    const double target =
        std::min(kMaxSlip, sc.soil.base_slip + sc.soil.coupling * std::max(0.0, load - kLoadKnee) + burst_slip);
    slip = slip < 0.0 ? target : slip + kDt / kSlipTau * (target - slip);
    slip = std::clamp(slip, 0.0, kMaxSlip);

    const double vx = v_cmd * (1.0 - slip);
    const Vec3 v_body(vx, -in.sideslip * std::sin(pose.attitude.roll) * std::abs(vx), 0.0);
    const double r = slip_in_ve ? w_cmd * (1.0 - slip) : w_cmd;

    // Body rates that carry roll and pitch onto the terrain at the next tick.
    const Intent next = controller(t + kDt);
    const double phi = pose.attitude.roll;
    const double theta = pose.attitude.pitch;
    const double roll_rate = (next.roll - phi) / kDt;
    const double pitch_rate = (next.pitch - theta) / kDt;
    const double q = (pitch_rate + std::sin(phi) * r) / std::cos(phi);
    const double p = roll_rate - std::sin(phi) * std::tan(theta) * q - std::cos(phi) * std::tan(theta) * r;
    const Vec3 w_body(p, q, r);

    e.truth.push_back(t, pose);
    e.truth.slip.push_back(slip > sc.slip_flag_threshold ? 1 : 0);
    e.truth_velocity[k] = v_body;
    e.slip_ratio[k] = slip;
    e.command_speed[k] = v_cmd;
    e.command_yaw_rate[k] = w_cmd;
    e.load[k] = load;
    intents[k] = in;
    body_rate[k] = w_body;

    pose = ekf::transition(pose, {v_body, w_body, kDt});
  }

  // Specific force from the world-frame acceleration of the truth trajectory.
  std::vector<Vec3> world_velocity(n);
  for (std::size_t k = 0; k < n; ++k) world_velocity[k] = rot_xyz(e.truth.poses[k].attitude) * e.truth_velocity[k];
  std::vector<Vec3> specific_force(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vec3 a = Vec3::Zero();
    if (n > 1) {
      const std::size_t lo = k == 0 ? 0 : k - 1;
      const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
      a = (world_velocity[hi] - world_velocity[lo]) / (static_cast<double>(hi - lo) * kDt);
    }
    specific_force[k] = rot_xyz(e.truth.poses[k].attitude).transpose() * (a + Vec3(0.0, 0.0, kGravity));
  }

  const SensorNoise& nz = sc.noise;
  const Vec3 gyro_bias(noise(nz.gyro_bias), noise(nz.gyro_bias), noise(nz.gyro_bias));
  const Vec3 accel_bias(noise(nz.accel_bias), noise(nz.accel_bias), noise(nz.accel_bias));
  const std::array<double, 3> vib_phase{unit(rng) * 2 * kPi, unit(rng) * 2 * kPi, unit(rng) * 2 * kPi};
  const std::array<double, 3> vib_axis{0.5, 0.5, 1.0};
  const double omega_vib = 2.0 * kPi * nz.vibration_hz;
  auto rel = [&](double value) { return value * (1.0 + noise(nz.channel_white)); };

  const auto& fc = fast_columns();
  const auto& slc = slow_columns();
  e.fast.columns = fc;
  e.fast.values.resize(static_cast<Eigen::Index>(fc.size()), static_cast<Eigen::Index>(n));
  const std::size_t n_slow = (n + 9) / 10;
  e.slow.columns = slc;
  e.slow.values.resize(static_cast<Eigen::Index>(slc.size()), static_cast<Eigen::Index>(n_slow));

  std::vector<double> blade_height(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Blade motion follows its set point with a short lag.
    blade_height[k] = k == 0 ? intents[0].blade_height
                             : blade_height[k - 1] + kDt / (0.8 + kDt) * (intents[k].blade_height - blade_height[k - 1]);
  }

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / kFastRate;
    const Intent& in = intents[k];
    const EulerAngles& att = e.truth.poses[k].attitude;
    const double v_cmd_k = e.command_speed[k];
    const double w_cmd_k = e.command_yaw_rate[k];
    const double s = e.slip_ratio[k];
    const double load = e.load[k];
    const double ve_load =
        slip_in_ve ? load * (1.0 - 0.8 * s) : drawbar_load(in, v_cmd_k, w_cmd_k, false);

    Eigen::VectorXd row(static_cast<Eigen::Index>(fc.size()));
    std::size_t c = 0;
    row(c++) = t;
    row(c++) = kDt;
    const Vec3 f = specific_force[k];
    const Vec3 reported(-f.x(), f.y(), f.z());
    for (int a = 0; a < 3; ++a) {
      row(c++) = reported(a) + accel_bias(a) + noise(nz.accel_white) +
                 nz.accel_vibration * vib_axis[a] * std::sin(omega_vib * t + vib_phase[a]);
    }
    for (int a = 0; a < 3; ++a) {
      const double w = body_rate[k](a) + gyro_bias(a) + noise(nz.gyro_white) +
                       nz.gyro_vibration * std::sin(omega_vib * t + vib_phase[2 - a]);
      row(c++) = w * kRadToDeg;
    }
    row(c++) = att.roll * kRadToDeg + noise(nz.posture_white);
    row(c++) = att.pitch * kRadToDeg + noise(nz.posture_white);
    row(c++) = wrap_angle((att.yaw + noise(nz.posture_white) / kRadToDeg)) * kRadToDeg;
    row(c++) = v_cmd_k > 0.05 ? 0.0 : (v_cmd_k < -0.05 ? 2.0 : 1.0);
    row(c++) = std::clamp(100.0 * w_cmd_k / 0.4, -100.0, 100.0);

    const double h_rate = k == 0 ? 0.0 : (blade_height[k] - blade_height[k - 1]) / kDt;
    const double lift_lever = std::clamp(100.0 * h_rate / 0.3, -100.0, 100.0);
    row(c++) = lift_lever;
    row(c++) = in.tilt_lever;
    row(c++) = rel(400.0 + 6.0 * std::abs(lift_lever));
    row(c++) = rel(400.0 + 6.0 * std::abs(in.tilt_lever));
    row(c++) = rel(400.0);
    const double h_mm = 1000.0 * blade_height[k];
    const double tilt_mm = 8.0 * in.tilt_lever;
    row(c++) = 2600.0;
    row(c++) = -1600.0;
    row(c++) = h_mm - tilt_mm;
    row(c++) = 2600.0;
    row(c++) = 1600.0;
    row(c++) = h_mm + tilt_mm;
    row(c++) = rel(2000.0 - 300.0 * ve_load);
    row(c++) = rel(150.0 + 500.0 * ve_load);
    e.fast.values.col(static_cast<Eigen::Index>(k)) = row;

    if (k % 10 == 0) {
      const double tread = kDefaultTread;
      const double right = v_cmd_k + 0.5 * tread * w_cmd_k + noise(nz.encoder_white);
      const double left = v_cmd_k - 0.5 * tread * w_cmd_k + noise(nz.encoder_white);
      const double bu_load = load * (1.0 - 0.8 * s) + 0.5 * pre_slip[k];
      const double hst = 4.0 + 20.0 * bu_load;
      const double turn = 3.0 * w_cmd_k;
      const double pump = 3.0 + 30.0 * in.blade_load + 0.05 * std::abs(lift_lever) + noise(nz.pressure_white);
      double blade_state = 0.0;
      if (lift_lever > 5.0) {
        blade_state = 1.0;
      } else if (lift_lever < -5.0) {
        blade_state = 2.0;
      } else if (in.tilt_lever > 5.0) {
        blade_state = 3.0;
      } else if (in.tilt_lever < -5.0) {
        blade_state = 4.0;
      }
      Eigen::VectorXd srow(static_cast<Eigen::Index>(slc.size()));
      std::size_t j = 0;
      srow(j++) = static_cast<double>(k / 10) / kSlowRate;
      srow(j++) = right * kMps;
      srow(j++) = left * kMps;
      srow(j++) = std::abs(v_cmd_k) < 0.9 ? 0.0 : (std::abs(v_cmd_k) < 1.4 ? 1.0 : 2.0);
      srow(j++) = w_cmd_k > 0.03 ? 2.0 : (w_cmd_k < -0.03 ? 1.0 : 0.0);
      srow(j++) = blade_state;
      srow(j++) = rel(15.0 + 30.0 * blade_height[k]);
      srow(j++) = hst + turn + noise(nz.pressure_white);
      srow(j++) = hst - turn + noise(nz.pressure_white);
      srow(j++) = 0.9 * (hst + turn) + noise(nz.pressure_white);
      srow(j++) = 0.9 * (hst - turn) + noise(nz.pressure_white);
      srow(j++) = pump;
      srow(j++) = pump >= 36.0 ? 1.0 : 0.0;
      srow(j++) = rel(5.0e4 * ve_load * std::abs(v_cmd_k));
      e.slow.values.col(static_cast<Eigen::Index>(k / 10)) = srow;
    }
  }
  return e;
}

EpisodeFiles episode_files(const std::filesystem::path& dir, std::string_view id) {
  const std::string stem = "ep" + std::string(id);
  return {dir / (stem + "_100hz.csv"), dir / (stem + "_10hz.csv"), dir / (stem + "_truth.csv")};
}

EpisodeFiles export_episode(const Episode& e, const std::filesystem::path& dir, std::string_view id) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const EpisodeFiles files = episode_files(dir, id);
  csv::write(files.fast, e.fast);
  csv::write(files.slow, e.slow);

  csv::Table truth;
  truth.columns = truth_columns();
  const std::size_t n = e.truth.size();
  truth.values.resize(static_cast<Eigen::Index>(truth.columns.size()), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const StateVector& s = e.truth.poses[k];
    Eigen::VectorXd row(static_cast<Eigen::Index>(truth.columns.size()));
    row << e.truth.t[k], s.position, s.attitude.roll, s.attitude.pitch, s.attitude.yaw, e.truth_velocity[k],
        e.slip_ratio[k], static_cast<double>(e.truth.slip[k]);
    truth.values.col(static_cast<Eigen::Index>(k)) = row;
  }
  csv::write(files.truth, truth);
  return files;
}

}  // namespace trackpose::sim
