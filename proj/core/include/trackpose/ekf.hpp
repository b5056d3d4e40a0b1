#pragma once

#include <optional>
#include <span>

#include <Eigen/Core>

#include "trackpose/geometry.hpp"
#include "trackpose/trajectory.hpp"

namespace trackpose::ekf {

using Mat2 = Eigen::Matrix2d;

struct FilterState {
  StateVector state;
  Mat6 covariance = Mat6::Identity() * 1e-4;
};

/// Local velocity (m/s), body angular velocity (rad/s) and the step length (s).
struct ControlInput {
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  double dt = 0.01;
};

struct NoiseConfig {
  Mat6 process = Mat6::Zero();
  Mat2 measurement = Mat2::Identity() * 0.01;
};

struct AttitudeObservation {
  double roll = 0.0;
  double pitch = 0.0;
};

struct FilterConfig {
  double max_dt = 0.1;
  /// Skip the update when | |a| - g | exceeds this (m/s^2). Disabled when empty.
  std::optional<double> gravity_gate;
  /// Diagonal of P0.
  double initial_variance = 1e-4;
};

/// Q = diag(0.1 dt^2 x3, 0.01 dt^2 x3), R = diag(0.01, 0.01).
NoiseConfig default_noise(double dt);

FilterState initial_state(const StateVector& s0, const FilterConfig& cfg = {});

/// State transition: position advanced by rot_xyz(r) v dt, attitude by rot_rpy(r) w dt.
StateVector transition(const StateVector& s, const ControlInput& u);

/// Analytic d transition / d state at (s, u).
Mat6 transition_jacobian(const StateVector& s, const ControlInput& u);

FilterState predict(const FilterState& fs, const ControlInput& u, const NoiseConfig& noise,
                    const FilterConfig& cfg = {});

/// roll = atan2(a_y, a_z), pitch = atan(a_x / sqrt(a_y^2 + a_z^2)).
AttitudeObservation attitude_from_accel(const Vec3& accel);

/// Applies the gravity gate, if configured; nullopt means "skip the update".
std::optional<AttitudeObservation> observe(const Vec3& accel, const FilterConfig& cfg);

/// The 2x6 matrix selecting roll and pitch from the state.
Eigen::Matrix<double, 2, 6> observation_matrix();

FilterState update(const FilterState& fs, const AttitudeObservation& z, const NoiseConfig& noise);

/// True when P is symmetric within 1e-9 and its smallest eigenvalue is > -1e-9.
bool covariance_is_valid(const Mat6& p);

struct FilterStep {
  ControlInput control;
  std::optional<AttitudeObservation> observation;
};

/// Predict then (optionally) update per step, with Q recomputed from each step's dt.
/// Returns init followed by one pose per step; errors carry the failing step index.
Trajectory run_filter(const FilterState& init, double t0, std::span<const FilterStep> steps,
                      const FilterConfig& cfg = {});

}  // namespace trackpose::ekf
