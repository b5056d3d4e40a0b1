#include "trackpose/ekf.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "trackpose/error.hpp"

namespace trackpose {

void validate(const Trajectory& trajectory) {
  if (trajectory.t.size() != trajectory.poses.size()) {
    fail(ErrorCode::LengthMismatch, "trajectory has " + std::to_string(trajectory.t.size()) +
                                        " timestamps but " + std::to_string(trajectory.poses.size()) + " poses");
  }
  if (!trajectory.slip.empty() && trajectory.slip.size() != trajectory.poses.size()) {
    fail(ErrorCode::LengthMismatch, "slip flags do not match trajectory length");
  }
  for (std::size_t i = 1; i < trajectory.t.size(); ++i) {
    if (!(trajectory.t[i] > trajectory.t[i - 1])) {
      fail(ErrorCode::NonMonotoneTime, "trajectory timestamp " + std::to_string(i) + " does not increase");
    }
  }
}

namespace ekf {
namespace {

void require_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) fail(ErrorCode::NonFiniteInput, std::string(what) + " is not finite");
}

}  // namespace

NoiseConfig default_noise(double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  const double dt2 = dt * dt;
  NoiseConfig n;
  n.process.diagonal() << 0.1 * dt2, 0.1 * dt2, 0.1 * dt2, 0.01 * dt2, 0.01 * dt2, 0.01 * dt2;
  n.measurement = Mat2::Identity() * 0.01;
  return n;
}

FilterState initial_state(const StateVector& s0, const FilterConfig& cfg) {
  FilterState fs;
  fs.state = s0;
  fs.state.attitude = wrapped(s0.attitude);
  fs.covariance = Mat6::Identity() * cfg.initial_variance;
  return fs;
}

StateVector transition(const StateVector& s, const ControlInput& u) {
  StateVector next;
  next.position = s.position + rot_xyz(s.attitude) * u.velocity * u.dt;
  const Vec3 r = s.attitude.as_vector() + rot_rpy(s.attitude) * u.angular_velocity * u.dt;
  next.attitude = wrapped(EulerAngles::from_vector(r));
  return next;
}

Mat6 transition_jacobian(const StateVector& s, const ControlInput& u) {
  Mat6 j = Mat6::Identity();
  j.block<3, 3>(0, 3) += rot_xyz_times_jacobian(s.attitude, u.velocity) * u.dt;
  j.block<3, 3>(3, 3) += rot_rpy_times_jacobian(s.attitude, u.angular_velocity) * u.dt;
  return j;
}

FilterState predict(const FilterState& fs, const ControlInput& u, const NoiseConfig& noise,
                    const FilterConfig& cfg) {
  require_finite(u.velocity, "velocity");
  require_finite(u.angular_velocity, "angular velocity");
  if (!fs.state.as_vector().allFinite() || !fs.covariance.allFinite()) {
    fail(ErrorCode::NonFiniteInput, "filter state is not finite");
  }
  if (!std::isfinite(u.dt) || u.dt <= 0.0 || u.dt > cfg.max_dt) {
    fail(ErrorCode::InvalidArgument, "dt = " + std::to_string(u.dt) + " outside (0, " +
                                         std::to_string(cfg.max_dt) + "]");
  }
  check_pitch(fs.state.attitude.pitch);

  const Mat6 jf = transition_jacobian(fs.state, u);
  FilterState out;
  out.state = transition(fs.state, u);
  out.covariance = jf * fs.covariance * jf.transpose() + noise.process;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

AttitudeObservation attitude_from_accel(const Vec3& a) {
  require_finite(a, "acceleration");
  if (a.norm() <= 0.1 * kGravity) {
    fail(ErrorCode::DegenerateAcceleration, "|a| = " + std::to_string(a.norm()) + " m/s^2 is near free fall");
  }
  return {std::atan2(a.y(), a.z()), std::atan(a.x() / std::hypot(a.y(), a.z()))};
}

std::optional<AttitudeObservation> observe(const Vec3& accel, const FilterConfig& cfg) {
  if (cfg.gravity_gate && std::abs(accel.norm() - kGravity) > *cfg.gravity_gate) return std::nullopt;
  return attitude_from_accel(accel);
}

Eigen::Matrix<double, 2, 6> observation_matrix() {
  Eigen::Matrix<double, 2, 6> h = Eigen::Matrix<double, 2, 6>::Zero();
  h(0, 3) = 1.0;
  h(1, 4) = 1.0;
  return h;
}

FilterState update(const FilterState& fs, const AttitudeObservation& z, const NoiseConfig& noise) {
  if (!std::isfinite(z.roll) || !std::isfinite(z.pitch)) fail(ErrorCode::NonFiniteInput, "observation is not finite");
  const Eigen::Matrix<double, 2, 6> h = observation_matrix();
  const Vec6 s = fs.state.as_vector();

  Eigen::Vector2d innovation{wrap_angle(z.roll - s(3)), wrap_angle(z.pitch - s(4))};
  const Mat2 innovation_cov = h * fs.covariance * h.transpose() + noise.measurement;

  // Condition number of a symmetric 2x2 via its eigenvalues.
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(innovation_cov, Eigen::EigenvaluesOnly);
  const double lo = std::abs(eig.eigenvalues().minCoeff());
  const double hi = std::abs(eig.eigenvalues().maxCoeff());
  if (!(lo > 0.0) || hi / lo > 1e12) {
    fail(ErrorCode::SingularInnovation, "innovation covariance is not invertible");
  }

  const Eigen::Matrix<double, 6, 2> gain = fs.covariance * h.transpose() * innovation_cov.inverse();
  FilterState out;
  const Vec6 corrected = s + gain * innovation;
  out.state = StateVector::from_vector(corrected);
  out.state.attitude = wrapped(out.state.attitude);
  out.covariance = (Mat6::Identity() - gain * h) * fs.covariance;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

bool covariance_is_valid(const Mat6& p) {
  if (!p.allFinite()) return false;
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-9) return false;
  const Eigen::SelfAdjointEigenSolver<Mat6> eig(p, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > -1e-9;
}

Trajectory run_filter(const FilterState& init, double t0, std::span<const FilterStep> steps,
                      const FilterConfig& cfg) {
  Trajectory out;
  out.t.reserve(steps.size() + 1);
  out.poses.reserve(steps.size() + 1);
  out.push_back(t0, init.state);

  FilterState fs = init;
  double t = t0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    try {
      const FilterStep& step = steps[k];
      fs = predict(fs, step.control, default_noise(step.control.dt), cfg);
      if (step.observation) fs = update(fs, *step.observation, default_noise(step.control.dt));
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(k) + ": " + e.what());
    }
    t += steps[k].control.dt;
    out.push_back(t, fs.state);
  }
  return out;
}

}  // namespace ekf
}  // namespace trackpose
