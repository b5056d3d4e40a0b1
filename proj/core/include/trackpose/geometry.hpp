#pragma once

#include <Eigen/Core>

namespace trackpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGravity = 9.80665;

/// Margin kept between |pitch| and pi/2; both attitude matrices fail beyond it.
inline constexpr double kPitchGuard = 1e-3;

/// Roll, pitch, yaw in radians. Intrinsic Z-Y-X (yaw, then pitch, then roll),
/// right-handed, body x along the direction of travel.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  Vec3 as_vector() const { return {roll, pitch, yaw}; }
  static EulerAngles from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

  bool operator==(const EulerAngles&) const = default;
};

/// Wraps to (-pi, pi].
double wrap_angle(double angle);

/// Wraps roll and yaw; pitch is left as is.
EulerAngles wrapped(const EulerAngles& r);

bool pitch_within_guard(double pitch);

/// Throws PitchSingularity when |pitch| >= pi/2 - kPitchGuard.
void check_pitch(double pitch);

/// Body-to-global rotation (local positions/velocities into the global frame).
Mat3 rot_xyz(const EulerAngles& r);

/// Maps body angular velocity to Euler-angle rates. Contains 1/cos(pitch).
Mat3 rot_rpy(const EulerAngles& r);

/// Inverse of rot_rpy: Euler-angle rates to body angular velocity.
Mat3 rot_rpy_inverse(const EulerAngles& r);

/// d(rot_xyz(r) * v)/d(roll, pitch, yaw) as columns.
Mat3 rot_xyz_times_jacobian(const EulerAngles& r, const Vec3& v);

/// d(rot_rpy(r) * w)/d(roll, pitch, yaw) as columns. The yaw column is zero.
Mat3 rot_rpy_times_jacobian(const EulerAngles& r, const Vec3& w);

}  // namespace trackpose
