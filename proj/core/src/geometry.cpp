#include "trackpose/geometry.hpp"

#include <cmath>
#include <string>

#include "trackpose/error.hpp"

namespace trackpose {

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

EulerAngles wrapped(const EulerAngles& r) { return {wrap_angle(r.roll), r.pitch, wrap_angle(r.yaw)}; }

bool pitch_within_guard(double pitch) { return std::abs(pitch) < kPi / 2.0 - kPitchGuard; }

void check_pitch(double pitch) {
  if (!std::isfinite(pitch)) fail(ErrorCode::NonFiniteInput, "pitch is not finite");
  if (!pitch_within_guard(pitch)) {
    fail(ErrorCode::PitchSingularity, "|pitch| = " + std::to_string(std::abs(pitch)) + " rad is within " +
                                          std::to_string(kPitchGuard) + " rad of pi/2");
  }
}

Mat3 rot_xyz(const EulerAngles& r) {
  check_pitch(r.pitch);
  const double cr = std::cos(r.roll), sr = std::sin(r.roll);
  const double cp = std::cos(r.pitch), sp = std::sin(r.pitch);
  const double cy = std::cos(r.yaw), sy = std::sin(r.yaw);
  Mat3 m;
  m << cp * cy, sr * sp * cy - cr * sy, cr * sp * cy + sr * sy,
       cp * sy, sr * sp * sy + cr * cy, cr * sp * sy - sr * cy,
       -sp,     sr * cp,                cr * cp;
  return m;
}

Mat3 rot_rpy(const EulerAngles& r) {
  check_pitch(r.pitch);
  const double cr = std::cos(r.roll), sr = std::sin(r.roll);
  const double cp = std::cos(r.pitch), tp = std::tan(r.pitch);
  Mat3 m;
  m << 1.0, sr * tp,  cr * tp,
       0.0, cr,       -sr,
       0.0, sr / cp,  cr / cp;
  return m;
}

Mat3 rot_rpy_inverse(const EulerAngles& r) {
  check_pitch(r.pitch);
  const double cr = std::cos(r.roll), sr = std::sin(r.roll);
  const double cp = std::cos(r.pitch), sp = std::sin(r.pitch);
  Mat3 m;
  m << 1.0, 0.0, -sp,
       0.0, cr,  sr * cp,
       0.0, -sr, cr * cp;
  return m;
}

Mat3 rot_xyz_times_jacobian(const EulerAngles& r, const Vec3& v) {
  check_pitch(r.pitch);
  const double cr = std::cos(r.roll), sr = std::sin(r.roll);
  const double cp = std::cos(r.pitch), sp = std::sin(r.pitch);
  const double cy = std::cos(r.yaw), sy = std::sin(r.yaw);
  const double a = v.x(), b = v.y(), c = v.z();
  Mat3 j;
  // d/droll
  j(0, 0) = (cr * sp * cy + sr * sy) * b + (-sr * sp * cy + cr * sy) * c;
  j(1, 0) = (cr * sp * sy - sr * cy) * b + (-sr * sp * sy - cr * cy) * c;
  j(2, 0) = cr * cp * b - sr * cp * c;
  // d/dpitch
  j(0, 1) = -sp * cy * a + sr * cp * cy * b + cr * cp * cy * c;
  j(1, 1) = -sp * sy * a + sr * cp * sy * b + cr * cp * sy * c;
  j(2, 1) = -cp * a - sr * sp * b - cr * sp * c;
  // d/dyaw
  j(0, 2) = -cp * sy * a + (-sr * sp * sy - cr * cy) * b + (-cr * sp * sy + sr * cy) * c;
  j(1, 2) = cp * cy * a + (sr * sp * cy - cr * sy) * b + (cr * sp * cy + sr * sy) * c;
  j(2, 2) = 0.0;
  return j;
}

Mat3 rot_rpy_times_jacobian(const EulerAngles& r, const Vec3& w) {
  check_pitch(r.pitch);
  const double cr = std::cos(r.roll), sr = std::sin(r.roll);
  const double cp = std::cos(r.pitch), sp = std::sin(r.pitch), tp = std::tan(r.pitch);
  const double q = w.y(), rz = w.z();
  Mat3 j = Mat3::Zero();
  j(0, 0) = cr * tp * q - sr * tp * rz;
  j(1, 0) = -sr * q - cr * rz;
  j(2, 0) = (cr * q - sr * rz) / cp;
  const double s = sr * q + cr * rz;
  j(0, 1) = s / (cp * cp);
  j(1, 1) = 0.0;
  j(2, 1) = s * sp / (cp * cp);
  return j;
}

}  // namespace trackpose
