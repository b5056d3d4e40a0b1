#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "trackpose/geometry.hpp"

namespace trackpose {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Global position (m) and attitude (rad).
struct StateVector {
  Vec3 position = Vec3::Zero();
  EulerAngles attitude;

  Vec6 as_vector() const {
    Vec6 s;
    s << position, attitude.as_vector();
    return s;
  }
  static StateVector from_vector(const Vec6& s) {
    return {s.head<3>(), EulerAngles::from_vector(s.tail<3>())};
  }
};

/// Time-indexed poses. `slip` is either empty or one flag per pose.
struct Trajectory {
  std::vector<double> t;
  std::vector<StateVector> poses;
  std::vector<std::uint8_t> slip;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }
  void push_back(double time, const StateVector& pose) {
    t.push_back(time);
    poses.push_back(pose);
  }
};

/// Throws NonMonotoneTime / LengthMismatch when the invariants are broken.
void validate(const Trajectory& trajectory);

}  // namespace trackpose
