#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "trackpose/checkpoint.hpp"
#include "trackpose/geometry.hpp"
#include "trackpose/nn.hpp"
#include "trackpose/schema.hpp"

namespace trackpose {

/// Track tread of the reference machine (m).
inline constexpr double kDefaultTread = 2.77;
/// Sanity clamp on estimated speed (m/s).
inline constexpr double kDefaultMaxSpeed = 5.0;
inline constexpr double kMasterRateHz = 100.0;

struct CrawlerReading {
  double right = 0.0;  // m/s
  double left = 0.0;   // m/s
};

struct CrawlerMotion {
  double forward_speed = 0.0;  // m/s
  double yaw_rate = 0.0;       // rad/s
};

/// Differential-drive kinematics: v = (vr + vl) / 2, w = (vr - vl) / T.
CrawlerMotion crawler_kinematics(const CrawlerReading& c, double tread = kDefaultTread);

/// One raw channel sampled at its native rate.
struct RawChannel {
  std::string name;
  std::vector<double> t;
  std::vector<double> values;
};

/// Master clock ticks t0, t0 + 1/rate, ... strictly below t_end.
std::vector<double> master_ticks(double t0, double t_end, double rate_hz = kMasterRateHz);

/// Zero-order hold onto the master ticks. Row i of the result is channels[i].
/// A tick carries the latest sample at or before it (within 1e-9 s); ticks
/// before the first sample carry the first value. Throws EmptyChannel.
Eigen::MatrixXd align_to_master_clock(const std::vector<RawChannel>& channels, const std::vector<double>& ticks);

/// Rolling window over a per-stream feature sequence, oldest first. Until
/// `window` frames have arrived the front is padded with the first frame.
class FeatureWindowBuffer {
 public:
  FeatureWindowBuffer(std::size_t window, std::size_t width);

  void push(const Eigen::VectorXd& frame);
  /// width x window. Requires at least one frame.
  Eigen::MatrixXd window() const;
  std::size_t frames_seen() const { return seen_; }

 private:
  std::size_t window_;
  std::size_t width_;
  std::size_t seen_ = 0;
  std::size_t head_ = 0;  // ring position of the next write
  Eigen::MatrixXd ring_;
};

/// Runs a model on one standardized window (width x steps, oldest first).
/// The MLP reads the newest column; the LSTM needs exactly model.window()
/// columns. The result is clamped to |v| <= max_speed (logged).
Vec3 estimate_velocity(const learn::VelocityModel* model, const Eigen::MatrixXd& window,
                       double max_speed = kDefaultMaxSpeed);

/// Velocity from crawler encoders only: (v_x, 0, 0).
class KinematicEstimator {
 public:
  explicit KinematicEstimator(double tread = kDefaultTread) : tread_(tread) {}
  Vec3 estimate(const CrawlerReading& c) const { return {crawler_kinematics(c, tread_).forward_speed, 0.0, 0.0}; }
  double tread() const { return tread_; }

 private:
  double tread_;
};

/// Streaming learned estimator: standardize, window, infer.
class LearnedEstimator {
 public:
  explicit LearnedEstimator(std::shared_ptr<const learn::Checkpoint> checkpoint,
                            double max_speed = kDefaultMaxSpeed);

  /// Raw feature vector ordered as checkpoint->standardizer.input_schema.
  Vec3 push(const Eigen::VectorXd& raw_frame);
  void reset();
  const learn::Checkpoint& checkpoint() const { return *checkpoint_; }

 private:
  std::shared_ptr<const learn::Checkpoint> checkpoint_;
  FeatureWindowBuffer buffer_;
  double max_speed_;
};

}  // namespace trackpose
