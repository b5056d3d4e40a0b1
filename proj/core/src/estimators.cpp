#include "trackpose/estimators.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "trackpose/error.hpp"

namespace trackpose {

CrawlerMotion crawler_kinematics(const CrawlerReading& c, double tread) {
  if (!(tread > 0.0)) fail(ErrorCode::InvalidArgument, "tread must be positive");
  return {0.5 * (c.right + c.left), (c.right - c.left) / tread};
}

std::vector<double> master_ticks(double t0, double t_end, double rate_hz) {
  if (!(rate_hz > 0.0)) fail(ErrorCode::InvalidArgument, "master rate must be positive");
  std::vector<double> ticks;
  const double period = 1.0 / rate_hz;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * period;
    if (t >= t_end - 1e-9) break;
    ticks.push_back(t);
  }
  return ticks;
}

Eigen::MatrixXd align_to_master_clock(const std::vector<RawChannel>& channels, const std::vector<double>& ticks) {
  constexpr double kTol = 1e-9;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(channels.size()), static_cast<Eigen::Index>(ticks.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const RawChannel& ch = channels[c];
    if (ch.t.empty() || ch.t.size() != ch.values.size()) {
      fail(ErrorCode::EmptyChannel, "channel '" + ch.name + "' has no samples");
    }
    for (std::size_t i = 1; i < ch.t.size(); ++i) {
      if (!(ch.t[i] > ch.t[i - 1])) {
        fail(ErrorCode::NonMonotoneTime, "channel '" + ch.name + "' time does not increase at sample " +
                                             std::to_string(i));
      }
    }
    std::size_t j = 0;  // latest sample index with t <= tick
    for (std::size_t k = 0; k < ticks.size(); ++k) {
      while (j + 1 < ch.t.size() && ch.t[j + 1] <= ticks[k] + kTol) ++j;
      out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = ch.values[j];
    }
  }
  return out;
}

FeatureWindowBuffer::FeatureWindowBuffer(std::size_t window, std::size_t width)
    : window_(window), width_(width), ring_(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(window)) {
  if (window_ == 0) fail(ErrorCode::InvalidArgument, "window must be positive");
}

void FeatureWindowBuffer::push(const Eigen::VectorXd& frame) {
  if (static_cast<std::size_t>(frame.size()) != width_) {
    fail(ErrorCode::SchemaMismatch, "frame width " + std::to_string(frame.size()) + " != " + std::to_string(width_));
  }
  if (seen_ == 0) {
    ring_.colwise() = frame;
  } else {
    ring_.col(static_cast<Eigen::Index>(head_)) = frame;
  }
  head_ = (head_ + 1) % window_;
  ++seen_;
}

Eigen::MatrixXd FeatureWindowBuffer::window() const {
  if (seen_ == 0) fail(ErrorCode::InvalidArgument, "window buffer is empty");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(width_), static_cast<Eigen::Index>(window_));
  for (std::size_t j = 0; j < window_; ++j) {
    out.col(static_cast<Eigen::Index>(j)) = ring_.col(static_cast<Eigen::Index>((head_ + j) % window_));
  }
  return out;
}

Vec3 estimate_velocity(const learn::VelocityModel* model, const Eigen::MatrixXd& window, double max_speed) {
  if (model == nullptr || model->parameters().empty()) fail(ErrorCode::ModelNotTrained, "no velocity model loaded");
  if (static_cast<std::size_t>(window.rows()) != model->input_width()) {
    fail(ErrorCode::SchemaMismatch, "window has " + std::to_string(window.rows()) + " channels, model expects " +
                                        std::to_string(model->input_width()));
  }
  learn::SequenceBatch x;
  if (model->kind() == learn::ModelKind::Mlp) {
    if (window.cols() == 0) fail(ErrorCode::ShapeMismatch, "empty window");
    x.push_back(window.col(window.cols() - 1));
  } else {
    if (static_cast<std::size_t>(window.cols()) != model->window()) {
      fail(ErrorCode::ShapeMismatch, "window has " + std::to_string(window.cols()) + " steps, model expects " +
                                         std::to_string(model->window()));
    }
    x.reserve(model->window());
    for (Eigen::Index j = 0; j < window.cols(); ++j) x.push_back(window.col(j));
  }
  Vec3 v = model->forward(x).col(0);
  if (!v.allFinite()) fail(ErrorCode::NonFiniteInput, "model produced a non-finite velocity");
  const double speed = v.norm();
  if (speed > max_speed) {
    spdlog::warn("velocity estimate {:.3f} m/s clamped to {:.3f} m/s", speed, max_speed);
    v *= max_speed / speed;
  }
  return v;
}

LearnedEstimator::LearnedEstimator(std::shared_ptr<const learn::Checkpoint> checkpoint, double max_speed)
    : checkpoint_(std::move(checkpoint)),
      buffer_(checkpoint_->window(), checkpoint_->standardizer.schema.size()),
      max_speed_(max_speed) {
  if (!checkpoint_->model) fail(ErrorCode::ModelNotTrained, "checkpoint has no model");
}

Vec3 LearnedEstimator::push(const Eigen::VectorXd& raw_frame) {
  buffer_.push(checkpoint_->standardizer.apply(raw_frame));
  return estimate_velocity(checkpoint_->model.get(), buffer_.window(), max_speed_);
}

void LearnedEstimator::reset() { buffer_ = FeatureWindowBuffer(checkpoint_->window(), checkpoint_->standardizer.schema.size()); }

}  // namespace trackpose
