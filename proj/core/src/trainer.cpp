#include "trackpose/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "trackpose/error.hpp"

namespace trackpose::learn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || epochs < 0 || batch_size == 0 || validation_period <= 0 || !(beta1 > 0.0) ||
      !(beta2 > 0.0) || !(epsilon > 0.0) || sample_stride == 0) {
    fail(ErrorCode::Config, "training configuration values must be positive");
  }
}

WindowDataset::WindowDataset(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
  if (window_ == 0 || stride_ == 0) fail(ErrorCode::InvalidArgument, "window and stride must be positive");
}

void WindowDataset::add_episode(Matrix features, Matrix targets) {
  if (features.cols() != targets.cols() || targets.rows() != 3) {
    fail(ErrorCode::ShapeMismatch, "episode features and targets must have matching frame counts and 3 target rows");
  }
  if (features_.empty()) {
    width_ = static_cast<std::size_t>(features.rows());
  } else if (static_cast<std::size_t>(features.rows()) != width_) {
    fail(ErrorCode::SchemaMismatch, "episode feature width differs from the dataset's");
  }
  const auto episode = static_cast<std::uint32_t>(features_.size());
  for (Eigen::Index k = 0; k < features.cols(); k += static_cast<Eigen::Index>(stride_)) {
    samples_.push_back({episode, static_cast<std::uint32_t>(k)});
  }
  features_.push_back(std::move(features));
  targets_.push_back(std::move(targets));
}

void WindowDataset::gather(std::span<const std::size_t> ids, SequenceBatch& x, Matrix& y) const {
  const auto batch = static_cast<Eigen::Index>(ids.size());
  x.assign(window_, Matrix(static_cast<Eigen::Index>(width_), batch));
  y.resize(3, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Sample& s = samples_[ids[static_cast<std::size_t>(b)]];
    const Matrix& f = features_[s.episode];
    for (std::size_t j = 0; j < window_; ++j) {
      const long frame = static_cast<long>(s.frame) - static_cast<long>(window_ - 1 - j);
      x[j].col(b) = f.col(std::max(0L, frame));
    }
    y.col(b) = targets_[s.episode].col(s.frame);
  }
}

double backward_and_step(VelocityModel& model, const SequenceBatch& x, const Matrix& target, Adam& optimizer) {
  if (x.empty() || x.front().cols() == 0) fail(ErrorCode::InvalidArgument, "empty batch");
  const double loss = model.forward_backward(x, target);
  bool finite = std::isfinite(loss);
  for (const auto& p : model.parameters()) finite = finite && p.grad.allFinite();
  if (!finite) {
    fail(ErrorCode::NonFiniteLoss, "loss = " + std::to_string(loss) + " after " +
                                       std::to_string(optimizer.steps_taken()) + " optimizer steps");
  }
  optimizer.step(model.parameters());
  return loss;
}

double evaluate_loss(const VelocityModel& model, const WindowDataset& data, std::size_t batch) {
  if (data.empty()) fail(ErrorCode::InvalidArgument, "cannot evaluate on an empty dataset");
  std::vector<std::size_t> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  SequenceBatch x;
  Matrix y;
  double sum = 0.0;
  for (std::size_t begin = 0; begin < ids.size(); begin += batch) {
    const std::size_t n = std::min(batch, ids.size() - begin);
    data.gather(std::span(ids).subspan(begin, n), x, y);
    sum += (model.forward(x) - y).squaredNorm();
  }
  return sum / (3.0 * static_cast<double>(data.size()));
}

TrainResult train(std::unique_ptr<VelocityModel> model, const WindowDataset& train_set, const WindowDataset& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (val_set.empty()) fail(ErrorCode::InvalidArgument, "validation set is empty");
  if (cfg.epochs > 0 && train_set.empty()) fail(ErrorCode::InvalidArgument, "training set is empty");
  if (train_set.window() != model->window() || val_set.window() != model->window()) {
    fail(ErrorCode::ShapeMismatch, "dataset window does not match the model");
  }

  TrainResult result;
  auto record = [&](EpochRecord r) {
    if (on_epoch) on_epoch(r);
    result.curve.push_back(r);
  };

  result.best_val_loss = evaluate_loss(*model, val_set);
  result.best = model->clone();
  record({0, std::nullopt, result.best_val_loss});

  Adam optimizer(model->parameters(), cfg.adam());
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  SequenceBatch x;
  Matrix y;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - begin);
      train_set.gather(std::span(order).subspan(begin, n), x, y);
      weighted += backward_and_step(*model, x, y, optimizer) * static_cast<double>(n);
    }
    EpochRecord r{epoch, weighted / static_cast<double>(order.size()), std::nullopt};
    if (epoch % cfg.validation_period == 0 || epoch == cfg.epochs) {
      const double val = evaluate_loss(*model, val_set);
      r.val_loss = val;
      if (val < result.best_val_loss) {
        result.best_val_loss = val;
        result.best_epoch = epoch;
        result.best = model->clone();
      }
      spdlog::debug("epoch {}: train {:.6g} val {:.6g}", epoch, *r.train_loss, val);
    }
    record(r);
  }
  return result;
}

}  // namespace trackpose::learn
