#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "trackpose/nn.hpp"

namespace trackpose::learn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  std::size_t batch_size = 2048;
  int validation_period = 5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  /// Keep every k-th frame as a training/validation sample (1 = all frames).
  std::size_t sample_stride = 1;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
  void validate() const;
};

/// Standardized per-episode feature matrices (channels x frames) with targets
/// (3 x frames). A sample is one frame; its window covers the `window` frames
/// ending at it, front-padded with the episode's first frame.
class WindowDataset {
 public:
  explicit WindowDataset(std::size_t window, std::size_t stride = 1);

  void add_episode(Matrix features, Matrix targets);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t window() const { return window_; }
  std::size_t feature_width() const { return width_; }
  std::size_t episode_count() const { return features_.size(); }

  void gather(std::span<const std::size_t> ids, SequenceBatch& x, Matrix& y) const;

 private:
  struct Sample {
    std::uint32_t episode;
    std::uint32_t frame;
  };
  std::size_t window_;
  std::size_t stride_;
  std::size_t width_ = 0;
  std::vector<Matrix> features_;
  std::vector<Matrix> targets_;
  std::vector<Sample> samples_;
};

/// One Adam step on the batch; returns the batch MSE before the step.
/// Throws NonFiniteLoss when the loss or a gradient is not finite.
double backward_and_step(VelocityModel& model, const SequenceBatch& x, const Matrix& target, Adam& optimizer);

/// Mean squared error over the whole dataset.
double evaluate_loss(const VelocityModel& model, const WindowDataset& data, std::size_t batch = 4096);

struct EpochRecord {
  int epoch = 0;
  std::optional<double> train_loss;  // absent for the initial evaluation
  std::optional<double> val_loss;
};

struct TrainResult {
  std::unique_ptr<VelocityModel> best;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  std::vector<EpochRecord> curve;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Shuffled mini-batches each epoch (seeded by cfg.seed). Validation runs on
/// the initial weights, every `validation_period` epochs and after the last
/// epoch; the lowest validation MSE wins.
TrainResult train(std::unique_ptr<VelocityModel> model, const WindowDataset& train_set, const WindowDataset& val_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace trackpose::learn
