#pragma once

#include <cstdint>
#include <vector>

#include "trackpose/nn.hpp"

namespace trackpose::learn {

struct MlpConfig {
  std::vector<std::size_t> hidden = {256, 256, 256, 256};
};

/// Affine + ReLU hidden layers followed by a linear 3-unit head.
class Mlp final : public VelocityModel {
 public:
  /// Glorot-uniform weights, zero biases.
  Mlp(std::size_t input_width, MlpConfig cfg, std::uint64_t seed);
  /// Zero-initialized layers of the given shape (for loading / hand-set tests).
  Mlp(std::size_t input_width, MlpConfig cfg);

  ModelKind kind() const override { return ModelKind::Mlp; }
  std::size_t input_width() const override { return input_width_; }
  std::size_t window() const override { return 1; }
  const MlpConfig& config() const { return cfg_; }

  /// Uses the last step of `x`.
  Matrix forward(const SequenceBatch& x) const override;
  double forward_backward(const SequenceBatch& x, const Matrix& target) override;

  std::vector<Parameter>& parameters() override { return params_; }
  const std::vector<Parameter>& parameters() const override { return params_; }
  std::unique_ptr<VelocityModel> clone() const override { return std::make_unique<Mlp>(*this); }

  // params_ = [w0, b0, w1, b1, ..., head_w, head_b]
  Matrix& weight(std::size_t layer) { return params_[2 * layer].value; }
  Matrix& bias(std::size_t layer) { return params_[2 * layer + 1].value; }
  std::size_t layer_count() const { return params_.size() / 2; }

 private:
  const Matrix& input_of(const SequenceBatch& x) const;

  std::size_t input_width_;
  MlpConfig cfg_;
  std::vector<Parameter> params_;
};

}  // namespace trackpose::learn
