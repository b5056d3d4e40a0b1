#pragma once

#include <cstdint>

#include "trackpose/nn.hpp"

namespace trackpose::learn {

struct LstmConfig {
  std::size_t layers = 4;
  std::size_t hidden = 256;
  std::size_t window = 40;
};

/// Stacked LSTM over a fixed-length window with a linear 3-unit head on the
/// last hidden state of the top layer. State starts at zero for every window.
///
/// Per layer: w_input (4H x in), w_hidden (4H x H), bias (4H x 1), gate rows
/// ordered input, forget, cell, output:
///   i = sig(.)  f = sig(.)  g = tanh(.)  o = sig(.)
///   c_t = f * c_{t-1} + i * g,   h_t = o * tanh(c_t)
class Lstm final : public VelocityModel {
 public:
  /// Glorot-uniform gate weights, forget-gate bias 1, other biases 0.
  Lstm(std::size_t input_width, LstmConfig cfg, std::uint64_t seed);
  /// All-zero parameters of the given shape.
  Lstm(std::size_t input_width, LstmConfig cfg);

  ModelKind kind() const override { return ModelKind::Lstm; }
  std::size_t input_width() const override { return input_width_; }
  std::size_t window() const override { return cfg_.window; }
  const LstmConfig& config() const { return cfg_; }

  Matrix forward(const SequenceBatch& x) const override;
  double forward_backward(const SequenceBatch& x, const Matrix& target) override;

  std::vector<Parameter>& parameters() override { return params_; }
  const std::vector<Parameter>& parameters() const override { return params_; }
  std::unique_ptr<VelocityModel> clone() const override { return std::make_unique<Lstm>(*this); }

  Matrix& w_input(std::size_t layer) { return params_[3 * layer].value; }
  Matrix& w_hidden(std::size_t layer) { return params_[3 * layer + 1].value; }
  Matrix& bias(std::size_t layer) { return params_[3 * layer + 2].value; }
  Matrix& head_weight() { return params_[3 * cfg_.layers].value; }
  Matrix& head_bias() { return params_[3 * cfg_.layers + 1].value; }

 private:
  struct StepCache {
    Matrix i, f, g, o, c, tanh_c, h;
  };
  void check_input(const SequenceBatch& x) const;
  /// Runs the recurrence; fills `cache[layer][t]` when non-null.
  Matrix run(const SequenceBatch& x, std::vector<std::vector<StepCache>>* cache) const;

  std::size_t input_width_;
  LstmConfig cfg_;
  std::vector<Parameter> params_;
};

}  // namespace trackpose::learn
