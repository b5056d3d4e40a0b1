#include "trackpose/mlp.hpp"

#include <string>

#include "trackpose/error.hpp"

namespace trackpose::learn {

Mlp::Mlp(std::size_t input_width, MlpConfig cfg) : input_width_(input_width), cfg_(std::move(cfg)) {
  std::size_t fan_in = input_width_;
  std::size_t index = 0;
  auto add_layer = [&](const std::string& name, std::size_t out) {
    params_.push_back({name + ".weight", Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in)),
                       Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in))});
    params_.push_back({name + ".bias", Matrix::Zero(static_cast<Eigen::Index>(out), 1),
                       Matrix::Zero(static_cast<Eigen::Index>(out), 1)});
    fan_in = out;
  };
  for (std::size_t width : cfg_.hidden) add_layer("hidden" + std::to_string(index++), width);
  add_layer("head", 3);
}

Mlp::Mlp(std::size_t input_width, MlpConfig cfg, std::uint64_t seed) : Mlp(input_width, std::move(cfg)) {
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < layer_count(); ++l) {
    Matrix& w = weight(l);
    glorot_uniform(w, static_cast<std::size_t>(w.cols()), static_cast<std::size_t>(w.rows()), rng);
  }
}

const Matrix& Mlp::input_of(const SequenceBatch& x) const {
  if (x.empty()) fail(ErrorCode::ShapeMismatch, "empty input sequence");
  const Matrix& in = x.back();
  if (static_cast<std::size_t>(in.rows()) != input_width_) {
    fail(ErrorCode::ShapeMismatch, "MLP expects " + std::to_string(input_width_) + " features, got " +
                                       std::to_string(in.rows()));
  }
  return in;
}

Matrix Mlp::forward(const SequenceBatch& x) const {
  Matrix a = input_of(x);
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = params_[2 * l].value * a;
    z.colwise() += params_[2 * l + 1].value.col(0);
    a = (l + 1 < layers) ? Matrix(z.cwiseMax(0.0)) : z;
  }
  return a;
}

double Mlp::forward_backward(const SequenceBatch& x, const Matrix& target) {
  const std::size_t layers = params_.size() / 2;
  std::vector<Matrix> acts;  // acts[l] is the input of layer l
  acts.reserve(layers + 1);
  acts.push_back(input_of(x));
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = params_[2 * l].value * acts.back();
    z.colwise() += params_[2 * l + 1].value.col(0);
    acts.push_back((l + 1 < layers) ? Matrix(z.cwiseMax(0.0)) : z);
  }
  const Matrix& y = acts.back();
  const double loss = mse(y, target);

  Matrix delta = 2.0 * (y - target) / static_cast<double>(y.size());
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& in = acts[l];
    params_[2 * l].grad.noalias() = delta * in.transpose();
    params_[2 * l + 1].grad = delta.rowwise().sum();
    if (l > 0) {
      Matrix upstream = params_[2 * l].value.transpose() * delta;
      // ReLU derivative: the post-activation is positive exactly where the unit was active.
      delta = upstream.cwiseProduct((in.array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

}  // namespace trackpose::learn
