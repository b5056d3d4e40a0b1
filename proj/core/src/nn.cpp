#include "trackpose/nn.hpp"

#include <cmath>

#include "trackpose/error.hpp"

namespace trackpose::learn {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Lstm: return "lstm";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "mlp") return ModelKind::Mlp;
  if (text == "lstm") return ModelKind::Lstm;
  fail(ErrorCode::Config, "unknown model kind '" + std::string(text) + "' (expected mlp or lstm)");
}

std::size_t VelocityModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += static_cast<std::size_t>(p.value.size());
  return n;
}

double mse(const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    fail(ErrorCode::ShapeMismatch, "prediction and target shapes differ");
  }
  return (prediction - target).squaredNorm() / static_cast<double>(prediction.size());
}

void glorot_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  // Column-major fill order is part of the seed contract.
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  }
}

Adam::Adam(const std::vector<Parameter>& params, AdamConfig cfg) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void Adam::step(std::vector<Parameter>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * p.grad;
    v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= cfg_.learning_rate * (m_[k].array() / bc1) / ((v_[k].array() / bc2).sqrt() + cfg_.epsilon);
  }
}

}  // namespace trackpose::learn
