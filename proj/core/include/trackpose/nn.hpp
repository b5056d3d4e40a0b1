#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace trackpose::learn {

using Matrix = Eigen::MatrixXd;

/// One (features x batch) matrix per time step, oldest first.
using SequenceBatch = std::vector<Matrix>;

enum class ModelKind { Mlp, Lstm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Regressor from a window of standardized features to local velocity (3 x batch).
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t input_width() const = 0;
  /// Number of time steps consumed per prediction (1 for the MLP).
  virtual std::size_t window() const = 0;

  /// Throws ShapeMismatch on a wrong input width or window length.
  virtual Matrix forward(const SequenceBatch& x) const = 0;

  /// Overwrites every Parameter::grad with d(MSE)/d(param) and returns the MSE
  /// (mean over batch and the three outputs) at the current parameters.
  virtual double forward_backward(const SequenceBatch& x, const Matrix& target) = 0;

  virtual std::vector<Parameter>& parameters() = 0;
  virtual const std::vector<Parameter>& parameters() const = 0;
  virtual std::unique_ptr<VelocityModel> clone() const = 0;

  std::size_t parameter_count() const;
};

double mse(const Matrix& prediction, const Matrix& target);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const std::vector<Parameter>& params, AdamConfig cfg);

  void step(std::vector<Parameter>& params);
  std::int64_t steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::int64_t t_ = 0;
};

}  // namespace trackpose::learn
