#include "trackpose/lstm.hpp"

#include <string>

#include "trackpose/error.hpp"

namespace trackpose::learn {
namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

}  // namespace

Lstm::Lstm(std::size_t input_width, LstmConfig cfg) : input_width_(input_width), cfg_(cfg) {
  if (cfg_.layers == 0 || cfg_.hidden == 0 || cfg_.window == 0) {
    fail(ErrorCode::InvalidArgument, "LSTM layers, hidden size and window must be positive");
  }
  const auto h = static_cast<Eigen::Index>(cfg_.hidden);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const auto in = static_cast<Eigen::Index>(l == 0 ? input_width_ : cfg_.hidden);
    const std::string name = "lstm" + std::to_string(l);
    params_.push_back({name + ".w_input", Matrix::Zero(4 * h, in), Matrix::Zero(4 * h, in)});
    params_.push_back({name + ".w_hidden", Matrix::Zero(4 * h, h), Matrix::Zero(4 * h, h)});
    params_.push_back({name + ".bias", Matrix::Zero(4 * h, 1), Matrix::Zero(4 * h, 1)});
  }
  params_.push_back({"head.weight", Matrix::Zero(3, h), Matrix::Zero(3, h)});
  params_.push_back({"head.bias", Matrix::Zero(3, 1), Matrix::Zero(3, 1)});
}

Lstm::Lstm(std::size_t input_width, LstmConfig cfg, std::uint64_t seed) : Lstm(input_width, cfg) {
  std::mt19937_64 rng(seed);
  const auto h = static_cast<Eigen::Index>(cfg_.hidden);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    // Each gate block is initialized as its own (H x in) matrix.
    for (Matrix* w : {&w_input(l), &w_hidden(l)}) {
      for (Eigen::Index gate = 0; gate < 4; ++gate) {
        Matrix block(h, w->cols());
        glorot_uniform(block, static_cast<std::size_t>(w->cols()), cfg_.hidden, rng);
        w->middleRows(gate * h, h) = block;
      }
    }
    bias(l).middleRows(h, h).setOnes();
  }
  glorot_uniform(head_weight(), cfg_.hidden, 3, rng);
}

void Lstm::check_input(const SequenceBatch& x) const {
  if (x.size() != cfg_.window) {
    fail(ErrorCode::ShapeMismatch, "LSTM expects a window of " + std::to_string(cfg_.window) + " steps, got " +
                                       std::to_string(x.size()));
  }
  for (const auto& step : x) {
    if (static_cast<std::size_t>(step.rows()) != input_width_ || step.cols() != x.front().cols()) {
      fail(ErrorCode::ShapeMismatch, "LSTM input step has the wrong shape");
    }
  }
}

Matrix Lstm::run(const SequenceBatch& x, std::vector<std::vector<StepCache>>* cache) const {
  const auto h = static_cast<Eigen::Index>(cfg_.hidden);
  const Eigen::Index batch = x.front().cols();
  const std::size_t steps = x.size();

  std::vector<Matrix> below(x.begin(), x.end());
  if (cache) cache->assign(cfg_.layers, std::vector<StepCache>(steps));

  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const Matrix& wi = params_[3 * l].value;
    const Matrix& wh = params_[3 * l + 1].value;
    const Matrix& b = params_[3 * l + 2].value;
    Matrix hs = Matrix::Zero(h, batch);
    Matrix cs = Matrix::Zero(h, batch);
    for (std::size_t t = 0; t < steps; ++t) {
      Matrix z = wi * below[t];
      z.noalias() += wh * hs;
      z.colwise() += b.col(0);
      Matrix i = sigmoid(z.middleRows(0, h));
      Matrix f = sigmoid(z.middleRows(h, h));
      Matrix g = z.middleRows(2 * h, h).array().tanh().matrix();
      Matrix o = sigmoid(z.middleRows(3 * h, h));
      cs = f.cwiseProduct(cs) + i.cwiseProduct(g);
      Matrix tc = cs.array().tanh().matrix();
      hs = o.cwiseProduct(tc);
      if (cache) {
        (*cache)[l][t] = StepCache{std::move(i), std::move(f), std::move(g), std::move(o), cs, std::move(tc), hs};
      }
      below[t] = hs;
    }
  }
  Matrix y = params_[3 * cfg_.layers].value * below.back();
  y.colwise() += params_[3 * cfg_.layers + 1].value.col(0);
  return y;
}

Matrix Lstm::forward(const SequenceBatch& x) const {
  check_input(x);
  return run(x, nullptr);
}

double Lstm::forward_backward(const SequenceBatch& x, const Matrix& target) {
  check_input(x);
  std::vector<std::vector<StepCache>> cache;
  const Matrix y = run(x, &cache);
  const double loss = mse(y, target);

  const auto h = static_cast<Eigen::Index>(cfg_.hidden);
  const Eigen::Index batch = x.front().cols();
  const std::size_t steps = x.size();
  const std::size_t top = cfg_.layers - 1;

  const Matrix dy = 2.0 * (y - target) / static_cast<double>(y.size());
  params_[3 * cfg_.layers].grad.noalias() = dy * cache[top][steps - 1].h.transpose();
  params_[3 * cfg_.layers + 1].grad = dy.rowwise().sum();

  // Gradient w.r.t. each step's output of the current layer; only the last
  // step of the top layer feeds the head.
  std::vector<Matrix> d_out(steps, Matrix::Zero(h, batch));
  d_out[steps - 1] = params_[3 * cfg_.layers].value.transpose() * dy;

  for (std::size_t l = cfg_.layers; l-- > 0;) {
    const Matrix& wi = params_[3 * l].value;
    const Matrix& wh = params_[3 * l + 1].value;
    Matrix& gwi = params_[3 * l].grad;
    Matrix& gwh = params_[3 * l + 1].grad;
    Matrix& gb = params_[3 * l + 2].grad;
    gwi.setZero();
    gwh.setZero();
    gb.setZero();

    Matrix dh_next = Matrix::Zero(h, batch);
    Matrix dc_next = Matrix::Zero(h, batch);
    std::vector<Matrix> d_in(steps);
    Matrix dz(4 * h, batch);
    const Matrix zero = Matrix::Zero(h, batch);

    for (std::size_t t = steps; t-- > 0;) {
      const StepCache& s = cache[l][t];
      const Matrix& c_prev = t > 0 ? cache[l][t - 1].c : zero;
      const Matrix& h_prev = t > 0 ? cache[l][t - 1].h : zero;
      const Matrix& in = l > 0 ? cache[l - 1][t].h : x[t];

      const Matrix dh = d_out[t] + dh_next;
      const Matrix dc = dc_next + dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
      dz.middleRows(0, h) = dc.cwiseProduct(s.g).cwiseProduct((s.i.array() * (1.0 - s.i.array())).matrix());
      dz.middleRows(h, h) = dc.cwiseProduct(c_prev).cwiseProduct((s.f.array() * (1.0 - s.f.array())).matrix());
      dz.middleRows(2 * h, h) = dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());
      dz.middleRows(3 * h, h) = dh.cwiseProduct(s.tanh_c).cwiseProduct((s.o.array() * (1.0 - s.o.array())).matrix());
      dc_next = dc.cwiseProduct(s.f);

      gwi.noalias() += dz * in.transpose();
      gwh.noalias() += dz * h_prev.transpose();
      gb += dz.rowwise().sum();
      dh_next.noalias() = wh.transpose() * dz;
      if (l > 0) d_in[t].noalias() = wi.transpose() * dz;
    }
    if (l > 0) d_out = std::move(d_in);
  }
  return loss;
}

}  // namespace trackpose::learn
