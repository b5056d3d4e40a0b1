// Throughput of the localization pipeline pieces. Numbers are machine-dependent;
// the per-frame counters can be compared against the 0.01 s frame period.
#include <memory>
#include <random>

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "trackpose/data.hpp"
#include "trackpose/ekf.hpp"
#include "trackpose/estimators.hpp"
#include "trackpose/eval.hpp"
#include "trackpose/sim.hpp"

using namespace trackpose;

namespace {

learn::Checkpoint untrained_checkpoint(learn::ModelKind kind, const data::PreparedEpisode& ep,
                                       const learn::MlpConfig& mlp, const learn::LstmConfig& lstm) {
  learn::Checkpoint c;
  c.kind = kind;
  c.mlp = mlp;
  c.lstm = lstm;
  c.standardizer = fit_standardizer(ep.schema, {&ep.features});
  c.model = learn::make_model(kind, c.standardizer.schema.size(), mlp, lstm, 1);
  return c;
}

/// Builds the 30 s turn episode in memory (no disk round trip).
const data::PreparedEpisode& episode() {
  static const data::PreparedEpisode ep = [] {
    const sim::Episode e = sim::generate_episode(sim::make_scenario(sim::ScenarioKind::Turn, 30.0, 1));
    data::RawEpisode raw;
    raw.id = "bench";
    raw.fast = {"fast", e.fast, sim::kFastRate};
    raw.slow = {"slow", e.slow, sim::kSlowRate};
    csv::Table truth;
    truth.columns = sim::truth_columns();
    truth.values.resize(long(truth.columns.size()), long(e.truth.size()));
    for (std::size_t k = 0; k < e.truth.size(); ++k) {
      const auto& p = e.truth.poses[k];
      truth.values.col(long(k)) << e.truth.t[k], p.position, p.attitude.as_vector(), e.truth_velocity[k],
          e.slip_ratio[k], double(e.truth.slip[k]);
    }
    raw.truth = data::RawTable{"truth", truth, sim::kFastRate};
    return data::prepare(raw);
  }();
  return ep;
}

void BM_EkfPredictUpdate(benchmark::State& state) {
  ekf::FilterState fs = ekf::initial_state({});
  const ekf::ControlInput u{Vec3(1.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.1), 0.01};
  const ekf::NoiseConfig noise = ekf::default_noise(0.01);
  for (auto _ : state) {
    fs = ekf::predict(fs, u, noise);
    fs = ekf::update(fs, {0.01, -0.02}, noise);
    benchmark::DoNotOptimize(fs);
  }
}
BENCHMARK(BM_EkfPredictUpdate);

void BM_MlpInference(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(1));
  learn::Mlp mlp(width, {std::vector<std::size_t>(4, std::size_t(state.range(0)))}, 1);
  const Eigen::MatrixXd window = Eigen::MatrixXd::Random(long(width), 1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_velocity(&mlp, window));
}
BENCHMARK(BM_MlpInference)->Args({64, 37})->Args({256, 37});

void BM_LstmInference(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto window = static_cast<std::size_t>(state.range(1));
  learn::Lstm lstm(37, {2, hidden, window}, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(37, long(window));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_velocity(&lstm, x));
}
BENCHMARK(BM_LstmInference)->Args({32, 10})->Args({64, 40});

/// Whole-episode learned-EKF localization; reports seconds per frame.
void BM_LearnedEkfEpisode(benchmark::State& state) {
  const data::PreparedEpisode& ep = episode();
  const auto kind = state.range(0) == 0 ? learn::ModelKind::Mlp : learn::ModelKind::Lstm;
  const learn::Checkpoint ckpt = untrained_checkpoint(kind, ep, {{64, 64}}, {2, 32, 10});
  for (auto _ : state) benchmark::DoNotOptimize(eval::learned_ekf(ep, ckpt));
  state.counters["s_per_frame"] =
      benchmark::Counter(double(state.iterations()) * double(ep.size()), benchmark::Counter::kIsRate |
                                                                             benchmark::Counter::kInvert);
}
BENCHMARK(BM_LearnedEkfEpisode)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

/// Frame-by-frame streaming estimator plus one filter cycle, as on a vehicle.
void BM_StreamingFrame(benchmark::State& state) {
  const data::PreparedEpisode& ep = episode();
  auto ckpt = std::make_shared<learn::Checkpoint>(untrained_checkpoint(learn::ModelKind::Lstm, ep, {}, {2, 32, 10}));
  LearnedEstimator est(ckpt);
  ekf::FilterState fs = ekf::initial_state({});
  const ekf::NoiseConfig noise = ekf::default_noise(0.01);
  std::size_t k = 0;
  for (auto _ : state) {
    const Vec3 v = est.push(ep.features.col(long(k)));
    fs = ekf::predict(fs, {v, ep.gyro[k], 0.01}, noise);
    fs = ekf::update(fs, ekf::attitude_from_accel(ep.accel[k]), noise);
    benchmark::DoNotOptimize(fs);
    if (++k == ep.size()) {
      k = 0;
      fs = ekf::initial_state({});
    }
  }
}
BENCHMARK(BM_StreamingFrame);

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
