#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "support.hpp"
#include "trackpose/csv.hpp"
#include "trackpose/data.hpp"
#include "trackpose/error.hpp"
#include "trackpose/sim.hpp"

using namespace trackpose;
using namespace trackpose::sim;

namespace {

Scenario ideal_straight(double duration, SoilProfile soil) {
  Scenario sc = make_scenario(ScenarioKind::Straight, duration, 1);
  sc.soil = soil;
  sc.noise = SensorNoise::zero();
  return sc;
}

Eigen::VectorXd series(const csv::Table& t, const std::string& name) {
  return t.values.row(long(t.column(name))).transpose();
}

/// Encoder speed (m/s) of one track at every 100 Hz tick, held from the 10 Hz file.
std::vector<double> held_encoder(const Episode& e, const char* channel) {
  const Eigen::VectorXd slow_t = e.slow.values.row(0);
  const Eigen::VectorXd enc = series(e.slow, channel);
  std::vector<double> out;
  std::size_t j = 0;
  for (double t : e.truth.t) {
    while (j + 1 < std::size_t(slow_t.size()) && slow_t(long(j + 1)) <= t + 1e-9) ++j;
    out.push_back(enc(long(j)) / 3600.0);
  }
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Scenario, NamesRoundTrip) {
  EXPECT_EQ(all_scenarios().size(), 10u);
  for (auto k : all_scenarios()) EXPECT_EQ(parse_scenario_kind(to_string(k)), k);
  EXPECT_THROW(parse_scenario_kind("moonwalk"), Error);
}

TEST(Scenario, DurationLimits) {
  EXPECT_THROW(make_scenario(ScenarioKind::Turn, 10.0, 0).validate(), Error);
  EXPECT_THROW(generate_episode(make_scenario(ScenarioKind::Turn, 500.0, 0)), Error);
  EXPECT_NO_THROW(make_scenario(ScenarioKind::Turn, 30.0, 0).validate());
}

TEST(Scenario, JsonRoundTrip) {
  Scenario sc = make_scenario(ScenarioKind::Excavation, 45.0, 99);
  sc.signature = SlipSignature::BuOnly;
  sc.noise = SensorNoise::zero();
  sc.speed = 0.8;
  const Scenario back = scenario_from_json(scenario_to_json(sc));
  EXPECT_EQ(back.kind, sc.kind);
  EXPECT_EQ(back.duration, 45.0);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.signature, SlipSignature::BuOnly);
  EXPECT_EQ(back.soil.burst_rate_per_min, sc.soil.burst_rate_per_min);
  EXPECT_EQ(back.noise.accel_white, 0.0);
  EXPECT_EQ(back.speed, 0.8);
  EXPECT_THROW(scenario_from_json(R"({"name":"straight","soil":{"base_slip":1.5}})"), Error);
}

TEST(Generate, ZeroSlipEncoderMatchesTruth) {
  const Episode e = generate_episode(ideal_straight(30.0, SoilProfile::none()));
  const auto right = held_encoder(e, "crawler_right"), left = held_encoder(e, "crawler_left");
  double x = e.truth.poses.front().position.x();
  for (std::size_t k = 0; k < e.truth.size(); ++k) {
    EXPECT_NEAR(0.5 * (right[k] + left[k]), e.truth_velocity[k].x(), 1e-9) << k;
    EXPECT_EQ(e.truth.slip[k], 0);
    if (k + 1 < e.truth.size()) x += e.command_speed[k] * (e.truth.t[k + 1] - e.truth.t[k]);
  }
  const auto& end = e.truth.poses.back();
  EXPECT_NEAR(end.position.x(), x, 1e-9);
  EXPECT_NEAR(end.position.y(), 0.0, 1e-9);
  EXPECT_NEAR(end.position.z(), 0.0, 1e-9);
  EXPECT_NEAR(end.attitude.yaw, 0.0, 1e-12);
}

TEST(Generate, BaseSlipScalesDistance) {
  SoilProfile soil = SoilProfile::none();
  soil.base_slip = 0.2;
  const Episode e = generate_episode(ideal_straight(30.0, soil));
  const auto right = held_encoder(e, "crawler_right"), left = held_encoder(e, "crawler_left");
  double encoder_distance = 0.0;
  for (std::size_t k = 0; k + 1 < e.truth.size(); ++k) {
    encoder_distance += 0.5 * (right[k] + left[k]) * (e.truth.t[k + 1] - e.truth.t[k]);
  }
  const double true_distance = (e.truth.poses.back().position - e.truth.poses.front().position).norm();
  EXPECT_NEAR(true_distance, 0.8 * encoder_distance, 1e-6);
  for (auto flag : e.truth.slip) EXPECT_EQ(flag, 1);
}

TEST(Generate, SameSeedIsBitIdentical) {
  const Scenario sc = make_scenario(ScenarioKind::Random, 30.0, 1234);
  const Episode a = generate_episode(sc), b = generate_episode(sc);
  EXPECT_EQ(a.fast.values, b.fast.values);
  EXPECT_EQ(a.slow.values, b.slow.values);
  EXPECT_EQ(a.slip_ratio, b.slip_ratio);
  Scenario other = sc;
  other.seed = 1235;
  EXPECT_NE(generate_episode(other).fast.values, a.fast.values);
}

TEST(Generate, RowCountsFollowTheRates) {
  const Episode e = generate_episode(make_scenario(ScenarioKind::LowSlalom, 30.0, 3));
  EXPECT_EQ(e.fast.rows(), 3000u);
  EXPECT_EQ(e.slow.rows(), 300u);
  EXPECT_EQ(e.truth.size(), 3000u);
  EXPECT_EQ(e.fast.columns, fast_columns());
  EXPECT_EQ(e.slow.columns, slow_columns());
  for (std::size_t k = 1; k < e.fast.rows(); ++k) {
    ASSERT_NEAR(e.fast.values(0, long(k)) - e.fast.values(0, long(k - 1)), 0.01, 1e-9);
  }
}

TEST(Generate, EveryScenarioProducesFiniteData) {
  for (auto kind : all_scenarios()) {
    const Episode e = generate_episode(make_scenario(kind, 30.0, 5));
    EXPECT_TRUE(e.fast.values.allFinite()) << to_string(kind);
    EXPECT_TRUE(e.slow.values.allFinite()) << to_string(kind);
    for (double s : e.slip_ratio) {
      ASSERT_GE(s, 0.0);
      ASSERT_LT(s, 1.0);
    }
  }
}

TEST(Generate, HighSlipScenariosSlipMore) {
  const auto slip_fraction = [](ScenarioKind k) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Episode e = generate_episode(make_scenario(k, 60.0, seed));
      sum += std::accumulate(e.truth.slip.begin(), e.truth.slip.end(), 0.0) / double(e.truth.size());
    }
    return sum / 3.0;
  };
  EXPECT_GT(slip_fraction(ScenarioKind::HighSlalom), slip_fraction(ScenarioKind::Straight));
  EXPECT_GT(slip_fraction(ScenarioKind::Excavation), slip_fraction(ScenarioKind::Straight));
}

TEST(Generate, PressureTracksDrawbarLoad) {
  const Episode e = generate_episode(make_scenario(ScenarioKind::Excavation, 60.0, 8));
  const Eigen::VectorXd p = series(e.slow, "hst_pressure_rf");
  std::vector<double> pressure, load;
  for (long i = 0; i < p.size(); ++i) {
    pressure.push_back(p(i));
    load.push_back(e.load[std::size_t(i) * 10]);
  }
  EXPECT_GT(pearson(pressure, load), 0.5);
}

TEST(Generate, StaticAccelerometerSeesGravity) {
  const Episode e = generate_episode(ideal_straight(30.0, SoilProfile::none()));
  const Eigen::VectorXd az = series(e.fast, "acc_z");
  EXPECT_NEAR(az(1500), kGravity, 1e-6);
}

TEST(Export, WritesTheDeclaredColumns) {
  trackpose::testing::TempDir dir("export");
  const Episode e = generate_episode(make_scenario(ScenarioKind::Grading, 30.0, 2));
  const EpisodeFiles f = export_episode(e, dir.path(), "007");
  EXPECT_EQ(f.fast.filename(), "ep007_100hz.csv");
  EXPECT_EQ(csv::read(f.fast).columns, fast_columns());
  EXPECT_EQ(csv::read(f.slow).columns, slow_columns());
  EXPECT_EQ(csv::read(f.truth).columns, truth_columns());
}

TEST(Export, IngestRoundTripIsLossless) {
  trackpose::testing::TempDir dir("roundtrip");
  const Episode e = generate_episode(make_scenario(ScenarioKind::CrossSlope, 30.0, 4));
  export_episode(e, dir.path(), "001");
  const data::RawEpisode raw = data::ingest(dir.path(), "001");
  EXPECT_LT((raw.fast.table.values - e.fast.values).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((raw.slow.table.values - e.slow.values).cwiseAbs().maxCoeff(), 1e-9);
  ASSERT_TRUE(raw.truth.has_value());
  const data::PreparedEpisode ep = data::prepare(raw);
  ASSERT_EQ(ep.size(), e.truth.size());
  for (std::size_t k = 0; k < ep.size(); ++k) {
    ASSERT_LT((ep.truth->poses[k].position - e.truth.poses[k].position).norm(), 1e-9);
    ASSERT_EQ(ep.truth->slip[k], e.truth.slip[k]);
  }
}
