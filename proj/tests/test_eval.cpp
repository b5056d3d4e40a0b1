#include <cmath>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "support.hpp"
#include "trackpose/data.hpp"
#include "trackpose/error.hpp"
#include "trackpose/eval.hpp"
#include "trackpose/sim.hpp"

using namespace trackpose;
using namespace trackpose::eval;
using trackpose::testing::TempDir;

namespace {

/// Flat-ground episode with constant track speeds and no truth.
data::PreparedEpisode drive(double right, double left, double seconds) {
  data::PreparedEpisode ep;
  ep.id = "synthetic";
  ep.scenario = "synthetic";
  const auto n = static_cast<std::size_t>(std::lround(seconds * 100.0)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    ep.t.push_back(0.01 * double(k));
    ep.dt.push_back(0.01);
    ep.crawler.push_back({right, left});
    ep.gyro.push_back({0.0, 0.0, (right - left) / kDefaultTread});
    ep.accel.push_back({0.0, 0.0, kGravity});
  }
  ep.features = Eigen::MatrixXd::Zero(0, long(n));
  return ep;
}

/// Uses the encoder dead reckoning as ground truth.
data::PreparedEpisode with_truth(data::PreparedEpisode ep) {
  const Localization dr = crawler_odometry(ep);
  ep.truth = dr.trajectory;
  ep.truth->slip.assign(ep.size(), 0);
  ep.truth_velocity = dr.velocity;
  return ep;
}

Trajectory line(std::vector<Vec3> points) {
  Trajectory t;
  for (std::size_t i = 0; i < points.size(); ++i) t.push_back(double(i), {points[i], {}});
  return t;
}

double circumradius(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double ab = (b - a).norm(), bc = (c - b).norm(), ca = (a - c).norm();
  const double area2 = std::abs((b - a).cross(c - a).norm());
  return ab * bc * ca / (2.0 * area2);
}

data::PreparedEpisode simulated(const sim::Scenario& sc, const TempDir& dir, const std::string& id) {
  sim::export_episode(sim::generate_episode(sc), dir.path(), id);
  return data::prepare(data::ingest(dir.path(), id), FeatureSchema::canonical(), sc.name());
}

}  // namespace

TEST(VelocityRmse, Basics) {
  const std::vector<Vec3> truth{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(velocity_rmse(truth, truth), Vec3::Zero());
  const std::vector<Vec3> offset{{1.1, 2, 3}, {4.1, 5, 6}};
  EXPECT_NEAR(velocity_rmse(offset, truth).x(), 0.1, 1e-12);
  EXPECT_EQ(velocity_rmse(offset, truth).y(), 0.0);
  const std::vector<Vec3> two{{1.3, 2, 3}, {4.4, 5, 6}};
  EXPECT_NEAR(velocity_rmse(two, truth).x(), 0.35355, 1e-5);
  EXPECT_THROW(velocity_rmse(std::vector<Vec3>(3), truth), Error);
}

TEST(Ade, Basics) {
  const Trajectory a = line({{0, 0, 0}, {1, 1, 1}});
  EXPECT_EQ(ade(a, a), 0.0);
  EXPECT_NEAR(ade(line({{3, 4, 0}, {4, 5, 1}}), a), 5.0, 1e-12);
  EXPECT_NEAR(ade(line({{1, 0, 0}, {1, 3, 1}}), a), 1.5, 1e-12);
  EXPECT_NEAR(ade(line({{0, 0, 7}, {1, 1, 1}}), a, true), 0.0, 1e-12);
  EXPECT_THROW(ade(line({{0, 0, 0}}), a), Error);
}

TEST(CrawlerOdometry, StraightLine) {
  const Localization out = crawler_odometry(drive(1.0, 1.0, 10.0));
  EXPECT_NEAR(out.trajectory.poses.back().position.x(), 10.0, 1e-9);
  EXPECT_NEAR(out.trajectory.poses.back().position.y(), 0.0, 1e-12);
  EXPECT_EQ(out.trajectory.poses.back().attitude.yaw, 0.0);
}

TEST(CrawlerOdometry, CounterRotationStaysPut) {
  const Localization out = crawler_odometry(drive(0.5, -0.5, 10.0));
  for (const auto& p : out.trajectory.poses) EXPECT_LT(p.position.norm(), 1e-12);
  EXPECT_NE(out.trajectory.poses.back().attitude.yaw, 0.0);
}

TEST(CrawlerOdometry, ArcMatchesDifferentialDriveRadius) {
  const Localization out = crawler_odometry(drive(1.2, 0.8, 10.0));
  const auto& p = out.trajectory.poses;
  const double r = circumradius(p.front().position, p[p.size() / 2].position, p.back().position);
  const double expected = 1.0 / (0.4 / 2.77);
  EXPECT_NEAR(expected, 6.9250, 1e-4);
  EXPECT_LT(std::abs(r - expected) / expected, 1e-6);
}

TEST(KinematicsEkf, FlatStraightDrive) {
  const Localization out = kinematics_ekf(drive(1.0, 1.0, 5.0));
  EXPECT_NEAR(out.trajectory.poses.back().position.x(), 5.0, 1e-9);
  EXPECT_EQ(out.velocity.size(), out.trajectory.size());
}

TEST(KinematicsEkf, MissingImuIsAnError) {
  data::PreparedEpisode ep = drive(1.0, 1.0, 1.0);
  ep.accel.clear();
  ep.gyro.clear();
  try {
    kinematics_ekf(ep);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyChannel);
  }
  EXPECT_THROW(crawler_odometry(data::PreparedEpisode{}), Error);
}

TEST(KinematicsEkf, FreeFallFramesSkipTheUpdate) {
  data::PreparedEpisode ep = drive(1.0, 1.0, 1.0);
  ep.accel[50] = Vec3::Zero();
  EXPECT_NO_THROW(kinematics_ekf(ep));
}

TEST(KinematicsEkf, IdealSimulationClosesTheLoop) {
  TempDir dir("ideal");
  sim::Scenario sc = sim::make_scenario(sim::ScenarioKind::Straight, 30.0, 3);
  sc.soil = sim::SoilProfile::none();
  sc.noise = sim::SensorNoise::zero();
  const data::PreparedEpisode ep = simulated(sc, dir, "001");
  EXPECT_LT(ade(kinematics_ekf(ep).trajectory, *ep.truth), 1e-3);
}

TEST(LearnedEkf, BeatsKinematicsUnderSteadySlip) {
  TempDir dir("slip");
  std::vector<data::PreparedEpisode> train_set, val_set;
  const auto slipping = [](std::uint64_t seed) {
    sim::Scenario sc = sim::make_scenario(sim::ScenarioKind::Straight, 30.0, seed);
    sc.soil = sim::SoilProfile::none();
    sc.soil.base_slip = 0.2;
    return sc;
  };
  for (std::uint64_t s = 0; s < 2; ++s) train_set.push_back(simulated(slipping(s), dir, "t" + std::to_string(s)));
  val_set.push_back(simulated(slipping(10), dir, "v"));
  const data::PreparedEpisode test = simulated(slipping(20), dir, "x");

  ModelSpec spec;
  spec.kind = learn::ModelKind::Mlp;
  spec.mlp.hidden = {16};
  spec.groups = GroupSet::IC;
  learn::TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 64;
  cfg.sample_stride = 2;
  cfg.seed = 1;
  const TrainedModel m = train_model(spec, train_set, val_set, cfg);
  const double learned = ade(learned_ekf(test, m.checkpoint).trajectory, *test.truth);
  const double kinematic = ade(kinematics_ekf(test).trajectory, *test.truth);
  EXPECT_GT(kinematic, learned);
}

TEST(TrainModel, OverlappingSplitsAreRejected) {
  data::PreparedEpisode ep = drive(1.0, 1.0, 1.0);
  ModelSpec spec;
  EXPECT_THROW(train_model(spec, {ep}, {ep}, {}), Error);
}

TEST(Compare, SingleMethodSingleEpisode) {
  const MetricReport r = compare({crawler_method()}, {with_truth(drive(1.0, 1.0, 1.0))});
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_TRUE(r.cells[0].ok);
  EXPECT_EQ(r.cells[0].frames, 101u);
  EXPECT_EQ(r.cells[0].ade, 0.0);
  EXPECT_EQ(*r.cells[0].velocity_rmse, Vec3::Zero());
  EXPECT_EQ(r.succeeded(), 1u);
}

TEST(Compare, FailuresAreRecordedPerCell) {
  data::PreparedEpisode broken = with_truth(drive(1.0, 1.0, 1.0));
  broken.id = "broken";
  broken.gyro.clear();
  const MetricReport r = compare({crawler_method(), kinematics_ekf_method()}, {broken, drive(1.0, 1.0, 1.0)});
  ASSERT_EQ(r.cells.size(), 4u);
  EXPECT_TRUE(r.cells[0].ok);
  EXPECT_FALSE(r.cells[1].ok);
  EXPECT_FALSE(r.cells[1].error.empty());
  EXPECT_FALSE(r.cells[2].ok);  // no ground truth to score against
  EXPECT_EQ(r.succeeded(), 1u);
}

TEST(Compare, RealTimeFlagFollowsTheFramePeriod) {
  TempDir dir("rt");
  const data::PreparedEpisode ep = simulated(sim::make_scenario(sim::ScenarioKind::Turn, 30.0, 1), dir, "001");
  const MetricReport r = compare({kinematics_ekf_method()}, {ep});
  ASSERT_TRUE(r.cells[0].ok);
  EXPECT_EQ(r.cells[0].realtime, r.cells[0].seconds_per_frame < kFramePeriod);
  EXPECT_TRUE(r.cells[0].realtime);
}

TEST(Compare, ReportsAreDeterministic) {
  TempDir dir("det");
  const data::PreparedEpisode ep = simulated(sim::make_scenario(sim::ScenarioKind::Grading, 30.0, 1), dir, "001");
  const auto run = [&](const std::string& name) {
    const MetricReport r = compare({crawler_method(), kinematics_ekf_method()}, {ep});
    write_report_json(r, dir / name);
    return trackpose::testing::slurp(dir / name);
  };
  EXPECT_EQ(run("a.json"), run("b.json"));
}

TEST(MetricReport, TrialStatistics) {
  MetricReport r;
  const auto cell = [](std::string scenario, int trial, double ade_value, double vx) {
    Cell c;
    c.episode = scenario + "-ep";
    c.scenario = scenario;
    c.family = "m";
    c.method = "m#" + std::to_string(trial);
    c.trial = trial;
    c.ok = true;
    c.ade = ade_value;
    c.velocity_sq_sum = Vec3(vx * vx, 0, 0);
    c.velocity_count = 1;
    c.velocity_rmse = Vec3(vx, 0, 0);
    return c;
  };
  r.cells = {cell("a", 0, 1.0, 0.1), cell("a", 1, 3.0, 0.3), cell("b", 0, 2.0, 0.1), cell("b", 1, 2.0, 0.3)};
  const auto table = r.ade_table();
  const auto find = [&](const std::string& s) {
    for (const auto& row : table)
      if (row.scenario == s) return row;
    ADD_FAILURE() << s;
    return SummaryRow{};
  };
  EXPECT_NEAR(find("a").mean, 2.0, 1e-12);
  EXPECT_NEAR(find("a").stddev, 1.41421, 1e-5);
  EXPECT_EQ(find("a").trials, 2u);
  EXPECT_NEAR(find("average").mean, 2.0, 1e-12);
  EXPECT_NEAR(find("average").stddev, 0.70711, 1e-5);
  EXPECT_EQ(r.trial_ade("m", {"a"}), (std::vector<double>{1.0, 3.0}));
  const auto v = r.trial_velocity_rmse("m");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NEAR(v[0].x(), 0.1, 1e-12);
  EXPECT_NEAR(v[1].x(), 0.3, 1e-12);
}

TEST(Writers, ProduceParsableFiles) {
  TempDir dir("writers");
  const data::PreparedEpisode ep = simulated(sim::make_scenario(sim::ScenarioKind::Turn, 30.0, 1), dir, "001");
  const MetricReport r = compare({crawler_method(), kinematics_ekf_method()}, {ep});
  write_ade_table_csv(r, dir / "ade.csv");
  write_velocity_table_csv(r, dir / "vel.csv");
  write_timing_json(r, dir / "timing.json");
  write_error_over_time(r, dir / "errors");
  write_trajectory_csv(r.cells[0].trajectory, dir / "traj.csv");
  EXPECT_EQ(csv::read(dir / "traj.csv").rows(), ep.size());
  const csv::Table errors = csv::read(dir / "errors" / "ep001_error.csv");
  EXPECT_EQ(errors.rows(), ep.size());
  EXPECT_TRUE(errors.has_column("slip"));
  const std::string ade_text = trackpose::testing::slurp(dir / "ade.csv");
  EXPECT_EQ(ade_text.rfind("scenario,crawler_mean,crawler_std,kinematic-ekf_mean,kinematic-ekf_std\n", 0), 0u);
  EXPECT_NE(ade_text.find("\nturn,"), std::string::npos);
  EXPECT_NE(ade_text.find("\naverage,"), std::string::npos);
}
