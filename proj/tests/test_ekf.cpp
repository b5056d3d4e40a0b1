#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "trackpose/ekf.hpp"
#include "trackpose/error.hpp"

using namespace trackpose;
using namespace trackpose::ekf;

namespace {

StateVector random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-50, 50), ang(-3.0, 3.0), tilt(-1.2, 1.2);
  return {Vec3(pos(rng), pos(rng), pos(rng)), {ang(rng), tilt(rng), ang(rng)}};
}

ControlInput random_control(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> dt(0.005, 0.05);
  return {Vec3(n(rng), n(rng), n(rng)), Vec3(n(rng), n(rng), n(rng)), dt(rng)};
}

}  // namespace

TEST(Predict, ZeroMotionAddsProcessNoiseOnly) {
  const FilterState fs = initial_state({Vec3(1, 2, 3), {0.1, -0.2, 0.3}});
  const NoiseConfig noise = default_noise(0.01);
  const FilterState out = predict(fs, {}, noise);
  EXPECT_EQ(out.state.as_vector(), fs.state.as_vector());
  EXPECT_LT((out.covariance - (fs.covariance + noise.process)).cwiseAbs().maxCoeff(), 1e-18);
}

TEST(Predict, HeadingNorthMovesAlongY) {
  const FilterState fs = initial_state({Vec3::Zero(), {0.0, 0.0, kPi / 2}});
  const FilterState out = predict(fs, {Vec3(1, 0, 0), Vec3::Zero(), 0.1}, default_noise(0.1));
  EXPECT_NEAR(out.state.position.x(), 0.0, 1e-15);
  EXPECT_NEAR(out.state.position.y(), 0.1, 1e-15);
  EXPECT_NEAR(out.state.position.z(), 0.0, 1e-15);
}

TEST(Predict, TransitionJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const StateVector s = random_state(rng);
    const ControlInput u = random_control(rng);
    const Mat6 analytic = transition_jacobian(s, u);
    for (int c = 0; c < 6; ++c) {
      Vec6 plus = s.as_vector(), minus = s.as_vector();
      plus(c) += h;
      minus(c) -= h;
      Vec6 diff = transition(StateVector::from_vector(plus), u).as_vector() -
                  transition(StateVector::from_vector(minus), u).as_vector();
      for (int r = 3; r < 6; ++r) diff(r) = wrap_angle(diff(r));
      EXPECT_LT((diff / (2 * h) - analytic.col(c)).cwiseAbs().maxCoeff(), 1e-5) << "column " << c;
    }
  }
}

TEST(Predict, RejectsBadStepLength) {
  const FilterState fs = initial_state({});
  EXPECT_THROW(predict(fs, {Vec3::Zero(), Vec3::Zero(), 0.0}, default_noise(0.01)), Error);
  EXPECT_THROW(predict(fs, {Vec3::Zero(), Vec3::Zero(), 0.5}, default_noise(0.01)), Error);
}

TEST(Predict, RejectsNonFiniteControl) {
  const FilterState fs = initial_state({});
  try {
    predict(fs, {Vec3(NAN, 0, 0), Vec3::Zero(), 0.01}, default_noise(0.01));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteInput);
  }
}

TEST(AttitudeFromAccel, FlatAtRest) {
  const AttitudeObservation z = attitude_from_accel({0, 0, kGravity});
  EXPECT_EQ(z.roll, 0.0);
  EXPECT_EQ(z.pitch, 0.0);
}

TEST(AttitudeFromAccel, RecoversPitch) {
  const AttitudeObservation z = attitude_from_accel({kGravity * std::sin(0.1), 0, kGravity * std::cos(0.1)});
  EXPECT_NEAR(z.roll, 0.0, 1e-15);
  EXPECT_NEAR(z.pitch, 0.1, 1e-12);
}

TEST(AttitudeFromAccel, RecoversRoll) {
  const AttitudeObservation z = attitude_from_accel({0, kGravity * std::sin(0.2), kGravity * std::cos(0.2)});
  EXPECT_NEAR(z.roll, 0.2, 1e-12);
  EXPECT_NEAR(z.pitch, 0.0, 1e-15);
}

TEST(AttitudeFromAccel, FreeFallIsDegenerate) {
  try {
    attitude_from_accel({0.1, 0.0, 0.2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateAcceleration);
  }
}

TEST(Observe, GravityGateSkipsImplausibleFrames) {
  FilterConfig cfg;
  cfg.gravity_gate = 1.0;
  EXPECT_FALSE(observe({0, 0, kGravity + 3.0}, cfg).has_value());
  EXPECT_TRUE(observe({0, 0, kGravity + 0.5}, cfg).has_value());
  EXPECT_TRUE(observe({0, 0, kGravity + 3.0}, FilterConfig{}).has_value());
}

TEST(Update, ZeroInnovationKeepsStateAndShrinksCovariance) {
  FilterState fs = initial_state({Vec3(1, 2, 3), {0.05, -0.1, 1.0}});
  fs.covariance = Mat6::Identity() * 0.3;
  const FilterState out = update(fs, {0.05, -0.1}, default_noise(0.01));
  EXPECT_LT((out.state.as_vector() - fs.state.as_vector()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(out.covariance.trace(), fs.covariance.trace());
}

TEST(Update, ScalarKalmanVariance) {
  const double p = 0.04, r = 0.01;
  FilterState fs = initial_state({});
  fs.covariance = Mat6::Zero();
  fs.covariance(0, 0) = fs.covariance(1, 1) = fs.covariance(2, 2) = 1.0;
  fs.covariance(3, 3) = fs.covariance(4, 4) = p;
  const FilterState out = update(fs, {0.2, -0.1}, default_noise(0.01));
  EXPECT_NEAR(out.covariance(3, 3), p * r / (p + r), 1e-15);
  EXPECT_NEAR(out.covariance(4, 4), p * r / (p + r), 1e-15);
  EXPECT_NEAR(out.state.attitude.roll, 0.2 * p / (p + r), 1e-15);
}

TEST(Update, DecoupledEntriesAreUntouched) {
  FilterState fs = initial_state({Vec3(4, 5, 6), {0.0, 0.0, 0.7}});
  fs.covariance = Mat6::Identity() * 0.5;
  const FilterState out = update(fs, {0.3, 0.2}, default_noise(0.01));
  EXPECT_EQ(out.state.position, fs.state.position);
  EXPECT_EQ(out.state.attitude.yaw, fs.state.attitude.yaw);
}

TEST(Update, SingularInnovationIsReported) {
  FilterState fs = initial_state({});
  fs.covariance = Mat6::Zero();
  NoiseConfig noise = default_noise(0.01);
  noise.measurement.setZero();
  try {
    update(fs, {0.1, 0.1}, noise);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularInnovation);
  }
}

TEST(DefaultNoise, DiagonalAtMasterRate) {
  const NoiseConfig n = default_noise(0.01);
  EXPECT_NEAR(n.process(0, 0), 1e-5, 1e-20);
  EXPECT_NEAR(n.process(3, 3), 1e-6, 1e-20);
  EXPECT_EQ(n.measurement, Mat2::Identity() * 0.01);
  EXPECT_NEAR(default_noise(1.0).process(3, 3), 0.01, 1e-18);
  EXPECT_EQ(default_noise(1.0).process(0, 1), 0.0);
}

TEST(RunFilter, EmptyStreamReturnsInitialPose) {
  const FilterState init = initial_state({Vec3(1, 1, 1), {}});
  const Trajectory t = run_filter(init, 5.0, {});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.t[0], 5.0);
  EXPECT_EQ(t.poses[0].position, Vec3(1, 1, 1));
}

TEST(RunFilter, StationaryOnFlatGround) {
  std::vector<FilterStep> steps(500, FilterStep{{}, AttitudeObservation{}});
  const Trajectory t = run_filter(initial_state({}), 0.0, steps);
  for (const auto& p : t.poses) EXPECT_LT(p.position.norm(), 1e-12);
}

TEST(RunFilter, StraightLineClosedForm) {
  std::vector<FilterStep> steps(100, FilterStep{{Vec3(1, 0, 0), Vec3::Zero(), 0.01}, AttitudeObservation{}});
  const Trajectory t = run_filter(initial_state({}), 0.0, steps);
  ASSERT_EQ(t.size(), 101u);
  EXPECT_NEAR(t.poses.back().position.x(), 1.0, 1e-9);
  EXPECT_NEAR(t.t.back(), 1.0, 1e-12);
}

TEST(RunFilter, ErrorsNameTheStep) {
  std::vector<FilterStep> steps(3, FilterStep{{Vec3(1, 0, 0), Vec3::Zero(), 0.01}, std::nullopt});
  steps[2].control.dt = -1.0;
  try {
    run_filter(initial_state({}), 0.0, steps);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos);
  }
}

TEST(Covariance, StaysSymmetricPsdOverLongRun) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.05);
  FilterState fs = initial_state({});
  for (int k = 0; k < 20000; ++k) {
    const ControlInput u{Vec3(1.0 + n(rng), n(rng), n(rng)), Vec3(n(rng), n(rng), n(rng)), 0.01};
    fs = predict(fs, u, default_noise(u.dt));
    fs = update(fs, {n(rng), n(rng)}, default_noise(u.dt));
    fs.state.attitude.pitch = std::clamp(fs.state.attitude.pitch, -0.5, 0.5);
    ASSERT_TRUE(covariance_is_valid(fs.covariance)) << "cycle " << k;
  }
}

TEST(Covariance, DetectsAsymmetryAndNegativeEigenvalues) {
  Mat6 p = Mat6::Identity();
  EXPECT_TRUE(covariance_is_valid(p));
  p(0, 1) = 1e-3;
  EXPECT_FALSE(covariance_is_valid(p));
  p = Mat6::Identity();
  p(2, 2) = -1e-3;
  EXPECT_FALSE(covariance_is_valid(p));
}

TEST(TrajectoryValidate, RejectsBrokenInvariants) {
  Trajectory t;
  t.push_back(0.0, {});
  t.push_back(0.0, {});
  EXPECT_THROW(validate(t), Error);
  t.t[1] = 0.01;
  EXPECT_NO_THROW(validate(t));
  t.slip = {1};
  EXPECT_THROW(validate(t), Error);
}
