#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trackpose/checkpoint.hpp"
#include "trackpose/data.hpp"
#include "trackpose/ekf.hpp"
#include "trackpose/trainer.hpp"
#include "trackpose/trajectory.hpp"

namespace trackpose::eval {

/// Per-axis root mean square error.
Vec3 velocity_rmse(std::span<const Vec3> estimate, std::span<const Vec3> truth);

/// Euclidean position error per pose (x/y only when `planar`).
std::vector<double> displacement_errors(const Trajectory& estimate, const Trajectory& truth, bool planar = false);

/// Average displacement error; 3-D unless `planar`.
double ade(const Trajectory& estimate, const Trajectory& truth, bool planar = false);

/// A localizer's output on one episode.
struct Localization {
  Trajectory trajectory;
  std::vector<Vec3> velocity;  // local velocity used per frame (may be empty)
};

/// Initial pose for the filters: the first truth pose, or the origin without truth.
StateVector initial_pose(const data::PreparedEpisode& ep);

/// Planar dead reckoning from the crawler encoders.
Localization crawler_odometry(const data::PreparedEpisode& ep, double tread = kDefaultTread);

/// EKF driven by the given per-frame local velocities and the gyro, corrected
/// by accelerometer roll/pitch. Frames whose acceleration is near free fall
/// skip the update.
Localization ekf_localize(const data::PreparedEpisode& ep, std::vector<Vec3> velocity,
                          const ekf::FilterConfig& cfg = {});

/// EKF with velocity (crawler v_x, 0, 0).
Localization kinematics_ekf(const data::PreparedEpisode& ep, const ekf::FilterConfig& cfg = {},
                            double tread = kDefaultTread);

/// Raw features of `ep` for the channels of `schema`, in schema order.
Eigen::MatrixXd select_features(const data::PreparedEpisode& ep, const FeatureSchema& schema);

/// Learned velocity for every frame, windows front-padded at the start.
std::vector<Vec3> predict_velocities(const learn::Checkpoint& ckpt, const data::PreparedEpisode& ep,
                                     double max_speed = kDefaultMaxSpeed);

Localization learned_ekf(const data::PreparedEpisode& ep, const learn::Checkpoint& ckpt,
                         const ekf::FilterConfig& cfg = {});

struct ModelSpec {
  learn::ModelKind kind = learn::ModelKind::Lstm;
  learn::MlpConfig mlp;
  learn::LstmConfig lstm;
  GroupSet groups = GroupSet::IC_Ve_Bu;
};

struct TrainedModel {
  learn::Checkpoint checkpoint;
  std::vector<learn::EpochRecord> curve;
};

/// Fits the standardizer on the training episodes, builds windowed datasets
/// and trains. cfg.seed seeds initialization and shuffling.
TrainedModel train_model(const ModelSpec& spec, const std::vector<data::PreparedEpisode>& train_set,
                         const std::vector<data::PreparedEpisode>& val_set, const learn::TrainConfig& cfg,
                         const learn::EpochCallback& on_epoch = {});

struct Method {
  std::string name;    // unique per cell, e.g. "lstm-ekf#2"
  std::string family;  // aggregated column, e.g. "lstm-ekf"
  int trial = 0;
  std::function<Localization(const data::PreparedEpisode&)> run;
};

Method crawler_method();
Method kinematics_ekf_method(const ekf::FilterConfig& cfg = {});
Method learned_ekf_method(std::shared_ptr<const learn::Checkpoint> ckpt, std::string family, int trial,
                          const ekf::FilterConfig& cfg = {});

struct Cell {
  std::string episode;
  std::string scenario;
  std::string method;
  std::string family;
  int trial = 0;
  bool ok = false;
  std::string error;
  double ade = 0.0;
  double ade_planar = 0.0;
  std::optional<double> ade_slip;
  std::optional<double> ade_nonslip;
  std::optional<Vec3> velocity_rmse;
  std::size_t frames = 0;
  double seconds = 0.0;
  double seconds_per_frame = 0.0;
  bool realtime = false;
  Trajectory trajectory;
  std::vector<double> error_over_time;
  /// Squared velocity error sums and count, for pooled RMSE.
  Vec3 velocity_sq_sum = Vec3::Zero();
  std::size_t velocity_count = 0;
};

struct SummaryRow {
  std::string family;
  std::string scenario;  // "average" for the mean over scenarios
  double mean = 0.0;
  double stddev = 0.0;   // across trials (sample std; 0 for one trial)
  std::size_t trials = 0;
};

struct VelocitySummary {
  std::string family;
  Vec3 mean = Vec3::Zero();
  Vec3 stddev = Vec3::Zero();
  std::size_t trials = 0;
};

struct TimingSummary {
  std::string family;
  double seconds = 0.0;          // total per trial, averaged
  double seconds_per_frame = 0.0;
  bool realtime = false;
};

/// Frame period of the master clock; per-frame time below it is real-time capable.
inline constexpr double kFramePeriod = 0.01;

struct MetricReport {
  std::vector<Cell> cells;  // ordered by (episode, method) input order

  std::vector<std::string> families() const;
  std::vector<std::string> scenarios() const;
  /// ADE per family and scenario, mean/std across trials, plus "average".
  std::vector<SummaryRow> ade_table() const;
  /// ADE restricted to episodes whose scenario is in `scenarios`, per trial.
  std::vector<double> trial_ade(const std::string& family, const std::vector<std::string>& scenarios) const;
  std::vector<VelocitySummary> velocity_table() const;
  /// Pooled per-axis velocity RMSE per trial for a family.
  std::vector<Vec3> trial_velocity_rmse(const std::string& family) const;
  std::vector<TimingSummary> timing_table() const;
  std::size_t succeeded() const;
};

/// Runs every method on every episode; failures are recorded per cell.
MetricReport compare(const std::vector<Method>& methods, const std::vector<data::PreparedEpisode>& episodes);

struct AblationRow {
  GroupSet groups = GroupSet::IC;
  std::size_t feature_count = 0;
  MetricReport report;
};

/// Trains one model per cumulative group set and trial (seed = base seed + trial)
/// and evaluates the learned EKF on the test episodes.
std::vector<AblationRow> ablate_feature_groups(const ModelSpec& spec,
                                               const std::vector<data::PreparedEpisode>& train_set,
                                               const std::vector<data::PreparedEpisode>& val_set,
                                               const std::vector<data::PreparedEpisode>& test_set,
                                               const learn::TrainConfig& cfg, int trials,
                                               const ekf::FilterConfig& filter = {});

/// Report files. None of these carry wall-clock values except the timing file.
void write_report_json(const MetricReport& r, const std::filesystem::path& path);
void write_ade_table_csv(const MetricReport& r, const std::filesystem::path& path);
void write_velocity_table_csv(const MetricReport& r, const std::filesystem::path& path);
void write_timing_json(const MetricReport& r, const std::filesystem::path& path);
/// One file per episode: t, slip, then the displacement error of every method.
void write_error_over_time(const MetricReport& r, const std::filesystem::path& dir);
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace trackpose::eval
