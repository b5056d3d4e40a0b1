#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "trackpose/csv.hpp"
#include "trackpose/estimators.hpp"
#include "trackpose/schema.hpp"
#include "trackpose/trajectory.hpp"

namespace trackpose::data {

struct RawTable {
  std::filesystem::path path;
  csv::Table table;
  double rate_hz = 0.0;

  std::size_t rows() const { return table.rows(); }
  /// Row 0 of the table.
  Eigen::VectorXd t() const { return table.values.row(0).transpose(); }
};

/// One episode as read from disk: two sensor tables and optional ground truth.
struct RawEpisode {
  std::string id;
  RawTable fast;  // 100 Hz
  RawTable slow;  // 10 Hz
  std::optional<RawTable> truth;
};

/// Reads ep<id>_100hz.csv, ep<id>_10hz.csv and, when present, ep<id>_truth.csv.
/// Every schema channel must be found in one of the sensor files; schema
/// channels naming ground truth are rejected. Errors name the file and row.
RawEpisode ingest(const std::filesystem::path& dir, std::string_view id,
                  const FeatureSchema& schema = FeatureSchema::canonical());

/// An ingested episode aligned on the 100 Hz clock, ready for the filters and
/// the learners.
struct PreparedEpisode {
  std::string id;
  std::string scenario;
  FeatureSchema schema;
  std::vector<double> t;
  std::vector<double> dt;
  Eigen::MatrixXd features;  // schema.size() x frames, raw units
  std::vector<Vec3> gyro;    // rad/s
  std::vector<Vec3> accel;   // m/s^2
  std::vector<CrawlerReading> crawler;  // m/s
  std::optional<Trajectory> truth;      // with slip flags
  std::vector<Vec3> truth_velocity;     // local frame; empty without truth
  std::vector<Vec3> target_velocity;    // smoothed training target; empty without truth

  std::size_t size() const { return t.size(); }
  bool has_truth() const { return truth.has_value(); }
};

/// Local velocity from positions: R(r_k)^T (l_{k+1} - l_k) / dt, then a
/// centered 5-tap moving average (shrinking at the ends).
std::vector<Vec3> velocity_targets(const Trajectory& truth);

/// Slip rule for data without flags: |enc - true| / max(|enc|, 0.1) > threshold.
bool slip_by_ratio(double encoder_speed, double true_speed, double threshold = 0.1);

PreparedEpisode prepare(const RawEpisode& raw, const FeatureSchema& schema = FeatureSchema::canonical(),
                        std::string scenario = {});

enum class Split { Train, Val, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view text);

struct ManifestEntry {
  std::string id;
  std::string scenario;
  Split split = Split::Train;
  std::string fast_file;
  std::string slow_file;
  std::string truth_file;
  std::size_t fast_rows = 0;
  std::size_t slow_rows = 0;
};

struct Manifest {
  std::vector<ManifestEntry> episodes;
  std::uint64_t seed = 0;

  std::vector<const ManifestEntry*> select(Split s) const;
  std::vector<std::string> scenarios() const;
};

/// One validation and one test episode per scenario, the rest for training.
/// Deterministic in the seed and independent of the input order. Throws
/// InsufficientEpisodes naming a scenario with fewer than two episodes.
Manifest build_splits(std::vector<ManifestEntry> episodes, std::uint64_t seed);

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(std::string_view text);
void save_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

/// Ingests and prepares the listed episodes from the manifest's directory.
std::vector<PreparedEpisode> load_episodes(const std::filesystem::path& dataset_dir,
                                           const std::vector<const ManifestEntry*>& entries,
                                           const FeatureSchema& schema = FeatureSchema::canonical());

}  // namespace trackpose::data
