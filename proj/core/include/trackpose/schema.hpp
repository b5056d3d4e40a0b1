#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace trackpose {

enum class FeatureGroup { IC, Ve, Bu };

std::string_view to_string(FeatureGroup group);
FeatureGroup parse_feature_group(std::string_view text);

/// Cumulative group selections used by the ablation.
enum class GroupSet { IC, IC_Ve, IC_Ve_Bu };

std::string_view to_string(GroupSet set);
GroupSet parse_group_set(std::string_view text);  // "ic", "ic+ve", "ic+ve+bu"
bool contains(GroupSet set, FeatureGroup group);

struct ChannelSpec {
  std::string name;
  FeatureGroup group = FeatureGroup::IC;
  bool categorical = false;

  bool operator==(const ChannelSpec&) const = default;
};

/// Ordered list of model-input channels.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<ChannelSpec> channels);

  /// Every internal-sensor channel of the canonical dataset files (dt excluded).
  static FeatureSchema canonical();

  std::size_t size() const { return channels_.size(); }
  bool empty() const { return channels_.empty(); }
  const std::vector<ChannelSpec>& channels() const { return channels_; }
  const ChannelSpec& operator[](std::size_t i) const { return channels_[i]; }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Keeps channels whose group is in `set`, preserving order.
  FeatureSchema restricted(GroupSet set) const;

  std::string to_json() const;
  static FeatureSchema from_json(std::string_view text);

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<ChannelSpec> channels_;
};

/// Column names carrying ground truth; never allowed as model inputs.
const std::vector<std::string>& ground_truth_columns();

/// Throws GroundTruthLeakage if any schema channel is a ground-truth column or `dt`.
void check_no_leakage(const FeatureSchema& schema);

/// Canonical channel names. Units follow the dataset files (see README).
namespace channel {
inline constexpr const char* kDt = "dt";
inline constexpr const char* kAccX = "acc_x";
inline constexpr const char* kAccY = "acc_y";
inline constexpr const char* kAccZ = "acc_z";
inline constexpr const char* kGyroX = "gyro_x";
inline constexpr const char* kGyroY = "gyro_y";
inline constexpr const char* kGyroZ = "gyro_z";
inline constexpr const char* kImuRoll = "imu_roll";
inline constexpr const char* kImuPitch = "imu_pitch";
inline constexpr const char* kImuYaw = "imu_yaw";
inline constexpr const char* kCrawlerRight = "crawler_right";
inline constexpr const char* kCrawlerLeft = "crawler_left";
}  // namespace channel

/// Per-channel affine standardization fitted on training data.
///
/// Channels with zero spread are dropped: `input_schema` is what `apply`
/// consumes, `schema` is what it produces.
struct Standardizer {
  FeatureSchema input_schema;
  FeatureSchema schema;
  std::vector<std::size_t> kept;  // indices into input_schema
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  /// Raw vector over input_schema -> standardized vector over schema.
  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const;
  /// Column-wise apply on a (channels x frames) matrix; checks channel names.
  Eigen::MatrixXd apply(const FeatureSchema& raw_schema, const Eigen::MatrixXd& raw) const;
  /// Standardized vector over schema -> raw values of the kept channels.
  Eigen::VectorXd inverse(const Eigen::VectorXd& standardized) const;
};

/// Population mean/std per channel over the columns of each training matrix.
/// Needs at least two samples in total.
Standardizer fit_standardizer(const FeatureSchema& schema, const std::vector<const Eigen::MatrixXd*>& training);

}  // namespace trackpose
