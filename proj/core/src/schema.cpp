#include "trackpose/schema.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "trackpose/error.hpp"

namespace trackpose {

std::string_view to_string(FeatureGroup group) {
  switch (group) {
    case FeatureGroup::IC: return "IC";
    case FeatureGroup::Ve: return "Ve";
    case FeatureGroup::Bu: return "Bu";
  }
  return "?";
}

FeatureGroup parse_feature_group(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ic") return FeatureGroup::IC;
  if (lower == "ve") return FeatureGroup::Ve;
  if (lower == "bu") return FeatureGroup::Bu;
  fail(ErrorCode::Config, "unknown feature group '" + std::string(text) + "'");
}

std::string_view to_string(GroupSet set) {
  switch (set) {
    case GroupSet::IC: return "ic";
    case GroupSet::IC_Ve: return "ic+ve";
    case GroupSet::IC_Ve_Bu: return "ic+ve+bu";
  }
  return "?";
}

GroupSet parse_group_set(std::string_view text) {
  if (text == "ic") return GroupSet::IC;
  if (text == "ic+ve") return GroupSet::IC_Ve;
  if (text == "ic+ve+bu") return GroupSet::IC_Ve_Bu;
  fail(ErrorCode::Config, "unknown group set '" + std::string(text) + "' (expected ic, ic+ve or ic+ve+bu)");
}

bool contains(GroupSet set, FeatureGroup group) {
  switch (group) {
    case FeatureGroup::IC: return true;
    case FeatureGroup::Ve: return set != GroupSet::IC;
    case FeatureGroup::Bu: return set == GroupSet::IC_Ve_Bu;
  }
  return false;
}

FeatureSchema::FeatureSchema(std::vector<ChannelSpec> channels) : channels_(std::move(channels)) {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    for (std::size_t j = i + 1; j < channels_.size(); ++j) {
      if (channels_[i].name == channels_[j].name) {
        fail(ErrorCode::Config, "duplicate channel '" + channels_[i].name + "' in feature schema");
      }
    }
  }
}

FeatureSchema FeatureSchema::canonical() {
  using G = FeatureGroup;
  return FeatureSchema({
      {"acc_x", G::IC, false},
      {"acc_y", G::IC, false},
      {"acc_z", G::IC, false},
      {"gyro_x", G::IC, false},
      {"gyro_y", G::IC, false},
      {"gyro_z", G::IC, false},
      {"imu_roll", G::IC, false},
      {"imu_pitch", G::IC, false},
      {"imu_yaw", G::IC, false},
      {"crawler_right", G::IC, false},
      {"crawler_left", G::IC, false},
      {"speed_gear", G::Ve, true},
      {"fnr_gear", G::Ve, true},
      {"steering_state", G::Ve, true},
      {"steering_stroke", G::Ve, false},
      {"engine_speed", G::Ve, false},
      {"engine_torque", G::Ve, false},
      {"traction_force", G::Ve, false},
      {"blade_lift_lever", G::Bu, false},
      {"blade_tilt_lever", G::Bu, false},
      {"blade_state", G::Bu, true},
      {"blade_current_lift", G::Bu, false},
      {"blade_current_tilt", G::Bu, false},
      {"blade_current_angle", G::Bu, false},
      {"blade_right_edge_x", G::Bu, false},
      {"blade_right_edge_y", G::Bu, false},
      {"blade_right_edge_z", G::Bu, false},
      {"blade_left_edge_x", G::Bu, false},
      {"blade_left_edge_y", G::Bu, false},
      {"blade_left_edge_z", G::Bu, false},
      {"blade_lift_angle", G::Bu, false},
      {"hst_pressure_rf", G::Bu, false},
      {"hst_pressure_lf", G::Bu, false},
      {"hst_pressure_rr", G::Bu, false},
      {"hst_pressure_lr", G::Bu, false},
      {"blade_pump_pressure", G::Bu, false},
      {"relief_level", G::Bu, true},
  });
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& c : channels_) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].name == name) return i;
  }
  return std::nullopt;
}

FeatureSchema FeatureSchema::restricted(GroupSet set) const {
  std::vector<ChannelSpec> kept;
  for (const auto& c : channels_) {
    if (contains(set, c.group)) kept.push_back(c);
  }
  return FeatureSchema(std::move(kept));
}

std::string FeatureSchema::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : channels_) {
    arr.push_back({{"name", c.name}, {"group", std::string(trackpose::to_string(c.group))}, {"categorical", c.categorical}});
  }
  return arr.dump();
}

FeatureSchema FeatureSchema::from_json(std::string_view text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, std::string("feature schema: ") + e.what());
  }
  if (!arr.is_array()) fail(ErrorCode::Config, "feature schema must be a JSON array");
  std::vector<ChannelSpec> channels;
  for (const auto& item : arr) {
    if (!item.contains("name") || !item.contains("group")) {
      fail(ErrorCode::Config, "feature schema entry needs 'name' and 'group'");
    }
    channels.push_back({item.at("name").get<std::string>(), parse_feature_group(item.at("group").get<std::string>()),
                        item.value("categorical", false)});
  }
  return FeatureSchema(std::move(channels));
}

const std::vector<std::string>& ground_truth_columns() {
  static const std::vector<std::string> columns = {"x",  "y",  "z",  "roll",       "pitch", "yaw",
                                                   "vx", "vy", "vz", "slip_ratio", "slip"};
  return columns;
}

void check_no_leakage(const FeatureSchema& schema) {
  const auto& truth = ground_truth_columns();
  for (const auto& c : schema.channels()) {
    if (std::find(truth.begin(), truth.end(), c.name) != truth.end()) {
      fail(ErrorCode::GroundTruthLeakage, "ground-truth column '" + c.name + "' listed as a model input");
    }
    if (c.name == channel::kDt) {
      fail(ErrorCode::GroundTruthLeakage, "'dt' drives the filter and cannot be a model input");
    }
  }
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& raw) const {
  if (static_cast<std::size_t>(raw.size()) != input_schema.size()) {
    fail(ErrorCode::SchemaMismatch, "feature vector has " + std::to_string(raw.size()) + " values, standardizer expects " +
                                        std::to_string(input_schema.size()));
  }
  Eigen::VectorXd out(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) out(i) = (raw(kept[i]) - mean(i)) / stddev(i);
  return out;
}

Eigen::MatrixXd Standardizer::apply(const FeatureSchema& raw_schema, const Eigen::MatrixXd& raw) const {
  if (raw_schema.names() != input_schema.names()) {
    fail(ErrorCode::SchemaMismatch, "feature schema does not match the standardizer's input schema");
  }
  if (static_cast<std::size_t>(raw.rows()) != input_schema.size()) {
    fail(ErrorCode::SchemaMismatch, "feature matrix row count does not match the schema");
  }
  Eigen::MatrixXd out(kept.size(), raw.cols());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.row(i) = (raw.row(kept[i]).array() - mean(i)) / stddev(i);
  }
  return out;
}

Eigen::VectorXd Standardizer::inverse(const Eigen::VectorXd& standardized) const {
  if (static_cast<std::size_t>(standardized.size()) != kept.size()) {
    fail(ErrorCode::SchemaMismatch, "standardized vector length does not match the schema");
  }
  return standardized.cwiseProduct(stddev) + mean;
}

Standardizer fit_standardizer(const FeatureSchema& schema, const std::vector<const Eigen::MatrixXd*>& training) {
  const std::size_t channels = schema.size();
  std::size_t n = 0;
  for (const auto* m : training) {
    if (static_cast<std::size_t>(m->rows()) != channels) {
      fail(ErrorCode::SchemaMismatch, "training matrix row count does not match the schema");
    }
    n += static_cast<std::size_t>(m->cols());
  }
  if (n < 2) fail(ErrorCode::InvalidArgument, "standardizer needs at least two samples");

  // Two passes for accuracy: mean, then mean squared deviation.
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(channels);
  for (const auto* m : training) mean += m->rowwise().sum();
  mean /= static_cast<double>(n);
  Eigen::VectorXd var = Eigen::VectorXd::Zero(channels);
  for (const auto* m : training) var += (m->colwise() - mean).array().square().rowwise().sum().matrix();
  var /= static_cast<double>(n);

  Standardizer s;
  s.input_schema = schema;
  std::vector<ChannelSpec> kept_specs;
  std::vector<double> kept_mean, kept_std;
  for (std::size_t i = 0; i < channels; ++i) {
    const double sd = std::sqrt(var(i));
    if (!(sd > 1e-9 * std::max(1.0, std::abs(mean(i))))) {
      spdlog::info("standardizer: dropping channel '{}' (zero variance, {})", schema[i].name,
                   to_string(ErrorCode::DegenerateChannel));
      continue;
    }
    s.kept.push_back(i);
    kept_specs.push_back(schema[i]);
    kept_mean.push_back(mean(i));
    kept_std.push_back(sd);
  }
  s.schema = FeatureSchema(std::move(kept_specs));
  s.mean = Eigen::Map<Eigen::VectorXd>(kept_mean.data(), static_cast<Eigen::Index>(kept_mean.size()));
  s.stddev = Eigen::Map<Eigen::VectorXd>(kept_std.data(), static_cast<Eigen::Index>(kept_std.size()));
  return s;
}

}  // namespace trackpose
