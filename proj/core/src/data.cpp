#include "trackpose/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "trackpose/error.hpp"
#include "trackpose/parallel.hpp"
#include "trackpose/sim.hpp"

namespace trackpose::data {

using nlohmann::json;

namespace {

constexpr double kDegToRad = kPi / 180.0;
constexpr double kRateTolerance = 1e-6;

std::string where(const std::filesystem::path& p, std::size_t row) {
  // Data row r sits on line r + 2 (header is line 1).
  return p.string() + " row " + std::to_string(row + 1);
}

RawTable load_table(const std::filesystem::path& path, double rate_hz) {
  RawTable t;
  t.path = path;
  t.rate_hz = rate_hz;
  t.table = csv::read(path);
  if (t.table.columns.empty() || t.table.columns.front() != "t") {
    fail(ErrorCode::MissingColumn, path.string() + ": first column must be 't'");
  }
  if (t.table.rows() == 0) fail(ErrorCode::EmptyChannel, path.string() + ": no data rows");
  const Eigen::MatrixXd& v = t.table.values;
  for (Eigen::Index r = 0; r < v.cols(); ++r) {
    for (Eigen::Index c = 0; c < v.rows(); ++c) {
      if (!std::isfinite(v(c, r))) {
        fail(ErrorCode::NonFiniteInput, where(path, static_cast<std::size_t>(r)) + ": non-finite value in column '" +
                                            t.table.columns[static_cast<std::size_t>(c)] + "'");
      }
    }
  }
  for (Eigen::Index r = 1; r < v.cols(); ++r) {
    if (!(v(0, r) > v(0, r - 1))) {
      fail(ErrorCode::NonMonotoneTime, where(path, static_cast<std::size_t>(r)) + ": time does not increase");
    }
  }
  const double period = 1.0 / rate_hz;
  for (Eigen::Index r = 1; r < v.cols(); ++r) {
    const double gap = v(0, r) - v(0, r - 1);
    if (std::abs(gap - period) > kRateTolerance) {
      fail(ErrorCode::RateMismatch, where(path, static_cast<std::size_t>(r)) + ": sample gap " +
                                        csv::format_number(gap) + " s, expected " + csv::format_number(period) +
                                        " s");
    }
  }
  return t;
}

void require(const RawTable& t, const std::vector<std::string>& names) {
  for (const auto& n : names) t.table.column(n, t.path.string());
}

Vec3 column3(const csv::Table& t, std::size_t c0, Eigen::Index k) {
  return {t.values(static_cast<Eigen::Index>(c0), k), t.values(static_cast<Eigen::Index>(c0 + 1), k),
          t.values(static_cast<Eigen::Index>(c0 + 2), k)};
}

}  // namespace

RawEpisode ingest(const std::filesystem::path& dir, std::string_view id, const FeatureSchema& schema) {
  check_no_leakage(schema);
  const sim::EpisodeFiles files = sim::episode_files(dir, id);
  RawEpisode raw;
  raw.id = std::string(id);
  raw.fast = load_table(files.fast, sim::kFastRate);
  raw.slow = load_table(files.slow, sim::kSlowRate);
  require(raw.fast, {channel::kDt, channel::kAccX, channel::kAccY, channel::kAccZ, channel::kGyroX, channel::kGyroY,
                     channel::kGyroZ});
  require(raw.slow, {channel::kCrawlerRight, channel::kCrawlerLeft});
  for (const auto& ch : schema.channels()) {
    if (!raw.fast.table.has_column(ch.name) && !raw.slow.table.has_column(ch.name)) {
      fail(ErrorCode::MissingColumn, "episode " + raw.id + ": schema channel '" + ch.name + "' is in neither " +
                                         files.fast.string() + " nor " + files.slow.string());
    }
  }
  if (std::filesystem::exists(files.truth)) {
    raw.truth = load_table(files.truth, sim::kFastRate);
    require(*raw.truth, {"x", "y", "z", "roll", "pitch", "yaw"});
  }
  return raw;
}

std::vector<Vec3> velocity_targets(const Trajectory& truth) {
  const std::size_t n = truth.size();
  std::vector<Vec3> raw(n, Vec3::Zero());
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = truth.t[k + 1] - truth.t[k];
    raw[k] = rot_xyz(truth.poses[k].attitude).transpose() * (truth.poses[k + 1].position - truth.poses[k].position) /
             dt;
  }
  if (n >= 2) raw[n - 1] = raw[n - 2];
  std::vector<Vec3> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= 2 ? k - 2 : 0;
    const std::size_t hi = std::min(n - 1, k + 2);
    Vec3 sum = Vec3::Zero();
    for (std::size_t j = lo; j <= hi; ++j) sum += raw[j];
    out[k] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

bool slip_by_ratio(double encoder_speed, double true_speed, double threshold) {
  return std::abs(encoder_speed - true_speed) / std::max(std::abs(encoder_speed), 0.1) > threshold;
}

PreparedEpisode prepare(const RawEpisode& raw, const FeatureSchema& schema, std::string scenario) {
  check_no_leakage(schema);
  PreparedEpisode ep;
  ep.id = raw.id;
  ep.scenario = std::move(scenario);
  ep.schema = schema;

  const csv::Table& fast = raw.fast.table;
  const std::size_t n = raw.fast.rows();
  ep.t.resize(n);
  ep.dt.resize(n);
  const std::size_t c_dt = fast.column(channel::kDt);
  for (std::size_t k = 0; k < n; ++k) {
    ep.t[k] = fast.values(0, static_cast<Eigen::Index>(k));
    ep.dt[k] = fast.values(static_cast<Eigen::Index>(c_dt), static_cast<Eigen::Index>(k));
  }

  auto channel_of = [&](const std::string& name) {
    const RawTable& src = fast.has_column(name) ? raw.fast : raw.slow;
    const std::size_t c = src.table.column(name, src.path.string());
    RawChannel ch;
    ch.name = name;
    ch.t.resize(src.rows());
    ch.values.resize(src.rows());
    for (std::size_t r = 0; r < src.rows(); ++r) {
      ch.t[r] = src.table.values(0, static_cast<Eigen::Index>(r));
      ch.values[r] = src.table.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
    }
    return ch;
  };

  std::vector<RawChannel> channels;
  channels.reserve(schema.size());
  for (const auto& spec : schema.channels()) channels.push_back(channel_of(spec.name));
  ep.features = align_to_master_clock(channels, ep.t);

  const std::size_t c_acc = fast.column(channel::kAccX);
  const std::size_t c_gyro = fast.column(channel::kGyroX);
  ep.accel.resize(n);
  ep.gyro.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    ep.accel[k] = column3(fast, c_acc, col);
    ep.gyro[k] = column3(fast, c_gyro, col) * kDegToRad;
  }
  const Eigen::MatrixXd crawler =
      align_to_master_clock({channel_of(channel::kCrawlerRight), channel_of(channel::kCrawlerLeft)}, ep.t);
  ep.crawler.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    ep.crawler[k] = {crawler(0, static_cast<Eigen::Index>(k)) / 3600.0,
                     crawler(1, static_cast<Eigen::Index>(k)) / 3600.0};
  }

  if (raw.truth) {
    const csv::Table& tt = raw.truth->table;
    if (tt.rows() != n) {
      fail(ErrorCode::LengthMismatch, raw.truth->path.string() + ": " + std::to_string(tt.rows()) +
                                          " rows, sensor file has " + std::to_string(n));
    }
    const std::size_t cx = tt.column("x");
    const std::size_t cr = tt.column("roll");
    Trajectory truth;
    for (std::size_t k = 0; k < n; ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      if (std::abs(tt.values(0, col) - ep.t[k]) > 1e-9) {
        fail(ErrorCode::LengthMismatch, where(raw.truth->path, k) + ": truth time does not match the 100 Hz file");
      }
      StateVector s;
      s.position = column3(tt, cx, col);
      s.attitude = EulerAngles::from_vector(column3(tt, cr, col));
      truth.push_back(ep.t[k], s);
    }
    ep.target_velocity = velocity_targets(truth);
    if (tt.has_column("vx") && tt.has_column("vy") && tt.has_column("vz")) {
      const std::size_t cv = tt.column("vx");
      ep.truth_velocity.resize(n);
      for (std::size_t k = 0; k < n; ++k) ep.truth_velocity[k] = column3(tt, cv, static_cast<Eigen::Index>(k));
    } else {
      ep.truth_velocity = ep.target_velocity;
    }
    truth.slip.resize(n);
    if (tt.has_column("slip")) {
      const std::size_t cs = tt.column("slip");
      for (std::size_t k = 0; k < n; ++k) truth.slip[k] = tt.values(static_cast<Eigen::Index>(cs), static_cast<Eigen::Index>(k)) > 0.5;
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        const double enc = crawler_kinematics(ep.crawler[k]).forward_speed;
        truth.slip[k] = std::abs(enc) >= 0.1 && slip_by_ratio(enc, ep.truth_velocity[k].x());
      }
    }
    ep.truth = std::move(truth);
  }
  return ep;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  fail(ErrorCode::Config, "unknown split '" + std::string(text) + "'");
}

std::vector<const ManifestEntry*> Manifest::select(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : episodes) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

std::vector<std::string> Manifest::scenarios() const {
  std::set<std::string> names;
  for (const auto& e : episodes) names.insert(e.scenario);
  return {names.begin(), names.end()};
}

Manifest build_splits(std::vector<ManifestEntry> episodes, std::uint64_t seed) {
  std::sort(episodes.begin(), episodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < episodes.size(); ++i) {
    if (episodes[i].id == episodes[i - 1].id) fail(ErrorCode::Config, "duplicate episode id '" + episodes[i].id + "'");
  }
  std::map<std::string, std::vector<std::size_t>> by_scenario;
  for (std::size_t i = 0; i < episodes.size(); ++i) by_scenario[episodes[i].scenario].push_back(i);
  std::mt19937_64 rng(seed);
  for (auto& [name, idx] : by_scenario) {
    if (idx.size() < 2) {
      fail(ErrorCode::InsufficientEpisodes,
           "scenario '" + name + "' has " + std::to_string(idx.size()) + " episode(s); a validation and a test episode are needed");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    episodes[idx[0]].split = Split::Val;
    episodes[idx[1]].split = Split::Test;
    for (std::size_t j = 2; j < idx.size(); ++j) episodes[idx[j]].split = Split::Train;
  }
  return {std::move(episodes), seed};
}

std::string manifest_to_json(const Manifest& m) {
  json eps = json::array();
  for (const auto& e : m.episodes) {
    eps.push_back({{"id", e.id},
                   {"scenario", e.scenario},
                   {"split", std::string(to_string(e.split))},
                   {"files", {{"fast", e.fast_file}, {"slow", e.slow_file}, {"truth", e.truth_file}}},
                   {"rows", {{"fast", e.fast_rows}, {"slow", e.slow_rows}}},
                   {"rates", {{"fast", sim::kFastRate}, {"slow", sim::kSlowRate}}}});
  }
  return json{{"episodes", eps}, {"seed", m.seed}}.dump(2);
}

Manifest manifest_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    Manifest m;
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.at("episodes")) {
      ManifestEntry me;
      me.id = e.at("id").get<std::string>();
      me.scenario = e.value("scenario", std::string());
      me.split = parse_split(e.value("split", std::string("train")));
      if (e.contains("files")) {
        me.fast_file = e["files"].value("fast", std::string());
        me.slow_file = e["files"].value("slow", std::string());
        me.truth_file = e["files"].value("truth", std::string());
      }
      if (e.contains("rows")) {
        me.fast_rows = e["rows"].value("fast", std::size_t{0});
        me.slow_rows = e["rows"].value("slow", std::size_t{0});
      }
      m.episodes.push_back(std::move(me));
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("manifest JSON: ") + e.what());
  }
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << manifest_to_json(m) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

std::vector<PreparedEpisode> load_episodes(const std::filesystem::path& dataset_dir,
                                           const std::vector<const ManifestEntry*>& entries,
                                           const FeatureSchema& schema) {
  std::vector<PreparedEpisode> out(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    out[i] = prepare(ingest(dataset_dir, entries[i]->id, schema), schema, entries[i]->scenario);
  });
  return out;
}

}  // namespace trackpose::data
