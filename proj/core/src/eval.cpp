#include "trackpose/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "trackpose/csv.hpp"
#include "trackpose/error.hpp"
#include "trackpose/parallel.hpp"

namespace trackpose::eval {

using nlohmann::json;

Vec3 velocity_rmse(std::span<const Vec3> estimate, std::span<const Vec3> truth) {
  if (estimate.size() != truth.size()) {
    fail(ErrorCode::LengthMismatch, "velocity streams differ in length (" + std::to_string(estimate.size()) + " vs " +
                                        std::to_string(truth.size()) + ")");
  }
  if (estimate.empty()) fail(ErrorCode::LengthMismatch, "velocity streams are empty");
  Vec3 sum = Vec3::Zero();
  for (std::size_t i = 0; i < estimate.size(); ++i) sum += (estimate[i] - truth[i]).cwiseAbs2();
  return (sum / static_cast<double>(estimate.size())).cwiseSqrt();
}

std::vector<double> displacement_errors(const Trajectory& estimate, const Trajectory& truth, bool planar) {
  if (estimate.size() != truth.size()) {
    fail(ErrorCode::LengthMismatch, "trajectories differ in length (" + std::to_string(estimate.size()) + " vs " +
                                        std::to_string(truth.size()) + ")");
  }
  if (truth.empty()) fail(ErrorCode::LengthMismatch, "trajectories are empty");
  std::vector<double> e(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Vec3 d = estimate.poses[i].position - truth.poses[i].position;
    e[i] = planar ? d.head<2>().norm() : d.norm();
  }
  return e;
}

double ade(const Trajectory& estimate, const Trajectory& truth, bool planar) {
  const auto e = displacement_errors(estimate, truth, planar);
  return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
}

StateVector initial_pose(const data::PreparedEpisode& ep) {
  return ep.truth && !ep.truth->empty() ? ep.truth->poses.front() : StateVector{};
}

namespace {

void attach_slip(Trajectory& traj, const data::PreparedEpisode& ep) {
  if (ep.truth) traj.slip = ep.truth->slip;
}

void require_frames(const data::PreparedEpisode& ep) {
  if (ep.size() == 0) fail(ErrorCode::EmptyChannel, "episode " + ep.id + " has no frames");
  if (ep.crawler.size() != ep.size()) fail(ErrorCode::EmptyChannel, "episode " + ep.id + " has no crawler data");
}

}  // namespace

Localization crawler_odometry(const data::PreparedEpisode& ep, double tread) {
  require_frames(ep);
  const std::size_t n = ep.size();
  Localization out;
  out.velocity.resize(n);
  StateVector s = initial_pose(ep);
  out.trajectory.push_back(ep.t[0], s);
  for (std::size_t k = 0; k < n; ++k) {
    const CrawlerMotion m = crawler_kinematics(ep.crawler[k], tread);
    out.velocity[k] = {m.forward_speed, 0.0, 0.0};
    if (k + 1 == n) break;
    const double dt = ep.dt[k + 1];
    s.position.x() += m.forward_speed * std::cos(s.attitude.yaw) * dt;
    s.position.y() += m.forward_speed * std::sin(s.attitude.yaw) * dt;
    s.attitude.yaw = wrap_angle(s.attitude.yaw + m.yaw_rate * dt);
    out.trajectory.push_back(ep.t[k + 1], s);
  }
  attach_slip(out.trajectory, ep);
  return out;
}

Localization ekf_localize(const data::PreparedEpisode& ep, std::vector<Vec3> velocity, const ekf::FilterConfig& cfg) {
  require_frames(ep);
  const std::size_t n = ep.size();
  if (ep.accel.size() != n || ep.gyro.size() != n) {
    fail(ErrorCode::EmptyChannel, "episode " + ep.id + " has no IMU data");
  }
  if (velocity.size() != n) fail(ErrorCode::LengthMismatch, "velocity stream does not match the episode length");
  std::vector<ekf::FilterStep> steps(n - 1);
  std::size_t skipped = 0;
  for (std::size_t k = 1; k < n; ++k) {
    ekf::FilterStep& st = steps[k - 1];
    st.control = {velocity[k - 1], ep.gyro[k - 1], ep.dt[k]};
    try {
      st.observation = ekf::observe(ep.accel[k], cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateAcceleration) throw;
      ++skipped;
    }
  }
  if (skipped > 0) spdlog::debug("episode {}: {} near-free-fall frames skipped the update", ep.id, skipped);
  Localization out;
  out.trajectory = ekf::run_filter(ekf::initial_state(initial_pose(ep), cfg), ep.t[0], steps, cfg);
  out.trajectory.t = ep.t;
  attach_slip(out.trajectory, ep);
  out.velocity = std::move(velocity);
  return out;
}

Localization kinematics_ekf(const data::PreparedEpisode& ep, const ekf::FilterConfig& cfg, double tread) {
  require_frames(ep);
  std::vector<Vec3> v(ep.size());
  for (std::size_t k = 0; k < ep.size(); ++k) v[k] = {crawler_kinematics(ep.crawler[k], tread).forward_speed, 0, 0};
  return ekf_localize(ep, std::move(v), cfg);
}

Eigen::MatrixXd select_features(const data::PreparedEpisode& ep, const FeatureSchema& schema) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(schema.size()), ep.features.cols());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto idx = ep.schema.index_of(schema[i].name);
    if (!idx) {
      fail(ErrorCode::SchemaMismatch, "episode " + ep.id + " lacks model channel '" + schema[i].name + "'");
    }
    out.row(static_cast<Eigen::Index>(i)) = ep.features.row(static_cast<Eigen::Index>(*idx));
  }
  return out;
}

std::vector<Vec3> predict_velocities(const learn::Checkpoint& ckpt, const data::PreparedEpisode& ep,
                                     double max_speed) {
  if (!ckpt.model) fail(ErrorCode::ModelNotTrained, "checkpoint has no model");
  const learn::VelocityModel& model = *ckpt.model;
  const FeatureSchema& in_schema = ckpt.standardizer.input_schema;
  const Eigen::MatrixXd x = ckpt.standardizer.apply(in_schema, select_features(ep, in_schema));
  if (static_cast<std::size_t>(x.rows()) != model.input_width()) {
    fail(ErrorCode::SchemaMismatch, "standardized width does not match the model input");
  }
  const std::size_t n = static_cast<std::size_t>(x.cols());
  const std::size_t w = model.window();
  constexpr std::size_t kBatch = 512;
  std::vector<Vec3> out(n);
  learn::SequenceBatch batch(w);
  std::size_t clamped = 0;
  for (std::size_t start = 0; start < n; start += kBatch) {
    const std::size_t b = std::min(kBatch, n - start);
    for (auto& m : batch) m.resize(x.rows(), static_cast<Eigen::Index>(b));
    for (std::size_t j = 0; j < b; ++j) {
      const std::size_t f = start + j;
      for (std::size_t s = 0; s < w; ++s) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(f) - static_cast<std::ptrdiff_t>(w - 1 - s);
        batch[s].col(static_cast<Eigen::Index>(j)) = x.col(std::max<std::ptrdiff_t>(0, src));
      }
    }
    const Eigen::MatrixXd y = model.forward(batch);
    if (!y.allFinite()) fail(ErrorCode::NonFiniteInput, "model produced a non-finite velocity");
    for (std::size_t j = 0; j < b; ++j) {
      Vec3 v = y.col(static_cast<Eigen::Index>(j));
      const double speed = v.norm();
      if (speed > max_speed) {
        v *= max_speed / speed;
        ++clamped;
      }
      out[start + j] = v;
    }
  }
  if (clamped > 0) spdlog::warn("episode {}: {} velocity estimates clamped to {} m/s", ep.id, clamped, max_speed);
  return out;
}

Localization learned_ekf(const data::PreparedEpisode& ep, const learn::Checkpoint& ckpt,
                         const ekf::FilterConfig& cfg) {
  return ekf_localize(ep, predict_velocities(ckpt, ep), cfg);
}

TrainedModel train_model(const ModelSpec& spec, const std::vector<data::PreparedEpisode>& train_set,
                         const std::vector<data::PreparedEpisode>& val_set, const learn::TrainConfig& cfg,
                         const learn::EpochCallback& on_epoch) {
  if (train_set.empty()) fail(ErrorCode::InsufficientEpisodes, "no training episodes");
  if (val_set.empty()) fail(ErrorCode::InsufficientEpisodes, "no validation episodes");
  {
    std::set<std::string> ids;
    for (const auto& e : train_set) ids.insert(e.id);
    for (const auto& e : val_set) {
      if (ids.count(e.id)) fail(ErrorCode::Config, "episode " + e.id + " is in both training and validation sets");
    }
  }
  const FeatureSchema input_schema = train_set.front().schema.restricted(spec.groups);
  check_no_leakage(input_schema);

  std::vector<Eigen::MatrixXd> train_raw;
  train_raw.reserve(train_set.size());
  for (const auto& e : train_set) train_raw.push_back(select_features(e, input_schema));
  std::vector<const Eigen::MatrixXd*> ptrs;
  for (const auto& m : train_raw) ptrs.push_back(&m);
  Standardizer standardizer = fit_standardizer(input_schema, ptrs);

  const std::size_t window = spec.kind == learn::ModelKind::Lstm ? spec.lstm.window : 1;
  auto targets = [](const data::PreparedEpisode& e) {
    if (e.target_velocity.size() != e.size()) {
      fail(ErrorCode::InsufficientEpisodes, "episode " + e.id + " has no ground truth for training targets");
    }
    Eigen::MatrixXd y(3, static_cast<Eigen::Index>(e.size()));
    for (std::size_t k = 0; k < e.size(); ++k) y.col(static_cast<Eigen::Index>(k)) = e.target_velocity[k];
    return y;
  };
  learn::WindowDataset train_data(window, cfg.sample_stride);
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    train_data.add_episode(standardizer.apply(input_schema, train_raw[i]), targets(train_set[i]));
  }
  learn::WindowDataset val_data(window, cfg.sample_stride);
  for (const auto& e : val_set) {
    val_data.add_episode(standardizer.apply(input_schema, select_features(e, input_schema)), targets(e));
  }

  auto model = learn::make_model(spec.kind, standardizer.schema.size(), spec.mlp, spec.lstm, cfg.seed);
  learn::TrainResult result = learn::train(std::move(model), train_data, val_data, cfg, on_epoch);

  TrainedModel out;
  out.checkpoint.kind = spec.kind;
  out.checkpoint.mlp = spec.mlp;
  out.checkpoint.lstm = spec.lstm;
  out.checkpoint.groups = spec.groups;
  out.checkpoint.standardizer = std::move(standardizer);
  out.checkpoint.val_loss = result.best_val_loss;
  out.checkpoint.best_epoch = result.best_epoch;
  out.checkpoint.seed = cfg.seed;
  out.checkpoint.model = std::move(result.best);
  out.curve = std::move(result.curve);
  return out;
}

Method crawler_method() {
  return {"crawler", "crawler", 0, [](const data::PreparedEpisode& ep) { return crawler_odometry(ep); }};
}

Method kinematics_ekf_method(const ekf::FilterConfig& cfg) {
  return {"kinematic-ekf", "kinematic-ekf", 0,
          [cfg](const data::PreparedEpisode& ep) { return kinematics_ekf(ep, cfg); }};
}

Method learned_ekf_method(std::shared_ptr<const learn::Checkpoint> ckpt, std::string family, int trial,
                          const ekf::FilterConfig& cfg) {
  std::string name = family + "#" + std::to_string(trial);
  return {std::move(name), std::move(family), trial,
          [ckpt = std::move(ckpt), cfg](const data::PreparedEpisode& ep) { return learned_ekf(ep, *ckpt, cfg); }};
}

MetricReport compare(const std::vector<Method>& methods, const std::vector<data::PreparedEpisode>& episodes) {
  MetricReport report;
  report.cells.resize(methods.size() * episodes.size());
  parallel_for(report.cells.size(), [&](std::size_t i) {
    const data::PreparedEpisode& ep = episodes[i / methods.size()];
    const Method& m = methods[i % methods.size()];
    Cell& c = report.cells[i];
    c.episode = ep.id;
    c.scenario = ep.scenario;
    c.method = m.name;
    c.family = m.family;
    c.trial = m.trial;
    c.frames = ep.size();
    try {
      if (!ep.truth) fail(ErrorCode::InvalidArgument, "episode " + ep.id + " has no ground truth");
      const auto t0 = std::chrono::steady_clock::now();
      Localization loc = m.run(ep);
      c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      c.seconds_per_frame = c.frames ? c.seconds / static_cast<double>(c.frames) : 0.0;
      c.realtime = c.seconds_per_frame < kFramePeriod;
      c.error_over_time = displacement_errors(loc.trajectory, *ep.truth);
      c.ade = std::accumulate(c.error_over_time.begin(), c.error_over_time.end(), 0.0) /
              static_cast<double>(c.error_over_time.size());
      c.ade_planar = ade(loc.trajectory, *ep.truth, true);
      const auto& slip = ep.truth->slip;
      if (slip.size() == c.error_over_time.size()) {
        double s_sum = 0, n_sum = 0;
        std::size_t s_n = 0, n_n = 0;
        for (std::size_t k = 0; k < slip.size(); ++k) {
          if (slip[k]) {
            s_sum += c.error_over_time[k];
            ++s_n;
          } else {
            n_sum += c.error_over_time[k];
            ++n_n;
          }
        }
        if (s_n) c.ade_slip = s_sum / static_cast<double>(s_n);
        if (n_n) c.ade_nonslip = n_sum / static_cast<double>(n_n);
      }
      if (loc.velocity.size() == ep.truth_velocity.size() && !loc.velocity.empty()) {
        c.velocity_rmse = velocity_rmse(loc.velocity, ep.truth_velocity);
        for (std::size_t k = 0; k < loc.velocity.size(); ++k) {
          c.velocity_sq_sum += (loc.velocity[k] - ep.truth_velocity[k]).cwiseAbs2();
        }
        c.velocity_count = loc.velocity.size();
      }
      c.trajectory = std::move(loc.trajectory);
      c.ok = true;
    } catch (const std::exception& e) {
      c.ok = false;
      c.error = e.what();
      spdlog::error("{} on episode {}: {}", m.name, ep.id, e.what());
    }
  });
  return report;
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

template <typename T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

std::vector<std::string> MetricReport::families() const {
  std::vector<std::string> out;
  for (const auto& c : cells) push_unique(out, c.family);
  return out;
}

std::vector<std::string> MetricReport::scenarios() const {
  std::set<std::string> s;
  for (const auto& c : cells) s.insert(c.scenario);
  return {s.begin(), s.end()};
}

std::size_t MetricReport::succeeded() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.ok; }));
}

std::vector<double> MetricReport::trial_ade(const std::string& family, const std::vector<std::string>& scen) const {
  std::map<int, std::vector<double>> per_trial;
  for (const auto& c : cells) {
    if (!c.ok || c.family != family) continue;
    if (!scen.empty() && std::find(scen.begin(), scen.end(), c.scenario) == scen.end()) continue;
    per_trial[c.trial].push_back(c.ade);
  }
  std::vector<double> out;
  for (const auto& [trial, v] : per_trial) out.push_back(mean_of(v));
  return out;
}

std::vector<SummaryRow> MetricReport::ade_table() const {
  std::vector<SummaryRow> rows;
  const auto scen = scenarios();
  for (const auto& fam : families()) {
    std::map<int, std::vector<double>> scenario_means;  // trial -> per-scenario means
    for (const auto& s : scen) {
      std::map<int, std::vector<double>> per_trial;
      for (const auto& c : cells) {
        if (c.ok && c.family == fam && c.scenario == s) per_trial[c.trial].push_back(c.ade);
      }
      std::vector<double> trial_means;
      for (const auto& [trial, v] : per_trial) {
        trial_means.push_back(mean_of(v));
        scenario_means[trial].push_back(trial_means.back());
      }
      if (!trial_means.empty()) rows.push_back({fam, s, mean_of(trial_means), sample_std(trial_means), trial_means.size()});
    }
    std::vector<double> averages;
    for (const auto& [trial, v] : scenario_means) averages.push_back(mean_of(v));
    if (!averages.empty()) rows.push_back({fam, "average", mean_of(averages), sample_std(averages), averages.size()});
  }
  return rows;
}

std::vector<Vec3> MetricReport::trial_velocity_rmse(const std::string& family) const {
  std::map<int, std::pair<Vec3, std::size_t>> acc;
  for (const auto& c : cells) {
    if (!c.ok || c.family != family || c.velocity_count == 0) continue;
    auto& a = acc.try_emplace(c.trial, Vec3::Zero(), 0).first->second;
    a.first += c.velocity_sq_sum;
    a.second += c.velocity_count;
  }
  std::vector<Vec3> out;
  for (const auto& [trial, a] : acc) out.push_back((a.first / static_cast<double>(a.second)).cwiseSqrt());
  return out;
}

std::vector<VelocitySummary> MetricReport::velocity_table() const {
  std::vector<VelocitySummary> out;
  for (const auto& fam : families()) {
    const auto per_trial = trial_velocity_rmse(fam);
    if (per_trial.empty()) continue;
    VelocitySummary s;
    s.family = fam;
    s.trials = per_trial.size();
    for (int a = 0; a < 3; ++a) {
      std::vector<double> v;
      for (const auto& r : per_trial) v.push_back(r(a));
      s.mean(a) = mean_of(v);
      s.stddev(a) = sample_std(v);
    }
    out.push_back(s);
  }
  return out;
}

std::vector<TimingSummary> MetricReport::timing_table() const {
  std::vector<TimingSummary> out;
  for (const auto& fam : families()) {
    std::map<int, std::pair<double, std::size_t>> per_trial;
    for (const auto& c : cells) {
      if (!c.ok || c.family != fam) continue;
      auto& p = per_trial[c.trial];
      p.first += c.seconds;
      p.second += c.frames;
    }
    if (per_trial.empty()) continue;
    double secs = 0.0, frames = 0.0;
    for (const auto& [trial, p] : per_trial) {
      secs += p.first;
      frames += static_cast<double>(p.second);
    }
    TimingSummary t;
    t.family = fam;
    t.seconds = secs / static_cast<double>(per_trial.size());
    t.seconds_per_frame = frames > 0 ? secs / frames : 0.0;
    t.realtime = t.seconds_per_frame < kFramePeriod;
    out.push_back(t);
  }
  return out;
}

std::vector<AblationRow> ablate_feature_groups(const ModelSpec& spec,
                                               const std::vector<data::PreparedEpisode>& train_set,
                                               const std::vector<data::PreparedEpisode>& val_set,
                                               const std::vector<data::PreparedEpisode>& test_set,
                                               const learn::TrainConfig& cfg, int trials,
                                               const ekf::FilterConfig& filter) {
  if (trials < 1) fail(ErrorCode::Config, "trials must be at least 1");
  const std::vector<GroupSet> sets{GroupSet::IC, GroupSet::IC_Ve, GroupSet::IC_Ve_Bu};
  std::vector<AblationRow> rows;
  for (GroupSet g : sets) {
    ModelSpec s = spec;
    s.groups = g;
    std::vector<std::shared_ptr<const learn::Checkpoint>> ckpts(static_cast<std::size_t>(trials));
    parallel_for(ckpts.size(), [&](std::size_t t) {
      learn::TrainConfig c = cfg;
      c.seed = cfg.seed + t;
      ckpts[t] = std::make_shared<learn::Checkpoint>(train_model(s, train_set, val_set, c).checkpoint);
    });
    std::vector<Method> methods;
    const std::string family = std::string(learn::to_string(spec.kind)) + "-ekf[" + std::string(to_string(g)) + "]";
    for (std::size_t t = 0; t < ckpts.size(); ++t) {
      methods.push_back(learned_ekf_method(ckpts[t], family, static_cast<int>(t), filter));
    }
    AblationRow row;
    row.groups = g;
    row.feature_count = ckpts.front()->standardizer.schema.size();
    row.report = compare(methods, test_set);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void write_report_json(const MetricReport& r, const std::filesystem::path& path) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    json j = {{"episode", c.episode}, {"scenario", c.scenario}, {"method", c.method}, {"family", c.family},
              {"trial", c.trial},     {"ok", c.ok},             {"frames", c.frames}};
    if (c.ok) {
      j["ade"] = c.ade;
      j["ade_planar"] = c.ade_planar;
      j["ade_slip"] = c.ade_slip ? json(*c.ade_slip) : json(nullptr);
      j["ade_nonslip"] = c.ade_nonslip ? json(*c.ade_nonslip) : json(nullptr);
      j["velocity_rmse"] = c.velocity_rmse ? vec_json(*c.velocity_rmse) : json(nullptr);
    } else {
      j["error"] = c.error;
    }
    cells.push_back(std::move(j));
  }
  json table = json::array();
  for (const auto& row : r.ade_table()) {
    table.push_back({{"family", row.family}, {"scenario", row.scenario}, {"mean", row.mean}, {"std", row.stddev},
                     {"trials", row.trials}});
  }
  json vel = json::array();
  for (const auto& v : r.velocity_table()) {
    vel.push_back({{"family", v.family}, {"mean", vec_json(v.mean)}, {"std", vec_json(v.stddev)}, {"trials", v.trials}});
  }
  write_text(path, json{{"cells", cells}, {"ade_table", table}, {"velocity_rmse", vel}}.dump(2) + "\n");
}

void write_ade_table_csv(const MetricReport& r, const std::filesystem::path& path) {
  const auto fams = r.families();
  const auto rows = r.ade_table();
  std::string out = "scenario";
  for (const auto& f : fams) out += "," + f + "_mean," + f + "_std";
  out += "\n";
  auto scen = r.scenarios();
  scen.push_back("average");
  for (const auto& s : scen) {
    out += s;
    for (const auto& f : fams) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& x) { return x.family == f && x.scenario == s; });
      if (it == rows.end()) {
        out += ",,";
      } else {
        out += "," + csv::format_number(it->mean) + "," + csv::format_number(it->stddev);
      }
    }
    out += "\n";
  }
  write_text(path, out);
}

void write_velocity_table_csv(const MetricReport& r, const std::filesystem::path& path) {
  std::string out = "method,rmse_x_mean,rmse_x_std,rmse_y_mean,rmse_y_std,rmse_z_mean,rmse_z_std,trials\n";
  for (const auto& v : r.velocity_table()) {
    out += v.family;
    for (int a = 0; a < 3; ++a) out += "," + csv::format_number(v.mean(a)) + "," + csv::format_number(v.stddev(a));
    out += "," + std::to_string(v.trials) + "\n";
  }
  write_text(path, out);
}

void write_timing_json(const MetricReport& r, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& t : r.timing_table()) {
    arr.push_back({{"family", t.family},
                   {"seconds", t.seconds},
                   {"seconds_per_frame", t.seconds_per_frame},
                   {"realtime_capable", t.realtime},
                   {"frame_period", kFramePeriod}});
  }
  write_text(path, json{{"timing", arr}}.dump(2) + "\n");
}

void write_error_over_time(const MetricReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string());
  std::vector<std::string> episodes;
  for (const auto& c : r.cells) push_unique(episodes, c.episode);
  for (const auto& ep : episodes) {
    std::vector<const Cell*> cols;
    for (const auto& c : r.cells) {
      if (c.episode == ep && c.ok) cols.push_back(&c);
    }
    if (cols.empty()) continue;
    const Trajectory& ref = cols.front()->trajectory;
    csv::Table t;
    t.columns = {"t", "slip"};
    for (const auto* c : cols) t.columns.push_back(c->method);
    t.values.resize(static_cast<Eigen::Index>(t.columns.size()), static_cast<Eigen::Index>(ref.size()));
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const auto col = static_cast<Eigen::Index>(k);
      t.values(0, col) = ref.t[k];
      t.values(1, col) = ref.slip.size() == ref.size() ? ref.slip[k] : 0.0;
      for (std::size_t m = 0; m < cols.size(); ++m) {
        t.values(static_cast<Eigen::Index>(m + 2), col) = cols[m]->error_over_time[k];
      }
    }
    csv::write(dir / ("ep" + ep + "_error.csv"), t);
  }
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  csv::Table t;
  t.columns = {"t", "x", "y", "z", "roll", "pitch", "yaw"};
  const bool with_slip = traj.slip.size() == traj.size() && !traj.empty();
  if (with_slip) t.columns.push_back("slip");
  t.values.resize(static_cast<Eigen::Index>(t.columns.size()), static_cast<Eigen::Index>(traj.size()));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    const StateVector& s = traj.poses[k];
    t.values(0, col) = traj.t[k];
    t.values.block<3, 1>(1, col) = s.position;
    t.values.block<3, 1>(4, col) = s.attitude.as_vector();
    if (with_slip) t.values(7, col) = traj.slip[k];
  }
  csv::write(path, t);
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  std::string out = "groups,features,scenario,ade_mean,ade_std,trials\n";
  for (const auto& row : rows) {
    for (const auto& s : row.report.ade_table()) {
      out += std::string(to_string(row.groups)) + "," + std::to_string(row.feature_count) + "," + s.scenario + "," +
             csv::format_number(s.mean) + "," + csv::format_number(s.stddev) + "," + std::to_string(s.trials) + "\n";
    }
  }
  write_text(path, out);
}

}  // namespace trackpose::eval
