#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "trackpose/checkpoint.hpp"
#include "trackpose/csv.hpp"
#include "trackpose/data.hpp"
#include "trackpose/error.hpp"
#include "trackpose/eval.hpp"
#include "trackpose/parallel.hpp"
#include "trackpose/sim.hpp"

namespace trackpose::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json default_config() {
  json scenarios = json::array();
  for (auto k : sim::all_scenarios()) scenarios.push_back(std::string(sim::to_string(k)));
  return {
      {"seed", 0},
      {"out", "trackpose-out"},
      {"force", false},
      {"dataset", ""},
      {"simulate",
       {{"episodes_per_scenario", 3},
        {"duration_s", 60.0},
        {"scenarios", scenarios},
        {"noise", "default"},
        {"soil", "default"},
        {"slip_signature", "ve_bu"},
        {"speed", 1.0}}},
      {"model",
       {{"kind", "lstm"},
        {"groups", "ic+ve+bu"},
        {"mlp", {{"hidden", {256, 256, 256, 256}}}},
        {"lstm", {{"layers", 4}, {"hidden", 256}, {"window", 40}}}}},
      {"train",
       {{"learning_rate", 1e-3},
        {"epochs", 100},
        {"batch_size", 2048},
        {"validation_period", 5},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"epsilon", 1e-8},
        {"sample_stride", 1},
        {"encoding", "binary"}}},
      {"filter", {{"max_dt", 0.1}, {"gravity_gate", 0.0}, {"initial_variance", 1e-4}}},
      {"localize", {{"episode", ""}, {"method", "learned-ekf"}, {"checkpoint", ""}}},
      {"evaluate",
       {{"split", "test"},
        {"methods", {"crawler", "kinematic-ekf", "learned-ekf"}},
        {"models", {"mlp", "lstm"}},
        {"trials", 5},
        {"checkpoints", json::array()},
        {"ablate", false}}},
  };
}

/// Objects merge key by key; everything else replaces.
void merge(json& base, const json& patch) {
  if (!patch.is_object() || !base.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key())) {
      merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + p.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + p.string());
}

void prepare_out_dir(const fs::path& out, bool force) {
  std::error_code ec;
  if (fs::exists(out, ec) && !fs::is_empty(out, ec) && !force) {
    fail(ErrorCode::Io, "output directory " + out.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(out, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out.string() + ": " + ec.message());
}

std::uint64_t seed_of(const json& cfg) { return cfg.at("seed").get<std::uint64_t>(); }

eval::ModelSpec model_spec(const json& cfg, std::optional<learn::ModelKind> kind = std::nullopt) {
  const json& m = cfg.at("model");
  eval::ModelSpec s;
  s.kind = kind ? *kind : learn::parse_model_kind(m.at("kind").get<std::string>());
  s.groups = parse_group_set(m.at("groups").get<std::string>());
  s.mlp.hidden = m.at("mlp").at("hidden").get<std::vector<std::size_t>>();
  s.lstm.layers = m.at("lstm").at("layers").get<std::size_t>();
  s.lstm.hidden = m.at("lstm").at("hidden").get<std::size_t>();
  s.lstm.window = m.at("lstm").at("window").get<std::size_t>();
  return s;
}

learn::TrainConfig train_config(const json& cfg) {
  const json& t = cfg.at("train");
  learn::TrainConfig c;
  c.learning_rate = t.at("learning_rate").get<double>();
  c.epochs = t.at("epochs").get<int>();
  c.batch_size = t.at("batch_size").get<std::size_t>();
  c.validation_period = t.at("validation_period").get<int>();
  c.beta1 = t.at("beta1").get<double>();
  c.beta2 = t.at("beta2").get<double>();
  c.epsilon = t.at("epsilon").get<double>();
  c.sample_stride = t.at("sample_stride").get<std::size_t>();
  c.seed = seed_of(cfg);
  c.validate();
  return c;
}

ekf::FilterConfig filter_config(const json& cfg) {
  const json& f = cfg.at("filter");
  ekf::FilterConfig c;
  c.max_dt = f.at("max_dt").get<double>();
  const double gate = f.at("gravity_gate").get<double>();
  if (gate > 0.0) c.gravity_gate = gate;
  c.initial_variance = f.at("initial_variance").get<double>();
  return c;
}

learn::CheckpointEncoding encoding_of(const json& cfg) {
  const std::string e = cfg.at("train").at("encoding").get<std::string>();
  if (e == "binary") return learn::CheckpointEncoding::Binary;
  if (e == "json") return learn::CheckpointEncoding::Json;
  fail(ErrorCode::Config, "unknown checkpoint encoding '" + e + "'");
}

fs::path dataset_dir(const json& cfg) {
  const std::string d = cfg.at("dataset").get<std::string>();
  if (d.empty()) fail(ErrorCode::Config, "no dataset directory given (--dataset)");
  return d;
}

void log_config(const std::string& command, const json& cfg, const fs::path& out) {
  spdlog::info("{} with resolved config: {}", command, cfg.dump());
  write_file(out / "config.json", cfg.dump(2) + "\n");
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const json& cfg) {
  const fs::path out = cfg.at("out").get<std::string>();
  prepare_out_dir(out, cfg.at("force").get<bool>());
  const json& s = cfg.at("simulate");
  const auto per = s.at("episodes_per_scenario").get<int>();
  if (per < 1) fail(ErrorCode::Config, "episodes_per_scenario must be at least 1");
  const std::uint64_t seed = seed_of(cfg);

  std::vector<sim::Scenario> scenarios;
  for (const auto& item : s.at("scenarios")) {
    json base = {{"duration_s", s.at("duration_s")}, {"slip_signature", s.at("slip_signature")}, {"speed", s.at("speed")}};
    if (s.at("noise") != "default") base["noise"] = s.at("noise");
    if (s.at("soil") != "default") base["soil"] = s.at("soil");
    if (item.is_string()) {
      base["name"] = item;
    } else {
      merge(base, item);
    }
    for (int r = 0; r < per; ++r) {
      json sc = base;
      sc["seed"] = seed * 1000003ULL + scenarios.size();
      scenarios.push_back(sim::scenario_from_json(sc.dump()));
    }
  }
  if (scenarios.empty()) fail(ErrorCode::Config, "no scenarios to simulate");

  std::vector<data::ManifestEntry> entries(scenarios.size());
  parallel_for(scenarios.size(), [&](std::size_t i) {
    char id[16];
    std::snprintf(id, sizeof id, "%03zu", i);
    const sim::Episode e = sim::generate_episode(scenarios[i]);
    const sim::EpisodeFiles files = sim::export_episode(e, out, id);
    data::ManifestEntry& m = entries[i];
    m.id = id;
    m.scenario = scenarios[i].name();
    m.fast_file = files.fast.filename().string();
    m.slow_file = files.slow.filename().string();
    m.truth_file = files.truth.filename().string();
    m.fast_rows = e.fast.rows();
    m.slow_rows = e.slow.rows();
  });
  const data::Manifest manifest = data::build_splits(entries, seed);
  data::save_manifest(manifest, out / "manifest.json");
  json sc = json::object();
  for (std::size_t i = 0; i < scenarios.size(); ++i) sc[entries[i].id] = json::parse(sim::scenario_to_json(scenarios[i]));
  write_file(out / "scenarios.json", sc.dump(2) + "\n");
  log_config("simulate", cfg, out);
  spdlog::info("wrote {} episodes to {}", scenarios.size(), out.string());
  return kOk;
}

// ---- train ----------------------------------------------------------------

struct Splits {
  data::Manifest manifest;
  std::vector<data::PreparedEpisode> train;
  std::vector<data::PreparedEpisode> val;
};

Splits load_train_val(const fs::path& dataset) {
  Splits s;
  s.manifest = data::load_manifest(dataset / "manifest.json");
  s.train = data::load_episodes(dataset, s.manifest.select(data::Split::Train));
  s.val = data::load_episodes(dataset, s.manifest.select(data::Split::Val));
  return s;
}

void write_curve(const std::vector<learn::EpochRecord>& curve, const fs::path& path) {
  std::string text = "epoch,train_loss,val_loss\n";
  for (const auto& r : curve) {
    text += std::to_string(r.epoch) + "," + (r.train_loss ? csv::format_number(*r.train_loss) : "") + "," +
            (r.val_loss ? csv::format_number(*r.val_loss) : "") + "\n";
  }
  write_file(path, text);
}

eval::TrainedModel train_logged(const eval::ModelSpec& spec, const Splits& s, const learn::TrainConfig& tc) {
  const std::string tag = std::string(learn::to_string(spec.kind)) + "/seed " + std::to_string(tc.seed);
  return eval::train_model(spec, s.train, s.val, tc, [&](const learn::EpochRecord& r) {
    if (r.val_loss) {
      spdlog::info("{} epoch {}: train {} val {}", tag, r.epoch, r.train_loss ? csv::format_number(*r.train_loss) : "-",
                   csv::format_number(*r.val_loss));
    }
  });
}

int cmd_train(const json& cfg) {
  const fs::path out = cfg.at("out").get<std::string>();
  const eval::ModelSpec spec = model_spec(cfg);
  const learn::TrainConfig tc = train_config(cfg);
  const auto encoding = encoding_of(cfg);
  const Splits s = load_train_val(dataset_dir(cfg));
  prepare_out_dir(out, cfg.at("force").get<bool>());
  log_config("train", cfg, out);
  const eval::TrainedModel m = train_logged(spec, s, tc);
  learn::save_checkpoint(m.checkpoint, out / "model.ckpt", encoding);
  write_curve(m.curve, out / "training_curve.csv");
  spdlog::info("best validation MSE {} at epoch {}", csv::format_number(m.checkpoint.val_loss), m.checkpoint.best_epoch);
  return kOk;
}

// ---- localize -------------------------------------------------------------

int cmd_localize(const json& cfg) {
  const fs::path out = cfg.at("out").get<std::string>();
  const fs::path dataset = dataset_dir(cfg);
  const json& l = cfg.at("localize");
  const std::string id = l.at("episode").get<std::string>();
  const std::string method = l.at("method").get<std::string>();
  if (id.empty()) fail(ErrorCode::Config, "no episode given (--episode)");
  const ekf::FilterConfig filter = filter_config(cfg);

  std::string scenario;
  if (fs::exists(dataset / "manifest.json")) {
    for (const auto& e : data::load_manifest(dataset / "manifest.json").episodes) {
      if (e.id == id) scenario = e.scenario;
    }
  }

  std::shared_ptr<learn::Checkpoint> ckpt;
  FeatureSchema schema;
  if (method == "learned-ekf") {
    const std::string path = l.at("checkpoint").get<std::string>();
    if (path.empty()) fail(ErrorCode::Config, "learned-ekf needs --checkpoint");
    ckpt = std::make_shared<learn::Checkpoint>(learn::load_checkpoint(path));
    schema = ckpt->standardizer.input_schema;
  } else if (method != "crawler" && method != "kinematic-ekf") {
    fail(ErrorCode::Config, "unknown method '" + method + "'");
  }
  const data::PreparedEpisode ep = data::prepare(data::ingest(dataset, id, schema), schema, scenario);
  prepare_out_dir(out, cfg.at("force").get<bool>());
  log_config("localize", cfg, out);

  eval::Localization loc;
  if (method == "crawler") {
    loc = eval::crawler_odometry(ep);
  } else if (method == "kinematic-ekf") {
    loc = eval::kinematics_ekf(ep, filter);
  } else {
    loc = eval::learned_ekf(ep, *ckpt, filter);
  }
  eval::write_trajectory_csv(loc.trajectory, out / "trajectory.csv");

  json summary = {{"episode", id}, {"scenario", scenario}, {"method", method}, {"frames", ep.size()},
                  {"seed", seed_of(cfg)}};
  if (ep.truth) {
    summary["ade"] = eval::ade(loc.trajectory, *ep.truth);
    summary["ade_planar"] = eval::ade(loc.trajectory, *ep.truth, true);
    if (!loc.velocity.empty() && loc.velocity.size() == ep.truth_velocity.size()) {
      const Vec3 r = eval::velocity_rmse(loc.velocity, ep.truth_velocity);
      summary["velocity_rmse"] = {r.x(), r.y(), r.z()};
    }
  }
  write_file(out / "summary.json", summary.dump(2) + "\n");
  return kOk;
}

// ---- evaluate -------------------------------------------------------------

int cmd_evaluate(const json& cfg) {
  const fs::path out = cfg.at("out").get<std::string>();
  const fs::path dataset = dataset_dir(cfg);
  const json& e = cfg.at("evaluate");
  const ekf::FilterConfig filter = filter_config(cfg);
  const int trials = e.at("trials").get<int>();
  if (trials < 1) fail(ErrorCode::Config, "trials must be at least 1");
  const auto method_names = e.at("methods").get<std::vector<std::string>>();
  for (const auto& m : method_names) {
    if (m != "crawler" && m != "kinematic-ekf" && m != "learned-ekf") fail(ErrorCode::Config, "unknown method '" + m + "'");
  }
  const bool want_learned =
      std::find(method_names.begin(), method_names.end(), "learned-ekf") != method_names.end();
  const bool ablate = e.at("ablate").get<bool>();

  const data::Manifest manifest = data::load_manifest(dataset / "manifest.json");
  const auto test = data::load_episodes(dataset, manifest.select(data::parse_split(e.at("split").get<std::string>())));
  prepare_out_dir(out, cfg.at("force").get<bool>());
  log_config("evaluate", cfg, out);

  std::vector<eval::Method> methods;
  for (const auto& m : method_names) {
    if (m == "crawler") methods.push_back(eval::crawler_method());
    if (m == "kinematic-ekf") methods.push_back(eval::kinematics_ekf_method(filter));
  }

  std::optional<Splits> splits;
  auto need_splits = [&]() -> const Splits& {
    if (!splits) splits = load_train_val(dataset);
    return *splits;
  };

  if (want_learned) {
    const auto paths = e.at("checkpoints").get<std::vector<std::string>>();
    if (!paths.empty()) {
      std::map<std::string, int> counter;
      for (const auto& p : paths) {
        auto ckpt = std::make_shared<const learn::Checkpoint>(learn::load_checkpoint(p));
        const std::string family = std::string(learn::to_string(ckpt->kind)) + "-ekf";
        methods.push_back(eval::learned_ekf_method(ckpt, family, counter[family]++, filter));
      }
    } else {
      const auto kinds = e.at("models").get<std::vector<std::string>>();
      const learn::TrainConfig base = train_config(cfg);
      const Splits& s = need_splits();
      fs::create_directories(out / "models");
      for (const auto& k : kinds) {
        const eval::ModelSpec spec = model_spec(cfg, learn::parse_model_kind(k));
        std::vector<std::shared_ptr<const learn::Checkpoint>> ckpts(static_cast<std::size_t>(trials));
        parallel_for(ckpts.size(), [&](std::size_t t) {
          learn::TrainConfig tc = base;
          tc.seed = base.seed + t;
          eval::TrainedModel m = train_logged(spec, s, tc);
          const std::string stem = k + "_trial" + std::to_string(t);
          learn::save_checkpoint(m.checkpoint, out / "models" / (stem + ".ckpt"), encoding_of(cfg));
          write_curve(m.curve, out / "models" / (stem + "_curve.csv"));
          ckpts[t] = std::make_shared<const learn::Checkpoint>(std::move(m.checkpoint));
        });
        for (std::size_t t = 0; t < ckpts.size(); ++t) {
          methods.push_back(eval::learned_ekf_method(ckpts[t], k + "-ekf", static_cast<int>(t), filter));
        }
      }
    }
  }
  if (methods.empty()) fail(ErrorCode::Config, "no methods to evaluate");

  const eval::MetricReport report = eval::compare(methods, test);
  eval::write_report_json(report, out / "report.json");
  eval::write_ade_table_csv(report, out / "ade_table.csv");
  eval::write_velocity_table_csv(report, out / "velocity_rmse.csv");
  eval::write_timing_json(report, out / "timing.json");
  eval::write_error_over_time(report, out / "errors");
  fs::create_directories(out / "trajectories");
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    std::string name = c.method;
    std::replace(name.begin(), name.end(), '#', '_');
    eval::write_trajectory_csv(c.trajectory, out / "trajectories" / ("ep" + c.episode + "_" + name + ".csv"));
  }
  for (const auto& row : report.ade_table()) {
    if (row.scenario == "average") {
      spdlog::info("{}: mean ADE {} m (std {}, {} trial(s))", row.family, csv::format_number(row.mean),
                   csv::format_number(row.stddev), row.trials);
    }
  }

  if (ablate) {
    const Splits& s = need_splits();
    const auto rows = eval::ablate_feature_groups(model_spec(cfg), s.train, s.val, test, train_config(cfg), trials, filter);
    eval::write_ablation_csv(rows, out / "ablation.csv");
  }

  const std::size_t ok = report.succeeded();
  spdlog::info("{} of {} cells succeeded", ok, report.cells.size());
  return ok > 0 ? kOk : kFailure;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InsufficientEpisodes:
      return kConfigError;
    case ErrorCode::Io:
    case ErrorCode::NonMonotoneTime:
    case ErrorCode::RateMismatch:
    case ErrorCode::EmptyChannel:
    case ErrorCode::LengthMismatch:
      return kIoError;
    case ErrorCode::NonFiniteLoss:
      return kNonFiniteLoss;
    case ErrorCode::SchemaMismatch:
    case ErrorCode::MissingColumn:
    case ErrorCode::GroundTruthLeakage:
      return kSchemaMismatch;
    default:
      return kFailure;
  }
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("trackpose");
  if (!logger) logger = spdlog::stderr_color_mt("trackpose");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, char** argv) {
  CLI::App app{"Slip-aware self-localization for tracked vehicles"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, log_level = "info";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, dataset, model, method, groups, episode;
  std::optional<int> trials, epochs;
  std::vector<std::string> checkpoints;
  bool force = false, ablate = false;

  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "run seed");
    sub->add_option("--out", out, "output directory");
    sub->add_flag("--force", force, "write into a non-empty output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_common(simulate);
  auto* train = app.add_subcommand("train", "train a velocity model");
  add_common(train);
  auto* localize = app.add_subcommand("localize", "run one localizer on one episode");
  add_common(localize);
  auto* evaluate = app.add_subcommand("evaluate", "compare localizers on held-out episodes");
  add_common(evaluate);
  for (auto* sub : {train, localize, evaluate}) sub->add_option("--dataset", dataset, "dataset directory");
  for (auto* sub : {train, evaluate}) {
    sub->add_option("--model", model, "mlp or lstm")->check(CLI::IsMember({"mlp", "lstm"}));
    sub->add_option("--groups", groups, "ic, ic+ve or ic+ve+bu")->check(CLI::IsMember({"ic", "ic+ve", "ic+ve+bu"}));
    sub->add_option("--epochs", epochs, "training epochs");
  }
  localize->add_option("--episode", episode, "episode id");
  localize->add_option("--method", method, "crawler, kinematic-ekf or learned-ekf")
      ->check(CLI::IsMember({"crawler", "kinematic-ekf", "learned-ekf"}));
  localize->add_option("--checkpoint", checkpoints, "trained model")->expected(1);
  evaluate->add_option("--checkpoint", checkpoints, "trained model(s); trains fresh ones when absent");
  evaluate->add_option("--trials", trials, "learned models per kind");
  evaluate->add_flag("--ablate", ablate, "also run the feature-group ablation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  setup_logging(log_level);

  try {
    json cfg = default_config();
    if (!config_path.empty()) merge(cfg, json::parse(read_file(config_path)));
    if (seed) cfg["seed"] = *seed;
    if (out) cfg["out"] = *out;
    if (force) cfg["force"] = true;
    if (dataset) cfg["dataset"] = *dataset;
    if (groups) cfg["model"]["groups"] = *groups;
    if (epochs) cfg["train"]["epochs"] = *epochs;
    if (model) {
      cfg["model"]["kind"] = *model;
      cfg["evaluate"]["models"] = json::array({*model});
    }
    if (episode) cfg["localize"]["episode"] = *episode;
    if (method) cfg["localize"]["method"] = *method;
    if (trials) cfg["evaluate"]["trials"] = *trials;
    if (ablate) cfg["evaluate"]["ablate"] = true;
    if (!checkpoints.empty()) {
      cfg["localize"]["checkpoint"] = checkpoints.front();
      cfg["evaluate"]["checkpoints"] = checkpoints;
    }

    if (simulate->parsed()) return cmd_simulate(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (localize->parsed()) return cmd_localize(cfg);
    return cmd_evaluate(cfg);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    spdlog::error("Config: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}

}  // namespace trackpose::cli
