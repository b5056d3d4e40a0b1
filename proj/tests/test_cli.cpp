#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "json.hpp"
#include "support.hpp"
#include "trackpose/checkpoint.hpp"
#include "trackpose/csv.hpp"
#include "trackpose/data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trackpose;
using trackpose::testing::slurp;
using trackpose::testing::spit;
using trackpose::testing::TempDir;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "trackpose");
  args.push_back("--log-level");
  args.push_back("warn");
  return cli::run(args);
}

std::map<std::string, std::string> directory_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

const char* kTinyModels = R"({
  "model": {"mlp": {"hidden": [8]}, "lstm": {"layers": 1, "hidden": 4, "window": 3}},
  "train": {"epochs": 1, "batch_size": 256, "sample_stride": 20}
})";

}  // namespace

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = std::make_unique<TempDir>("cli");
    spit(*root_ / "small.json",
         R"({"simulate": {"scenarios": ["straight", "turn"], "episodes_per_scenario": 3, "duration_s": 30}})");
    spit(*root_ / "tiny.json", kTinyModels);
    ASSERT_EQ(run({"simulate", "--config", path("small.json"), "--seed", "4", "--out", path("ds")}), cli::kOk);
  }
  static void TearDownTestSuite() { root_.reset(); }

  static std::string path(const std::string& name) { return (*root_ / name).string(); }

  static std::unique_ptr<TempDir> root_;
};

std::unique_ptr<TempDir> CliTest::root_;

TEST_F(CliTest, SimulateWritesEpisodesAndManifest) {
  const data::Manifest m = data::load_manifest(path("ds") + "/manifest.json");
  EXPECT_EQ(m.episodes.size(), 6u);
  EXPECT_EQ(m.seed, 4u);
  EXPECT_TRUE(fs::exists(path("ds") + "/ep000_100hz.csv"));
  EXPECT_TRUE(fs::exists(path("ds") + "/scenarios.json"));
  EXPECT_TRUE(fs::exists(path("ds") + "/config.json"));
}

TEST_F(CliTest, DefaultSimulationCoversEveryScenario) {
  TempDir out("cli_full");
  spit(out / "short.json", R"({"simulate": {"duration_s": 30}})");
  ASSERT_EQ(run({"simulate", "--config", (out / "short.json").string(), "--out", (out / "ds").string()}), cli::kOk);
  const data::Manifest m = data::load_manifest(out / "ds" / "manifest.json");
  EXPECT_EQ(m.episodes.size(), 30u);
  EXPECT_EQ(m.scenarios().size(), 10u);
  EXPECT_EQ(m.select(data::Split::Test).size(), 10u);
}

TEST_F(CliTest, NonEmptyOutputNeedsForce) {
  EXPECT_EQ(run({"simulate", "--config", path("small.json"), "--seed", "4", "--out", path("ds")}), cli::kIoError);
  TempDir again("cli_force");
  const std::string out = (again / "ds").string();
  ASSERT_EQ(run({"simulate", "--config", path("small.json"), "--out", out}), cli::kOk);
  EXPECT_EQ(run({"simulate", "--config", path("small.json"), "--out", out, "--force"}), cli::kOk);
}

TEST_F(CliTest, FixedSeedReproducesTheDataset) {
  TempDir again("cli_seed");
  ASSERT_EQ(run({"simulate", "--config", path("small.json"), "--seed", "4", "--out", (again / "ds").string()}),
            cli::kOk);
  auto a = directory_contents(path("ds")), b = directory_contents(again / "ds");
  a.erase("config.json");  // records the output path
  b.erase("config.json");
  EXPECT_EQ(a, b);
}

TEST_F(CliTest, TrainSelectsArchitectureAndGroups) {
  TempDir out("cli_train");
  ASSERT_EQ(run({"train", "--config", path("tiny.json"), "--dataset", path("ds"), "--out", (out / "m").string(),
                 "--model", "mlp", "--groups", "ic+ve"}),
            cli::kOk);
  const learn::Checkpoint mlp = learn::load_checkpoint(out / "m" / "model.ckpt");
  EXPECT_EQ(mlp.kind, learn::ModelKind::Mlp);
  EXPECT_EQ(mlp.groups, GroupSet::IC_Ve);
  for (const auto& c : mlp.standardizer.input_schema.channels()) EXPECT_NE(c.group, FeatureGroup::Bu) << c.name;
  const std::string curve = slurp(out / "m" / "training_curve.csv");
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3);  // header, epoch 0, epoch 1

  ASSERT_EQ(run({"train", "--config", path("tiny.json"), "--dataset", path("ds"), "--out", (out / "l").string(),
                 "--model", "lstm"}),
            cli::kOk);
  const learn::Checkpoint lstm = learn::load_checkpoint(out / "l" / "model.ckpt");
  EXPECT_EQ(lstm.kind, learn::ModelKind::Lstm);
  EXPECT_EQ(lstm.window(), 3u);
  EXPECT_EQ(lstm.groups, GroupSet::IC_Ve_Bu);
}

TEST_F(CliTest, ZeroEpochsKeepsInitialWeights) {
  TempDir out("cli_zero");
  ASSERT_EQ(run({"train", "--config", path("tiny.json"), "--dataset", path("ds"), "--out", (out / "m").string(),
                 "--model", "mlp", "--epochs", "0", "--seed", "9"}),
            cli::kOk);
  const learn::Checkpoint c = learn::load_checkpoint(out / "m" / "model.ckpt");
  EXPECT_EQ(c.best_epoch, 0);
  const auto fresh = learn::make_model(c.kind, c.model->input_width(), c.mlp, c.lstm, 9);
  for (std::size_t i = 0; i < fresh->parameters().size(); ++i) {
    EXPECT_EQ(c.model->parameters()[i].value, fresh->parameters()[i].value);
  }
}

TEST_F(CliTest, LocalizeRunsEachMethodDeterministically) {
  TempDir out("cli_loc");
  ASSERT_EQ(run({"train", "--config", path("tiny.json"), "--dataset", path("ds"), "--out", (out / "m").string(),
                 "--model", "mlp"}),
            cli::kOk);
  const std::string ckpt = (out / "m" / "model.ckpt").string();
  for (const std::string method : {"crawler", "kinematic-ekf", "learned-ekf"}) {
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string dir = (out / (method + std::to_string(rep))).string();
      ASSERT_EQ(run({"localize", "--dataset", path("ds"), "--episode", "001", "--method", method, "--checkpoint", ckpt,
                     "--out", dir}),
                cli::kOk)
          << method;
      const json summary = json::parse(slurp(dir + "/summary.json"));
      EXPECT_EQ(summary["method"], method);
      EXPECT_TRUE(summary.contains("ade"));
      outputs.push_back(slurp(dir + "/trajectory.csv"));
    }
    EXPECT_EQ(outputs[0], outputs[1]) << method;
  }
}

TEST_F(CliTest, LocalizeWithoutTruthHasNoScore) {
  TempDir out("cli_notruth");
  fs::copy(path("ds"), out / "ds");
  fs::remove(out / "ds" / "ep002_truth.csv");
  ASSERT_EQ(run({"localize", "--dataset", (out / "ds").string(), "--episode", "002", "--method", "kinematic-ekf",
                 "--out", (out / "r").string()}),
            cli::kOk);
  const json summary = json::parse(slurp(out / "r" / "summary.json"));
  EXPECT_FALSE(summary.contains("ade"));
  EXPECT_EQ(csv::read(out / "r" / "trajectory.csv").rows(), 3000u);
}

TEST_F(CliTest, EvaluateReportsMeanAndStdAcrossTrials) {
  TempDir out("cli_eval");
  ASSERT_EQ(run({"evaluate", "--config", path("tiny.json"), "--dataset", path("ds"), "--out", (out / "e").string(),
                 "--trials", "2"}),
            cli::kOk);
  const std::string ade = slurp(out / "e" / "ade_table.csv");
  const std::string header = ade.substr(0, ade.find('\n'));
  EXPECT_NE(header.find("lstm-ekf_mean,lstm-ekf_std"), std::string::npos) << header;
  EXPECT_NE(header.find("mlp-ekf_mean,mlp-ekf_std"), std::string::npos) << header;
  EXPECT_NE(ade.find("\naverage,"), std::string::npos);
  const json report = json::parse(slurp(out / "e" / "report.json"));
  EXPECT_EQ(report["cells"].size(), 2u * (2 + 2 * 2));
  EXPECT_TRUE(fs::exists(out / "e" / "models" / "lstm_trial1.ckpt"));
  EXPECT_TRUE(fs::exists(out / "e" / "timing.json"));
  EXPECT_FALSE(fs::is_empty(out / "e" / "errors"));
}

TEST_F(CliTest, EvaluateAblation) {
  TempDir out("cli_ablate");
  json cfg = json::parse(kTinyModels);
  cfg["evaluate"]["methods"] = {"crawler"};
  spit(out / "c.json", cfg.dump());
  ASSERT_EQ(run({"evaluate", "--config", (out / "c.json").string(), "--dataset", path("ds"), "--out",
                 (out / "e").string(), "--trials", "1", "--ablate"}),
            cli::kOk);
  const std::string text = slurp(out / "e" / "ablation.csv");
  EXPECT_EQ(text.rfind("groups,features,scenario,ade_mean,ade_std,trials\n", 0), 0u);
  for (const char* g : {"\nic,", "\nic+ve,", "\nic+ve+bu,"}) EXPECT_NE(text.find(g), std::string::npos) << g;
}

TEST_F(CliTest, EvaluateSingleMethodWithCheckpoint) {
  TempDir out("cli_single");
  spit(out / "c.json", R"({"evaluate": {"methods": ["kinematic-ekf"]}})");
  ASSERT_EQ(run({"evaluate", "--config", (out / "c.json").string(), "--dataset", path("ds"), "--out",
                 (out / "e").string()}),
            cli::kOk);
  const json report = json::parse(slurp(out / "e" / "report.json"));
  EXPECT_EQ(report["cells"].size(), 2u);
  EXPECT_FALSE(fs::exists(out / "e" / "models"));
}

TEST_F(CliTest, EvaluateIsByteDeterministic) {
  TempDir out("cli_det");
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run({"evaluate", "--config", path("tiny.json"), "--dataset", path("ds"), "--out", (out / name).string(),
                   "--trials", "1", "--seed", "3"}),
              cli::kOk);
  }
  for (const char* f : {"report.json", "ade_table.csv", "velocity_rmse.csv", "models/mlp_trial0.ckpt",
                        "models/lstm_trial0.ckpt", "trajectories/ep001_lstm-ekf_0.csv"}) {
    EXPECT_EQ(slurp(out / "a" / f), slurp(out / "b" / f)) << f;
  }
}

TEST_F(CliTest, ExitCodes) {
  TempDir out("cli_codes");
  EXPECT_EQ(run({"train", "--out", (out / "x").string()}), cli::kConfigError);  // no dataset
  EXPECT_EQ(run({"train", "--dataset", (out / "nowhere").string(), "--out", (out / "y").string()}), cli::kIoError);
  spit(out / "bad.json", "{ not json");
  EXPECT_EQ(run({"simulate", "--config", (out / "bad.json").string(), "--out", (out / "z").string()}),
            cli::kConfigError);
  spit(out / "neg.json", R"({"train": {"epochs": -1}})");
  EXPECT_EQ(run({"train", "--config", (out / "neg.json").string(), "--dataset", path("ds"), "--out",
                 (out / "w").string()}),
            cli::kConfigError);
  EXPECT_EQ(run({"localize", "--dataset", path("ds"), "--episode", "001", "--method", "learned-ekf", "--out",
                 (out / "v").string()}),
            cli::kConfigError);  // no checkpoint
  EXPECT_NE(run({"frobnicate"}), cli::kOk);
}

TEST_F(CliTest, SchemaMismatchExitCode) {
  TempDir out("cli_schema");
  ASSERT_EQ(run({"train", "--config", path("tiny.json"), "--dataset", path("ds"), "--out", (out / "m").string(),
                 "--model", "mlp"}),
            cli::kOk);
  fs::copy(path("ds"), out / "ds");
  csv::Table slow = csv::read(out / "ds" / "ep001_10hz.csv");
  slow.columns[slow.column("traction_force")] = "renamed";
  csv::write(out / "ds" / "ep001_10hz.csv", slow);
  EXPECT_EQ(run({"localize", "--dataset", (out / "ds").string(), "--episode", "001", "--method", "learned-ekf",
                 "--checkpoint", (out / "m" / "model.ckpt").string(), "--out", (out / "r").string()}),
            cli::kSchemaMismatch);
}
