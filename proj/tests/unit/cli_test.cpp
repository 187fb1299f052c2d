#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "test_support.hpp"
#include "uda/data.hpp"
#include "uda/text_io.hpp"

namespace uda {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "uda");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void write_small_config(const fs::path& path, std::size_t epochs) {
  std::ofstream(path) << R"({
  "schema_version": 1,
  "train": {"lr": 0.003, "epochs": )"
                      << epochs << R"(, "seed": 0, "feature_widths": [16, 8],
            "discriminator_hidden": 16},
  "source": {"synthetic": {"n": 200, "noise": 0.1, "seed": 1}},
  "target": {"synthetic": {"n": 200, "noise": 0.1, "seed": 2, "rotation_degrees": 20}},
  "normalize": true
})";
}

// One source classifier shared by the eval and embed tests.
class TrainedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = testing::scratch_dir("cli-trained");
    std::ofstream(dir_ / "run.json") << R"({
  "schema_version": 1,
  "train": {"lr": 0.01, "epochs": 20, "seed": 0, "feature_widths": [16, 8],
            "discriminator_hidden": 16, "beta": 0, "gamma": 0, "delta": 0, "eta": 0,
            "lambda_max": 0},
  "source": {"synthetic": {"n": 200, "noise": 0.1, "seed": 1}},
  "target": {"synthetic": {"n": 200, "noise": 0.1, "seed": 2, "rotation_degrees": 20}},
  "normalize": true
})";
    ASSERT_EQ(run_cli({"train", "--config", (dir_ / "run.json").string(), "--out",
                       (dir_ / "out").string()})
                  .code,
              0);
    SyntheticSpec spec;
    spec.n = 200;
    spec.noise = 0.1;
    spec.seed = 1;
    save_table(generate(spec), dir_ / "source.csv");
  }
  static fs::path checkpoint() { return dir_ / "out" / "checkpoint.txt"; }
  static fs::path dir_;
};
fs::path TrainedRun::dir_;

TEST(CliTrain, OneEpochWritesArtifacts) {
  const auto dir = testing::scratch_dir("cli-train");
  write_small_config(dir / "run.json", 1);
  const auto start = std::chrono::steady_clock::now();
  const Outcome r = run_cli({"train", "--config", (dir / "run.json").string(), "--out",
                             (dir / "out").string()});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(seconds, 60.0);
  EXPECT_EQ(lines_of(slurp(dir / "out" / "metrics.jsonl")).size(), 1u);
  EXPECT_TRUE(fs::exists(dir / "out" / "checkpoint.txt"));
  const std::string manifest = slurp(dir / "out" / "manifest.json");
  EXPECT_NE(manifest.find("\"datasets\""), std::string::npos);
  EXPECT_NE(manifest.find("\"lr\""), std::string::npos);
  const std::string record = slurp(dir / "out" / "metrics.jsonl");
  for (const char* key : {"\"clc\"", "\"dis\"", "\"mmd\"", "\"plmmd\"", "\"mcc\"", "\"im\"",
                          "\"total\"", "\"lambda\"", "\"target_accuracy\""}) {
    EXPECT_NE(record.find(key), std::string::npos) << key;
  }
}

TEST(CliTrain, RerunIsByteIdentical) {
  const auto dir = testing::scratch_dir("cli-rerun");
  write_small_config(dir / "run.json", 2);
  for (const char* out : {"a", "b"}) {
    ASSERT_EQ(run_cli({"train", "--config", (dir / "run.json").string(), "--out",
                       (dir / out).string()})
                  .code,
              0);
  }
  EXPECT_EQ(slurp(dir / "a" / "metrics.jsonl"), slurp(dir / "b" / "metrics.jsonl"));
  EXPECT_EQ(slurp(dir / "a" / "checkpoint.txt"), slurp(dir / "b" / "checkpoint.txt"));
}

TEST(CliTrain, MissingConfigNamesPath) {
  const Outcome r = run_cli({"train", "--config", "no/such/config.json"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no/such/config.json"), std::string::npos);
}

TEST(CliTrain, InvalidConfigFieldIsInputError) {
  const auto dir = testing::scratch_dir("cli-bad-config");
  std::ofstream(dir / "run.json") << R"({"schema_version": 1, "train": {"lr": -1},
    "source": {"synthetic": {"n": 10}}, "target": {"synthetic": {"n": 10}}})";
  const Outcome r = run_cli({"train", "--config", (dir / "run.json").string(), "--out",
                             (dir / "out").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lr"), std::string::npos) << r.err;
}

TEST_F(TrainedRun, EvalOnSourcePrintsAccuracy) {
  const Outcome r = run_cli({"eval", "--checkpoint", checkpoint().string(), "--data",
                             (dir_ / "source.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_FALSE(lines.empty());
  const std::string& last = lines.back();
  ASSERT_EQ(last.size(), 6u);
  EXPECT_EQ(last[1], '.');
  EXPECT_GE(std::stod(last), 0.95);
}

TEST_F(TrainedRun, EvalWithoutLabelsIsShapeMismatch) {
  DomainDataset ds = load_table(dir_ / "source.csv", {{"x0", "x1"}, std::nullopt, ',', std::nullopt});
  save_table(ds, dir_ / "unlabeled.csv");
  const Outcome r = run_cli({"eval", "--checkpoint", checkpoint().string(), "--data",
                             (dir_ / "unlabeled.csv").string()});
  EXPECT_EQ(r.code, 4);
}

TEST_F(TrainedRun, EvalWrongDimensionIsShapeMismatch) {
  std::ofstream(dir_ / "wide.csv") << "a,b,c,label\n1,2,3,0\n";
  const Outcome r = run_cli({"eval", "--checkpoint", checkpoint().string(), "--data",
                             (dir_ / "wide.csv").string()});
  EXPECT_EQ(r.code, 4);
}

TEST_F(TrainedRun, EmbedWritesOneRowPerPoint) {
  const Outcome r = run_cli({"embed", "--checkpoint", checkpoint().string(), "--data",
                             (dir_ / "source.csv").string(), "--out",
                             (dir_ / "embed.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(slurp(dir_ / "embed.csv"));
  ASSERT_EQ(lines.size(), 201u);
  EXPECT_EQ(lines[0], "x,y,label");
}

TEST_F(TrainedRun, EmbedNeedsThreeRows) {
  std::ofstream(dir_ / "two.csv") << "x0,x1\n0.1,0.2\n0.3,0.4\n";
  const Outcome r = run_cli({"embed", "--checkpoint", checkpoint().string(), "--data",
                             (dir_ / "two.csv").string(), "--out", (dir_ / "e2.csv").string()});
  EXPECT_EQ(r.code, 2);
}

struct LossFiles {
  fs::path source_features;
  fs::path source_labels;
  fs::path target_features;
  fs::path target_logits;
};

void write_matrix(const fs::path& path, const Tensor& m, const std::string& prefix = "c") {
  std::ofstream out(path);
  for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << prefix << j;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_real(m.at(i, j));
    out << '\n';
  }
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  out << "label\n";
  for (int l : labels) out << l << '\n';
}

std::vector<std::string> loss_args(const LossFiles& f) {
  return {"losses",
          "--source-features", f.source_features.string(),
          "--source-labels", f.source_labels.string(),
          "--target-features", f.target_features.string(),
          "--target-logits", f.target_logits.string()};
}

double value_after(const std::string& out, const std::string& key) {
  for (const auto& line : lines_of(out)) {
    if (line.rfind(key + " ", 0) == 0) return std::stod(line.substr(key.size() + 1));
  }
  ADD_FAILURE() << "missing " << key << " in\n" << out;
  return NAN;
}

TEST(CliLosses, IdenticalFeaturesAndUniformLogits) {
  const auto dir = testing::scratch_dir("cli-losses");
  Rng rng(3);
  const Tensor x = testing::random_matrix(rng, 10, 3);
  LossFiles f{dir / "xs.csv", dir / "ys.csv", dir / "xt.csv", dir / "zt.csv"};
  write_matrix(f.source_features, x);
  write_matrix(f.target_features, x);
  write_labels(f.source_labels, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
  write_matrix(f.target_logits, Tensor::zeros({10, 2}));
  auto args = loss_args(f);
  args.push_back("--oracle");
  const Outcome r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(std::abs(value_after(r.out, "L_MMD")), 1e-12);
  EXPECT_NEAR(value_after(r.out, "L_MCC"), 0.5, 1e-12);
  EXPECT_NEAR(value_after(r.out, "L_IM"), 0.0, 1e-12);
  EXPECT_LT(value_after(r.out, "oracle_max_abs_deviation"), 1e-9);
}

TEST(CliLosses, DiscriminatorOutputsAndSettings) {
  const auto dir = testing::scratch_dir("cli-losses-disc");
  Rng rng(4);
  LossFiles f{dir / "xs.csv", dir / "ys.csv", dir / "xt.csv", dir / "zt.csv"};
  write_matrix(f.source_features, testing::random_matrix(rng, 7, 2));
  write_matrix(f.target_features, testing::random_matrix(rng, 5, 2));
  write_labels(f.source_labels, {0, 1, 2, 0, 1, 2, 0});
  write_matrix(f.target_logits, testing::random_matrix(rng, 5, 3));
  write_matrix(dir / "ds.csv", Tensor::matrix(7, 1, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}));
  write_matrix(dir / "dt.csv", Tensor::matrix(5, 1, {0.5, 0.5, 0.5, 0.5, 0.5}));
  std::ofstream(dir / "settings.json") << R"({"temperature": 1.0, "kernel_count": 3})";
  auto args = loss_args(f);
  for (const std::string& a : {std::string("--disc-source"), (dir / "ds.csv").string(),
                               std::string("--disc-target"), (dir / "dt.csv").string(),
                               std::string("--config"), (dir / "settings.json").string(),
                               std::string("--oracle")}) {
    args.push_back(a);
  }
  const Outcome r = run_cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(value_after(r.out, "L_dis"), 2 * std::log(2.0), 1e-12);

  auto missing = loss_args(f);
  missing.push_back("--disc-source");
  missing.push_back((dir / "ds.csv").string());
  EXPECT_EQ(run_cli(missing).code, 2);
}

TEST(CliGradcheck, SixRowsPass) {
  const Outcome r = run_cli({"gradcheck", "--seeds", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 6u);
  for (const auto& line : lines) EXPECT_NE(line.find(" ok"), std::string::npos) << line;
}

TEST(CliGradcheck, CorruptedLossFailsAndIsNamed) {
  const Outcome r = run_cli({"gradcheck", "--seeds", "1", "--corrupt", "plmmd"});
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("plmmd"), std::string::npos);
  EXPECT_EQ(run_cli({"gradcheck", "--corrupt", "nonsense"}).code, 2);
}

TEST(CliGenData, RoundTripAndSeeds) {
  const auto dir = testing::scratch_dir("cli-gen");
  std::ofstream(dir / "a.json") << R"({"generator": "two_moons", "n": 37, "noise": 0.1, "seed": 1})";
  std::ofstream(dir / "b.json") << R"({"generator": "two_moons", "n": 37, "noise": 0.1, "seed": 2})";
  ASSERT_EQ(run_cli({"gen-data", "--spec", (dir / "a.json").string(), "--out",
                     (dir / "a.csv").string()})
                .code,
            0);
  ASSERT_EQ(run_cli({"gen-data", "--spec", (dir / "b.json").string(), "--out",
                     (dir / "b.csv").string()})
                .code,
            0);
  TableSchema schema;
  schema.label_column = "label";
  const DomainDataset a = load_table(dir / "a.csv", schema);
  EXPECT_EQ(a.size(), 37u);
  EXPECT_EQ(a.dim(), 2u);
  SyntheticSpec spec;
  spec.n = 37;
  spec.noise = 0.1;
  spec.seed = 1;
  EXPECT_EQ(testing::values_of(a.features), testing::values_of(generate(spec).features));
  EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(CliGenData, InvalidSpecIsInputError) {
  const auto dir = testing::scratch_dir("cli-gen-bad");
  std::ofstream(dir / "bad.json") << R"({"generator": "two_moons", "n": 10, "noise": -1})";
  EXPECT_EQ(run_cli({"gen-data", "--spec", (dir / "bad.json").string(), "--out",
                     (dir / "bad.csv").string()})
                .code,
            2);
  EXPECT_EQ(run_cli({"gen-data", "--spec", (dir / "absent.json").string(), "--out",
                     (dir / "x.csv").string()})
                .code,
            2);
}

TEST(Cli, UnknownSubcommandAndHelp) {
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

}  // namespace
}  // namespace uda
