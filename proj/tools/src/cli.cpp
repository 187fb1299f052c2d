#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uda/embedding.hpp"
#include "uda/errors.hpp"
#include "uda/gradcheck_suite.hpp"
#include "uda/loss_report.hpp"
#include "uda/models.hpp"
#include "uda/naive_losses.hpp"
#include "uda/run_config.hpp"
#include "uda/text_io.hpp"
#include "uda/trainer.hpp"

namespace uda::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kOracleTolerance = 1e-9;

std::string read_header(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }
  std::string line;
  std::getline(in, line);
  return line;
}

bool has_column(const fs::path& path, const std::string& name, char delimiter) {
  std::stringstream header(read_header(path));
  std::string cell;
  while (std::getline(header, cell, delimiter)) {
    if (trim(cell) == name) return true;
  }
  return false;
}

Tensor load_matrix(const fs::path& path) { return load_table(path, {}).features; }

std::vector<int> load_labels(const fs::path& path, const std::string& column) {
  TableSchema schema;
  schema.label_column = column;
  return *load_table(path, schema).labels;
}

naive::Matrix to_rows(const Tensor& t) {
  naive::Matrix rows(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) rows[i][j] = t.at(i, j);
  }
  return rows;
}

std::vector<double> column(const Tensor& t) {
  if (t.cols() != 1) {
    throw ShapeError("expected a single-column file, found " + std::to_string(t.cols()) +
                     " columns");
  }
  return {t.values().begin(), t.values().end()};
}

Tensor as_vector(const Tensor& t) { return Tensor::vector(column(t)); }

json metrics_record(const EpochMetrics& m) {
  json losses = {{"clc", m.losses.clc},     {"dis", m.losses.dis},     {"im", m.losses.im},
                 {"mcc", m.losses.mcc},     {"mmd", m.losses.mmd},     {"plmmd", m.losses.plmmd},
                 {"total", m.losses.total}};
  return {{"epoch", m.epoch},
          {"lambda", m.lambda},
          {"losses", losses},
          {"source_accuracy", m.source_accuracy},
          {"target_accuracy", m.target_accuracy ? json(*m.target_accuracy) : json(nullptr)}};
}

json dataset_provenance(const DatasetSource& source) {
  if (const auto* table = std::get_if<TableSource>(&source)) {
    return {{"kind", "table"},
            {"path", table->path.string()},
            {"fnv1a64", file_fingerprint(table->path)}};
  }
  return {{"kind", "synthetic"}, {"spec", to_json(std::get<SyntheticSpec>(source))}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot write '" + path.string() + "'");
  }
  out << text;
}

Checkpoint make_checkpoint(const TrainResult& result, const std::optional<NormStats>& stats) {
  Checkpoint ckpt;
  ckpt.models.emplace_back("feature", result.networks.feature.clone());
  ckpt.models.emplace_back("classifier", result.networks.classifier.clone());
  ckpt.models.emplace_back("discriminator", result.networks.discriminator.clone());
  const auto& map = result.networks.conditioning;
  if (map.mode() == ConditioningMode::randomized_multilinear) {
    const auto rf = map.feature_projection().values();
    const auto rg = map.class_projection().values();
    ckpt.arrays["conditioning.r_f"] = {rf.begin(), rf.end()};
    ckpt.arrays["conditioning.r_g"] = {rg.begin(), rg.end()};
  }
  if (stats) {
    ckpt.arrays["norm.mean"] = stats->mean;
    ckpt.arrays["norm.std"] = stats->std;
  }
  return ckpt;
}

// Loads a dataset for a checkpoint: labels from `label_column` when that
// column exists, normalization from the checkpoint when it was trained on
// normalized data.
DomainDataset load_for_checkpoint(const Checkpoint& ckpt, const fs::path& data,
                                  const std::string& label_column, char delimiter) {
  TableSchema schema;
  schema.delimiter = delimiter;
  if (has_column(data, label_column, delimiter)) {
    schema.label_column = label_column;
  }
  DomainDataset ds = load_table(data, schema, DomainTag::target);
  const auto& feature = ckpt.model("feature");
  if (ds.dim() != feature.spec().input_dim()) {
    throw ShapeError("checkpoint expects " + std::to_string(feature.spec().input_dim()) +
                     " features, '" + data.string() + "' has " + std::to_string(ds.dim()));
  }
  if (ckpt.arrays.count("norm.mean")) {
    NormStats stats{ckpt.arrays.at("norm.mean"), ckpt.arrays.at("norm.std")};
    ds = zscore_normalize(ds, stats).first;
  }
  return ds;
}

int cmd_train(const fs::path& config_path, const fs::path& out_dir, std::ostream& out,
              std::ostream& err) {
  if (!fs::exists(config_path)) {
    err << "error: config file '" << config_path.string() << "' does not exist\n";
    return kInputError;
  }
  const RunConfig config = load_run_config(config_path);
  fs::create_directories(out_dir);

  json manifest = {{"tool", "uda"},
                   {"version", UDA_VERSION},
                   {"config_path", config_path.string()},
                   {"config", to_json(config)},
                   {"datasets",
                    {{"source", dataset_provenance(config.source)},
                     {"target", dataset_provenance(config.target)}}},
                   {"output_dir", out_dir.string()}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

  const PreparedData data = prepare_data(config);
  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  std::ofstream timing(out_dir / "timing.jsonl", std::ios::binary | std::ios::trunc);
  const auto on_epoch = [&](const EpochMetrics& m) {
    metrics << metrics_record(m).dump() << '\n' << std::flush;
    timing << json{{"epoch", m.epoch}, {"wall_seconds", m.wall_seconds}}.dump() << '\n';
    err << "epoch " << m.epoch << " total " << format_real(m.losses.total) << " source_acc "
        << format_real(m.source_accuracy);
    if (m.target_accuracy) err << " target_acc " << format_real(*m.target_accuracy);
    err << '\n';
  };
  const TrainResult result = train(config.train, data.source, data.target, on_epoch);
  save_checkpoint(make_checkpoint(result, data.stats), out_dir / "checkpoint.txt");
  out << "wrote " << (out_dir / "checkpoint.txt").string() << '\n';
  return kOk;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& data, const std::string& label_column,
             char delimiter, std::ostream& out, std::ostream& err) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const DomainDataset ds = load_for_checkpoint(ckpt, data, label_column, delimiter);
  if (!ds.labelled()) {
    err << "error: '" << data.string() << "' has no '" << label_column
        << "' column; evaluation needs labels\n";
    return kShapeMismatch;
  }
  const auto& classifier = ckpt.model("classifier");
  if (ds.size() > 0 && ds.class_count > classifier.spec().output_dim()) {
    err << "error: labels reach class " << ds.class_count - 1 << " but the classifier has "
        << classifier.spec().output_dim() << " outputs\n";
    return kShapeMismatch;
  }
  if (ds.size() == 0) {
    throw ParameterError("'" + data.string() + "' has no rows");
  }
  const double acc = evaluate(ckpt.model("feature"), classifier, ds);
  out << std::fixed << std::setprecision(4) << acc << '\n';
  return kOk;
}

struct LossArgs {
  fs::path source_features;
  fs::path source_labels;
  fs::path target_features;
  fs::path target_logits;
  std::optional<fs::path> disc_source;
  std::optional<fs::path> disc_target;
  std::optional<fs::path> config;
  std::string label_column = "label";
  bool oracle = false;
};

void apply_loss_config(const fs::path& path, LossInputs& inputs) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "temperature" && value.is_number()) {
      inputs.temperature = value.get<double>();
    } else if (key == "kernel_count" && value.is_number_unsigned()) {
      inputs.kernel_count = value.get<std::size_t>();
    } else if (key == "kernel_base" && value.is_number()) {
      inputs.kernel_base = value.get<double>();
    } else {
      throw ParseError(path.string() + ": " + key + ": unknown field or wrong type");
    }
  }
}

int cmd_losses(const LossArgs& args, std::ostream& out, std::ostream& err) {
  if (args.disc_source.has_value() != args.disc_target.has_value()) {
    err << "error: --disc-source and --disc-target must be given together\n";
    return kInputError;
  }
  LossInputs inputs;
  inputs.source_features = load_matrix(args.source_features);
  inputs.source_labels = load_labels(args.source_labels, args.label_column);
  inputs.target_features = load_matrix(args.target_features);
  inputs.target_logits = load_matrix(args.target_logits);
  if (args.disc_source) {
    inputs.disc_source = as_vector(load_matrix(*args.disc_source));
    inputs.disc_target = as_vector(load_matrix(*args.disc_target));
  }
  if (args.config) apply_loss_config(*args.config, inputs);

  const LossValues values = compute_losses(inputs);
  out << "L_MMD " << format_real(values.mmd) << '\n';
  out << "L_PLMMD " << format_real(values.plmmd) << '\n';
  out << "L_MCC " << format_real(values.mcc) << '\n';
  out << "L_IM " << format_real(values.im) << '\n';
  if (values.dis) out << "L_dis " << format_real(*values.dis) << '\n';

  if (!args.oracle) return kOk;
  std::optional<std::vector<double>> ds;
  std::optional<std::vector<double>> dt;
  if (inputs.disc_source) {
    ds = std::vector<double>(inputs.disc_source->values().begin(), inputs.disc_source->values().end());
    dt = std::vector<double>(inputs.disc_target->values().begin(), inputs.disc_target->values().end());
  }
  const auto ref = naive::all_losses(
      to_rows(inputs.source_features), inputs.source_labels, to_rows(inputs.target_features),
      to_rows(inputs.target_logits), ds, dt, inputs.temperature, inputs.kernel_count,
      inputs.kernel_base);
  double deviation = std::max({std::abs(ref.mmd - values.mmd), std::abs(ref.plmmd - values.plmmd),
                               std::abs(ref.mcc - values.mcc), std::abs(ref.im - values.im)});
  if (values.dis) deviation = std::max(deviation, std::abs(*ref.dis - *values.dis));
  out << "oracle_max_abs_deviation " << format_real(deviation) << '\n';
  if (!(deviation < kOracleTolerance)) {
    err << "error: library and oracle differ by " << format_real(deviation) << '\n';
    return kVerificationFailure;
  }
  return kOk;
}

int cmd_gradcheck(std::size_t seeds, const std::optional<std::string>& corrupt, std::ostream& out,
                  std::ostream& err) {
  GradcheckSuiteOptions options;
  options.seeds = seeds;
  options.corrupt = corrupt;
  const auto rows = run_gradcheck_suite(options);
  bool ok = true;
  for (const auto& row : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-6s %.3e %s", row.loss.c_str(), row.worst_error,
                  row.passed ? "ok" : "FAIL");
    out << buf << '\n';
    if (!row.passed) {
      ok = false;
      err << "gradcheck failed: " << row.loss << " seed " << row.worst_seed << " relative error "
          << format_real(row.worst_error) << '\n';
    }
  }
  return ok ? kOk : kVerificationFailure;
}

int cmd_gen_data(const fs::path& spec_path, const fs::path& out_path, std::ostream& out) {
  const SyntheticSpec spec = load_synthetic_spec(spec_path);
  const DomainDataset ds = generate(spec);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_table(ds, out_path);
  out << "wrote " << ds.size() << " rows to " << out_path.string() << '\n';
  return kOk;
}

int cmd_embed(const fs::path& checkpoint, const fs::path& data, const fs::path& out_path,
              const std::string& label_column, char delimiter, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const DomainDataset ds = load_for_checkpoint(ckpt, data, label_column, delimiter);
  const Tensor features = ckpt.model("feature").forward(ds.features);
  const Embedding2D emb = pca_2d(features);

  std::ostringstream text;
  text << "x,y" << (ds.labelled() ? ",label" : "") << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    text << format_real(emb.points.at(i, 0)) << ',' << format_real(emb.points.at(i, 1));
    if (ds.labelled()) text << ',' << (*ds.labels)[i];
    text << '\n';
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_text(out_path, text.str());
  out << "wrote " << ds.size() << " points to " << out_path.string() << " (explained variance "
      << format_real(emb.explained_variance[0] + emb.explained_variance[1]) << " of "
      << format_real(emb.total_variance) << ")\n";
  return kOk;
}

char delimiter_of(const std::string& text) {
  if (text.size() != 1) throw ParseError("--delimiter expects one character");
  return text[0];
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised domain adaptation: training, evaluation and loss verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", UDA_VERSION);

  fs::path train_config;
  fs::path train_out = "run";
  auto* train_cmd = app.add_subcommand("train", "Train F, N and D from a run configuration");
  train_cmd->add_option("--config", train_config, "Run configuration (JSON)")->required();
  train_cmd->add_option("--out", train_out, "Output directory")->capture_default_str();

  fs::path checkpoint;
  fs::path data;
  std::string label_column = "label";
  std::string delimiter = ",";
  auto* eval_cmd = app.add_subcommand("eval", "Print the accuracy of a checkpoint on a table");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--data", data)->required();
  eval_cmd->add_option("--label-column", label_column)->capture_default_str();
  eval_cmd->add_option("--delimiter", delimiter)->capture_default_str();

  LossArgs loss_args;
  fs::path disc_source;
  fs::path disc_target;
  fs::path loss_config;
  auto* losses_cmd = app.add_subcommand("losses", "Evaluate every loss on supplied arrays");
  losses_cmd->add_option("--source-features", loss_args.source_features)->required();
  losses_cmd->add_option("--source-labels", loss_args.source_labels, "Table with a label column")
      ->required();
  losses_cmd->add_option("--target-features", loss_args.target_features)->required();
  losses_cmd->add_option("--target-logits", loss_args.target_logits)->required();
  losses_cmd->add_option("--disc-source", disc_source, "Discriminator outputs on source rows");
  losses_cmd->add_option("--disc-target", disc_target, "Discriminator outputs on target rows");
  losses_cmd->add_option("--config", loss_config,
                         "JSON with temperature, kernel_count, kernel_base");
  losses_cmd->add_option("--label-column", loss_args.label_column)->capture_default_str();
  losses_cmd->add_flag("--oracle", loss_args.oracle,
                       "Recompute with naive loops and report the max deviation");

  std::size_t seeds = 20;
  std::string corrupt;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every loss");
  gradcheck_cmd->add_option("--seeds", seeds)->capture_default_str()->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--corrupt", corrupt, "Flip one loss's gradient (negative control)")
      ->check(CLI::IsMember({"clc", "dis", "mmd", "plmmd", "mcc", "im"}));

  fs::path spec_path;
  fs::path gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset table");
  gen_cmd->add_option("--spec", spec_path, "Synthetic spec (JSON)")->required();
  gen_cmd->add_option("--out", gen_out)->required();

  fs::path embed_out;
  auto* embed_cmd = app.add_subcommand("embed", "Export a 2-D PCA embedding of F(x)");
  embed_cmd->add_option("--checkpoint", checkpoint)->required();
  embed_cmd->add_option("--data", data)->required();
  embed_cmd->add_option("--out", embed_out)->required();
  embed_cmd->add_option("--label-column", label_column)->capture_default_str();
  embed_cmd->add_option("--delimiter", delimiter)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*train_cmd) return cmd_train(train_config, train_out, out, err);
    if (*eval_cmd) return cmd_eval(checkpoint, data, label_column, delimiter_of(delimiter), out, err);
    if (*losses_cmd) {
      if (!disc_source.empty()) loss_args.disc_source = disc_source;
      if (!disc_target.empty()) loss_args.disc_target = disc_target;
      if (!loss_config.empty()) loss_args.config = loss_config;
      return cmd_losses(loss_args, out, err);
    }
    if (*gradcheck_cmd) {
      return cmd_gradcheck(seeds, corrupt.empty() ? std::nullopt : std::optional(corrupt), out, err);
    }
    if (*gen_cmd) return cmd_gen_data(spec_path, gen_out, out);
    if (*embed_cmd) {
      return cmd_embed(checkpoint, data, embed_out, label_column, delimiter_of(delimiter), out);
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericAbort;
  } catch (const ShapeError& e) {
    err << "shape mismatch: " << e.what() << '\n';
    return kShapeMismatch;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace uda::cli
