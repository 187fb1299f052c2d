#include "uda/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "uda/errors.hpp"

namespace uda {

namespace {

using nlohmann::json;

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& known) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ParseError(join(where, key) + ": unknown field");
    }
  }
}

const json& object_at(const json& j, const std::string& where) {
  if (!j.is_object()) {
    throw ParseError(where + ": expected an object");
  }
  return j;
}

double real_field(const json& j, const std::string& where) {
  if (!j.is_number()) {
    throw ParseError(where + ": expected a number");
  }
  return j.get<double>();
}

std::uint64_t count_field(const json& j, const std::string& where) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
    throw ParseError(where + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string string_field(const json& j, const std::string& where) {
  if (!j.is_string()) {
    throw ParseError(where + ": expected a string");
  }
  return j.get<std::string>();
}

bool bool_field(const json& j, const std::string& where) {
  if (!j.is_boolean()) {
    throw ParseError(where + ": expected true or false");
  }
  return j.get<bool>();
}

std::vector<double> real_list(const json& j, const std::string& where) {
  if (!j.is_array()) {
    throw ParseError(where + ": expected an array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(real_field(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <typename T, typename Fn>
T rethrow_as_parse(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

ConditioningOptions parse_conditioning(const json& j, const std::string& where) {
  object_at(j, where);
  reject_unknown(j, where, {"mode", "exact_limit", "random_dim"});
  ConditioningOptions out;
  if (j.contains("mode")) {
    const auto name = string_field(j["mode"], join(where, "mode"));
    if (name != "auto") {
      out.mode = rethrow_as_parse<ConditioningMode>(
          join(where, "mode"), [&] { return conditioning_mode_from_string(name); });
    }
  }
  if (j.contains("exact_limit")) out.exact_limit = count_field(j["exact_limit"], join(where, "exact_limit"));
  if (j.contains("random_dim")) out.random_dim = count_field(j["random_dim"], join(where, "random_dim"));
  return out;
}

TrainConfig parse_train(const json& j, const std::string& where) {
  object_at(j, where);
  TrainConfig c;
  const std::pair<const char*, double*> reals[] = {
      {"lr", &c.lr},
      {"beta", &c.beta},
      {"gamma", &c.gamma},
      {"delta", &c.delta},
      {"eta", &c.eta},
      {"lambda_max", &c.lambda_max},
      {"temperature", &c.temperature},
      {"adam_beta1", &c.adam_beta1},
      {"adam_beta2", &c.adam_beta2},
      {"adam_eps", &c.adam_eps},
      {"weight_decay", &c.weight_decay},
      {"kernel_base", &c.kernel_base},
  };
  const std::pair<const char*, std::size_t*> counts[] = {
      {"batch_size", &c.batch_size},
      {"epochs", &c.epochs},
      {"kernel_count", &c.kernel_count},
      {"discriminator_hidden", &c.discriminator_hidden},
  };
  std::set<std::string> known = {"seed", "conditioning", "feature_widths"};
  for (const auto& [key, target] : reals) {
    known.insert(key);
    if (j.contains(key)) *target = real_field(j[key], join(where, key));
  }
  for (const auto& [key, target] : counts) {
    known.insert(key);
    if (j.contains(key)) *target = count_field(j[key], join(where, key));
  }
  reject_unknown(j, where, known);
  if (j.contains("seed")) c.seed = count_field(j["seed"], join(where, "seed"));
  if (j.contains("conditioning")) {
    c.conditioning = parse_conditioning(j["conditioning"], join(where, "conditioning"));
  }
  if (j.contains("feature_widths")) {
    const auto& widths = j["feature_widths"];
    const auto path = join(where, "feature_widths");
    if (!widths.is_array()) throw ParseError(path + ": expected an array of integers");
    c.feature_widths.clear();
    for (std::size_t i = 0; i < widths.size(); ++i) {
      c.feature_widths.push_back(count_field(widths[i], path + "[" + std::to_string(i) + "]"));
    }
  }
  rethrow_as_parse<int>(where, [&] {
    c.validate();
    return 0;
  });
  return c;
}

TableSource parse_table(const json& j, const std::string& where,
                        const std::filesystem::path& base_dir) {
  object_at(j, where);
  reject_unknown(j, where, {"path", "feature_columns", "label_column", "delimiter", "class_count"});
  if (!j.contains("path")) throw ParseError(join(where, "path") + ": required");
  TableSource out;
  std::filesystem::path path = string_field(j["path"], join(where, "path"));
  out.path = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  if (j.contains("feature_columns")) {
    const auto& cols = j["feature_columns"];
    const auto p = join(where, "feature_columns");
    if (!cols.is_array()) throw ParseError(p + ": expected an array of strings");
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out.schema.feature_columns.push_back(string_field(cols[i], p + "[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("label_column")) {
    out.schema.label_column = string_field(j["label_column"], join(where, "label_column"));
  }
  if (j.contains("delimiter")) {
    const auto d = string_field(j["delimiter"], join(where, "delimiter"));
    if (d.size() != 1) throw ParseError(join(where, "delimiter") + ": expected one character");
    out.schema.delimiter = d[0];
  }
  if (j.contains("class_count")) {
    out.schema.class_count = count_field(j["class_count"], join(where, "class_count"));
  }
  return out;
}

DatasetSource parse_source(const json& j, const std::string& where,
                           const std::filesystem::path& base_dir, DomainTag domain) {
  object_at(j, where);
  if (j.size() != 1 || !(j.contains("synthetic") || j.contains("table"))) {
    throw ParseError(where + ": expected exactly one of `synthetic` or `table`");
  }
  if (j.contains("synthetic")) {
    auto spec = parse_synthetic_spec(j["synthetic"], join(where, "synthetic"));
    spec.domain = domain;
    return spec;
  }
  return parse_table(j["table"], join(where, "table"), base_dir);
}

json source_to_json(const DatasetSource& source) {
  if (const auto* spec = std::get_if<SyntheticSpec>(&source)) {
    return {{"synthetic", to_json(*spec)}};
  }
  const auto& table = std::get<TableSource>(source);
  json t = {{"path", table.path.string()},
            {"delimiter", std::string(1, table.schema.delimiter)},
            {"feature_columns", table.schema.feature_columns}};
  if (table.schema.label_column) t["label_column"] = *table.schema.label_column;
  if (table.schema.class_count) t["class_count"] = *table.schema.class_count;
  return {{"table", t}};
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

DomainDataset materialize(const DatasetSource& source, DomainTag domain) {
  if (const auto* spec = std::get_if<SyntheticSpec>(&source)) {
    SyntheticSpec s = *spec;
    s.domain = domain;
    return generate(s);
  }
  const auto& table = std::get<TableSource>(source);
  return load_table(table.path, table.schema, domain);
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const json& j, const std::string& where) {
  object_at(j, where);
  reject_unknown(j, where,
                 {"generator", "n", "noise", "rotation_degrees", "translation", "seed", "centers"});
  SyntheticSpec spec;
  if (j.contains("generator")) {
    const auto name = string_field(j["generator"], join(where, "generator"));
    spec.generator = rethrow_as_parse<Generator>(join(where, "generator"),
                                                 [&] { return generator_from_string(name); });
  }
  if (!j.contains("n")) throw ParseError(join(where, "n") + ": required");
  spec.n = count_field(j["n"], join(where, "n"));
  if (j.contains("noise")) spec.noise = real_field(j["noise"], join(where, "noise"));
  if (j.contains("rotation_degrees")) {
    spec.rotation_degrees = real_field(j["rotation_degrees"], join(where, "rotation_degrees"));
  }
  if (j.contains("translation")) spec.translation = real_list(j["translation"], join(where, "translation"));
  if (j.contains("seed")) spec.seed = count_field(j["seed"], join(where, "seed"));
  if (j.contains("centers")) {
    const auto& centers = j["centers"];
    const auto p = join(where, "centers");
    if (!centers.is_array()) throw ParseError(p + ": expected an array of points");
    for (std::size_t i = 0; i < centers.size(); ++i) {
      spec.centers.push_back(real_list(centers[i], p + "[" + std::to_string(i) + "]"));
    }
  }
  rethrow_as_parse<int>(where, [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  return parse_synthetic_spec(parse_text(read_file(path)), "spec");
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_text(text);
  object_at(j, "config");
  reject_unknown(j, "", {"schema_version", "train", "source", "target", "normalize"});
  if (!j.contains("schema_version")) throw ParseError("schema_version: required");
  const auto version = count_field(j["schema_version"], "schema_version");
  if (version != static_cast<std::uint64_t>(RunConfig::kSchemaVersion)) {
    throw ParseError("schema_version: unsupported version " + std::to_string(version) +
                     " (expected " + std::to_string(RunConfig::kSchemaVersion) + ")");
  }
  RunConfig config;
  if (j.contains("train")) config.train = parse_train(j["train"], "train");
  if (!j.contains("source")) throw ParseError("source: required");
  if (!j.contains("target")) throw ParseError("target: required");
  config.source = parse_source(j["source"], "source", base_dir, DomainTag::source);
  config.target = parse_source(j["target"], "target", base_dir, DomainTag::target);
  if (j.contains("normalize")) config.normalize = bool_field(j["normalize"], "normalize");
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

json to_json(const TrainConfig& c) {
  json conditioning = {{"mode", c.conditioning.mode ? std::string(to_string(*c.conditioning.mode))
                                                    : std::string("auto")},
                       {"exact_limit", c.conditioning.exact_limit},
                       {"random_dim", c.conditioning.random_dim}};
  return {{"lr", c.lr},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"beta", c.beta},
          {"gamma", c.gamma},
          {"delta", c.delta},
          {"eta", c.eta},
          {"lambda_max", c.lambda_max},
          {"temperature", c.temperature},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed},
          {"conditioning", conditioning},
          {"kernel_count", c.kernel_count},
          {"kernel_base", c.kernel_base},
          {"feature_widths", c.feature_widths},
          {"discriminator_hidden", c.discriminator_hidden}};
}

json to_json(const SyntheticSpec& spec) {
  json j = {{"generator", std::string(to_string(spec.generator))},
            {"n", spec.n},
            {"noise", spec.noise},
            {"rotation_degrees", spec.rotation_degrees},
            {"translation", spec.translation},
            {"seed", spec.seed}};
  if (!spec.centers.empty()) j["centers"] = spec.centers;
  return j;
}

json to_json(const RunConfig& config) {
  return {{"schema_version", RunConfig::kSchemaVersion},
          {"train", to_json(config.train)},
          {"source", source_to_json(config.source)},
          {"target", source_to_json(config.target)},
          {"normalize", config.normalize}};
}

PreparedData prepare_data(const RunConfig& config) {
  PreparedData out{materialize(config.source, DomainTag::source),
                   materialize(config.target, DomainTag::target), std::nullopt};
  if (out.source.dim() != out.target.dim()) {
    throw ShapeError("source has " + std::to_string(out.source.dim()) + " features, target has " +
                     std::to_string(out.target.dim()));
  }
  if (config.normalize) {
    auto [source, stats] = zscore_normalize(out.source);
    auto [target, unused] = zscore_normalize(out.target, stats);
    out.source = std::move(source);
    out.target = std::move(target);
    out.stats = std::move(stats);
  }
  return out;
}

std::string file_fingerprint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace uda
