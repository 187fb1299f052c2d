#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include <nlohmann/json.hpp>

#include "uda/data.hpp"
#include "uda/trainer.hpp"

namespace uda {

struct TableSource {
  std::filesystem::path path;  // resolved against the config file's directory
  TableSchema schema;
};

using DatasetSource = std::variant<SyntheticSpec, TableSource>;

/// A training run: TrainConfig plus where the two domains come from.
///
/// JSON, `schema_version` 1:
///
///   {
///     "schema_version": 1,
///     "train":  { "lr": 1e-3, "epochs": 20, ... },      // any TrainConfig field
///     "source": { "synthetic": { "generator": "two_moons", "n": 1000, ... } },
///     "target": { "table": { "path": "t.csv", "label_column": "label" } },
///     "normalize": true
///   }
///
/// Omitted fields keep their defaults; unknown fields are rejected.
struct RunConfig {
  static constexpr int kSchemaVersion = 1;

  TrainConfig train;
  DatasetSource source;
  DatasetSource target;
  bool normalize = false;  // z-score both domains with source statistics
};

// Errors name the offending field path (e.g. `train.lr`) or, for malformed
// JSON, the line and column.
RunConfig parse_run_config(const std::string& text,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const TrainConfig& config);
nlohmann::json to_json(const SyntheticSpec& spec);

SyntheticSpec parse_synthetic_spec(const nlohmann::json& j, const std::string& where = "spec");
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

struct PreparedData {
  DomainDataset source;
  DomainDataset target;
  std::optional<NormStats> stats;
};

// Generates or loads both domains and applies normalization when requested.
PreparedData prepare_data(const RunConfig& config);

// 64-bit FNV-1a of a file's bytes, as 16 hex digits; a content fingerprint
// for run manifests, not a cryptographic digest.
std::string file_fingerprint(const std::filesystem::path& path);

}  // namespace uda
