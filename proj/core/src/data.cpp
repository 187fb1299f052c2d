#include "uda/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "uda/errors.hpp"
#include "uda/random.hpp"
#include "uda/text_io.hpp"

namespace uda {

std::string_view to_string(DomainTag tag) {
  return tag == DomainTag::source ? "source" : "target";
}

std::string_view to_string(Generator generator) {
  return generator == Generator::two_moons ? "two_moons" : "gaussian_blobs";
}

Generator generator_from_string(std::string_view name) {
  if (name == "two_moons") return Generator::two_moons;
  if (name == "gaussian_blobs") return Generator::gaussian_blobs;
  throw ParameterError("unknown generator '" + std::string(name) + "'");
}

void DomainDataset::validate() const {
  if (features.rank() != 2) {
    throw ShapeError("dataset features must be a matrix");
  }
  if (!labels) {
    if (domain == DomainTag::source) {
      throw ParameterError("source datasets must be labelled");
    }
    return;
  }
  if (labels->size() != size()) {
    throw ShapeError("dataset has " + std::to_string(size()) + " rows but " +
                     std::to_string(labels->size()) + " labels");
  }
  for (int label : *labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= class_count) {
      throw DomainError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(class_count) + ")");
    }
  }
}

namespace {

Tensor gather_rows(const Tensor& features, std::span<const std::size_t> rows) {
  const std::size_t d = features.cols();
  std::vector<double> out;
  out.reserve(rows.size() * d);
  const auto values = features.values();
  for (auto r : rows) {
    if (r >= features.rows()) {
      throw ShapeError("row index " + std::to_string(r) + " out of range");
    }
    out.insert(out.end(), values.begin() + static_cast<std::ptrdiff_t>(r * d),
               values.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  }
  return Tensor::matrix(rows.size(), d, std::move(out));
}

// Rotates the first two coordinates of every row, then translates.
void transform_points(std::vector<double>& points, std::size_t d, const SyntheticSpec& spec) {
  const double theta = spec.rotation_degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const std::size_t n = d ? points.size() / d : 0;
  for (std::size_t i = 0; i < n; ++i) {
    double* p = points.data() + i * d;
    if (d >= 2 && spec.rotation_degrees != 0.0) {
      const double x = p[0];
      const double y = p[1];
      p[0] = c * x - s * y;
      p[1] = s * x + c * y;
    }
    for (std::size_t k = 0; k < spec.translation.size(); ++k) {
      p[k] += spec.translation[k];
    }
  }
}

}  // namespace

Tensor DomainDataset::gather(std::span<const std::size_t> rows) const {
  return gather_rows(features, rows);
}

std::vector<int> DomainDataset::gather_labels(std::span<const std::size_t> rows) const {
  if (!labels) {
    throw ParameterError("dataset has no labels");
  }
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    out.push_back(labels->at(r));
  }
  return out;
}

Tensor UnlabeledView::gather(std::span<const std::size_t> rows) const {
  return gather_rows(features_, rows);
}

void SyntheticSpec::validate() const {
  if (n < 1) {
    throw ParameterError("synthetic spec needs n >= 1");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw ParameterError("synthetic spec needs a finite noise >= 0");
  }
  if (!std::isfinite(rotation_degrees)) {
    throw ParameterError("rotation must be finite");
  }
  if (generator == Generator::gaussian_blobs) {
    if (centers.empty()) {
      throw ParameterError("gaussian_blobs needs at least one center");
    }
    const std::size_t d = centers.front().size();
    for (const auto& c : centers) {
      if (c.size() != d || d == 0) {
        throw ParameterError("blob centers must share a positive dimension");
      }
    }
  }
}

DomainDataset gen_two_moons(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.generator != Generator::two_moons) {
    throw ParameterError("gen_two_moons called with a different generator");
  }
  if (!spec.translation.empty() && spec.translation.size() != 2) {
    throw ParameterError("two_moons translation must have 2 entries");
  }
  const std::size_t n_upper = (spec.n + 1) / 2;
  const std::size_t n_lower = spec.n / 2;
  std::vector<double> points;
  points.reserve(2 * spec.n);
  std::vector<int> labels;
  labels.reserve(spec.n);
  auto angle = [](std::size_t i, std::size_t count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1)
                     : 0.0;
  };
  for (std::size_t i = 0; i < n_upper; ++i) {
    const double t = angle(i, n_upper);
    points.push_back(std::cos(t));
    points.push_back(std::sin(t));
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < n_lower; ++i) {
    const double t = angle(i, n_lower);
    points.push_back(1.0 - std::cos(t));
    points.push_back(0.5 - std::sin(t));
    labels.push_back(1);
  }
  Rng rng(spec.seed);
  if (spec.noise > 0.0) {
    for (double& v : points) {
      v += spec.noise * rng.normal();
    }
  }
  transform_points(points, 2, spec);

  DomainDataset ds;
  ds.features = Tensor::matrix(spec.n, 2, std::move(points));
  ds.labels = std::move(labels);
  ds.domain = spec.domain;
  ds.class_count = 2;
  return ds;
}

DomainDataset gen_gaussian_blobs(const SyntheticSpec& spec, const Tensor& centers) {
  if (centers.rank() != 2 || centers.rows() < 1) {
    throw ParameterError("gaussian_blobs needs at least one center (K >= 1)");
  }
  if (spec.n < 1 || !(spec.noise >= 0.0)) {
    throw ParameterError("synthetic spec needs n >= 1 and noise >= 0");
  }
  const std::size_t k = centers.rows();
  const std::size_t d = centers.cols();
  if (!spec.translation.empty() && spec.translation.size() != d) {
    throw ParameterError("translation length must equal the center dimension");
  }
  if (d < 2 && spec.rotation_degrees != 0.0) {
    throw ParameterError("rotation needs at least two dimensions");
  }
  Rng rng(spec.seed);
  std::vector<double> points(spec.n * d);
  std::vector<int> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t c = i % k;
    labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < d; ++j) {
      const double jitter = spec.noise > 0.0 ? spec.noise * rng.normal() : 0.0;
      points[i * d + j] = centers.at(c, j) + jitter;
    }
  }
  transform_points(points, d, spec);

  DomainDataset ds;
  ds.features = Tensor::matrix(spec.n, d, std::move(points));
  ds.labels = std::move(labels);
  ds.domain = spec.domain;
  ds.class_count = k;
  return ds;
}

DomainDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  if (spec.generator == Generator::two_moons) {
    return gen_two_moons(spec);
  }
  const std::size_t d = spec.centers.front().size();
  std::vector<double> flat;
  for (const auto& c : spec.centers) {
    flat.insert(flat.end(), c.begin(), c.end());
  }
  return gen_gaussian_blobs(spec, Tensor::matrix(spec.centers.size(), d, std::move(flat)));
}

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delimiter)) {
    cells.emplace_back(trim(cell));
  }
  if (!line.empty() && line.back() == delimiter) {
    cells.emplace_back();
  }
  return cells;
}

}  // namespace

DomainDataset load_table(const std::filesystem::path& path, const TableSchema& schema,
                         DomainTag domain) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }
  const std::string where = path.string() + ":";
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(where + "1: missing header row");
  }
  const auto header = split(line, schema.delimiter);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError(where + "1: column '" + name + "' not found in header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  std::optional<std::size_t> label_col;
  if (schema.label_column) {
    label_col = column_of(*schema.label_column);
  }
  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (label_col && c == *label_col) continue;
      feature_cols.push_back(c);
      names.push_back(header[c]);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      feature_cols.push_back(column_of(name));
      names.push_back(name);
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, schema.delimiter);
    if (cells.size() != header.size()) {
      throw ParseError(where + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    for (auto c : feature_cols) {
      const auto v = parse_real(cells[c]);
      if (!v) {
        throw ParseError(where + std::to_string(line_no) + ": non-numeric cell '" + cells[c] +
                         "' in column '" + header[c] + "'");
      }
      values.push_back(*v);
    }
    if (label_col) {
      const auto v = parse_integer(cells[*label_col]);
      if (!v || *v < 0 || (schema.class_count && static_cast<std::size_t>(*v) >= *schema.class_count)) {
        throw ParseError(where + std::to_string(line_no) + ": invalid label '" +
                         cells[*label_col] + "'");
      }
      labels.push_back(static_cast<int>(*v));
    }
    ++rows;
  }

  DomainDataset ds;
  ds.features = Tensor::matrix(rows, feature_cols.size(), std::move(values));
  ds.domain = domain;
  ds.feature_names = std::move(names);
  if (label_col) {
    std::size_t k = schema.class_count.value_or(0);
    if (!schema.class_count) {
      for (int l : labels) k = std::max(k, static_cast<std::size_t>(l) + 1);
    }
    ds.class_count = k;
    ds.labels = std::move(labels);
  } else {
    ds.class_count = schema.class_count.value_or(0);
  }
  return ds;
}

void save_table(const DomainDataset& ds, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  const std::size_t d = ds.dim();
  for (std::size_t j = 0; j < d; ++j) {
    out << (j ? std::string(1, delimiter) : std::string());
    out << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j));
  }
  if (ds.labels) {
    out << delimiter << "label";
  }
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out << (j ? std::string(1, delimiter) : std::string()) << format_real(ds.features.at(i, j));
    }
    if (ds.labels) {
      out << delimiter << (*ds.labels)[i];
    }
    out << '\n';
  }
  if (!out) {
    throw Error("failed writing '" + path.string() + "'");
  }
}

std::pair<DomainDataset, NormStats> zscore_normalize(const DomainDataset& ds,
                                                     const std::optional<NormStats>& stats) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dim();
  NormStats used;
  if (stats) {
    if (stats->mean.size() != d || stats->std.size() != d) {
      throw ShapeError("normalization statistics do not match the feature dimension");
    }
    used = *stats;
  } else {
    used.mean.assign(d, 0.0);
    used.std.assign(d, 0.0);
    if (n > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) used.mean[j] += ds.features.at(i, j);
      }
      for (double& m : used.mean) m /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = ds.features.at(i, j) - used.mean[j];
          used.std[j] += diff * diff;
        }
      }
      for (double& s : used.std) s = std::sqrt(s / static_cast<double>(n));
    }
  }
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out[i * d + j] = (ds.features.at(i, j) - used.mean[j]) / std::max(kStdFloor, used.std[j]);
    }
  }
  DomainDataset result = ds;
  result.features = Tensor::matrix(n, d, std::move(out));
  return {std::move(result), std::move(used)};
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size == 0) {
    throw ParameterError("batch size must be at least 1");
  }
  Rng rng(derive_seed(seed, epoch));
  const auto perm = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<StepIndices> paired_batches(std::size_t n_source, std::size_t n_target,
                                        std::size_t batch_size, std::uint64_t seed,
                                        std::uint64_t epoch) {
  if (n_source == 0 || n_target == 0) {
    throw ParameterError("both domains need at least one sample");
  }
  const auto source = batch_iter(n_source, batch_size, derive_seed(seed, 0x5u), epoch);
  const auto target = batch_iter(n_target, batch_size, derive_seed(seed, 0x7u), epoch);
  const std::size_t steps = std::max(source.size(), target.size());
  std::vector<StepIndices> out(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    out[s].source = source[s % source.size()];
    out[s].target = target[s % target.size()];
  }
  return out;
}

}  // namespace uda
