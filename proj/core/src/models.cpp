#include "uda/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "uda/errors.hpp"
#include "uda/ops.hpp"
#include "uda/random.hpp"
#include "uda/text_io.hpp"

namespace uda {

std::string_view to_string(FinalActivation activation) {
  return activation == FinalActivation::sigmoid ? "sigmoid" : "none";
}

FinalActivation final_activation_from_string(std::string_view name) {
  if (name == "none") return FinalActivation::none;
  if (name == "sigmoid") return FinalActivation::sigmoid;
  throw ParameterError("unknown final activation '" + std::string(name) + "'");
}

void MLPSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw ParameterError("MLP spec needs an input width and at least one layer");
  }
  for (auto w : layer_widths) {
    if (w == 0) {
      throw ParameterError("MLP layer widths must be positive");
    }
  }
}

Model::Model(MLPSpec spec, std::uint64_t seed, std::vector<Tensor> parameters)
    : spec_(std::move(spec)), seed_(seed), parameters_(std::move(parameters)) {
  spec_.validate();
  if (parameters_.size() != 2 * spec_.layer_count()) {
    throw ShapeError("model has " + std::to_string(parameters_.size()) +
                     " parameter tensors, spec needs " + std::to_string(2 * spec_.layer_count()));
  }
  for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
    const Shape weight{spec_.layer_widths[l], spec_.layer_widths[l + 1]};
    const Shape bias{1, spec_.layer_widths[l + 1]};
    if (parameters_[2 * l].shape() != weight || parameters_[2 * l + 1].shape() != bias) {
      throw ShapeError("parameter shapes of layer " + std::to_string(l) + " do not follow the spec");
    }
  }
}

std::string Model::parameter_name(std::size_t index) const {
  return "layer" + std::to_string(index / 2) + (index % 2 ? ".bias" : ".weight");
}

Tensor Model::forward(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != spec_.input_dim()) {
    throw ShapeError("model expects inputs of width " + std::to_string(spec_.input_dim()) +
                     ", got " + shape_string(x.shape()));
  }
  Tensor h = x;
  const std::size_t layers = spec_.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    h = add_row(matmul(h, parameters_[2 * l]), parameters_[2 * l + 1]);
    if (l + 1 < layers) {
      h = relu(h);
    }
  }
  if (spec_.final_activation == FinalActivation::sigmoid) {
    h = sigmoid(h);
  }
  return h;
}

Model Model::clone() const {
  std::vector<Tensor> copies;
  copies.reserve(parameters_.size());
  for (const auto& p : parameters_) {
    copies.push_back(Tensor::from(p.shape(), {p.values().begin(), p.values().end()}, true));
  }
  return Model(spec_, seed_, std::move(copies));
}

void Model::zero_grad() {
  for (auto& p : parameters_) {
    p.zero_grad();
  }
}

Model init_model(const MLPSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<Tensor> params;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t fan_in = spec.layer_widths[l];
    const std::size_t fan_out = spec.layer_widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) {
      v = rng.uniform(-bound, bound);
    }
    params.push_back(Tensor::matrix(fan_in, fan_out, std::move(w), true));
    params.push_back(Tensor::zeros({1, fan_out}, true));
  }
  return Model(spec, seed, std::move(params));
}

const Model& Checkpoint::model(std::string_view name) const {
  for (const auto& [n, m] : models) {
    if (n == name) return m;
  }
  throw ParameterError("checkpoint has no model named '" + std::string(name) + "'");
}

bool Checkpoint::has_model(std::string_view name) const {
  for (const auto& entry : models) {
    if (entry.first == name) return true;
  }
  return false;
}

namespace {

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i ? " " : "") << format_real(values[i]);
  }
  out << '\n';
}

// Whitespace tokenizer that remembers the line of the last token.
class TokenReader {
 public:
  TokenReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::string& token) {
    while (!(line_stream_ >> token)) {
      std::string line;
      if (!std::getline(in_, line)) return false;
      ++line_no_;
      line_stream_.clear();
      line_stream_.str(line);
    }
    return true;
  }

  std::string word() {
    std::string token;
    if (!next(token)) fail("unexpected end of file");
    return token;
  }

  void expect(std::string_view keyword) {
    const std::string token = word();
    if (token != keyword) fail("expected '" + std::string(keyword) + "', found '" + token + "'");
  }

  std::size_t count() {
    const std::string token = word();
    const auto v = parse_integer(token);
    if (!v || *v < 0) fail("expected a non-negative integer, found '" + token + "'");
    return static_cast<std::size_t>(*v);
  }

  double real() {
    const std::string token = word();
    const auto v = parse_real(token);
    if (!v) fail("expected a real number, found '" + token + "'");
    return *v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_ + ":" + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::string source_;
  std::istringstream line_stream_;
  std::size_t line_no_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  out << "uda-checkpoint " << Checkpoint::kFormatVersion << '\n';
  for (const auto& [name, model] : checkpoint.models) {
    const auto& spec = model.spec();
    out << "model " << name << " seed " << model.seed() << " final "
        << to_string(spec.final_activation) << " widths " << spec.layer_widths.size();
    for (auto w : spec.layer_widths) out << ' ' << w;
    out << '\n';
    for (const auto& p : model.parameters()) {
      out << "tensor " << p.rows() << ' ' << p.cols() << '\n';
      write_values(out, p.values());
    }
  }
  for (const auto& [name, values] : checkpoint.arrays) {
    out << "array " << name << ' ' << values.size() << '\n';
    write_values(out, values);
  }
  out << "end\n";
  if (!out) {
    throw Error("failed writing checkpoint '" + path.string() + "'");
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open checkpoint '" + path.string() + "'");
  }
  TokenReader reader(in, path.string());
  reader.expect("uda-checkpoint");
  const std::size_t version = reader.count();
  if (version != static_cast<std::size_t>(Checkpoint::kFormatVersion)) {
    reader.fail("unsupported checkpoint format version " + std::to_string(version));
  }
  Checkpoint checkpoint;
  for (;;) {
    const std::string record = reader.word();
    if (record == "end") break;
    if (record == "model") {
      const std::string name = reader.word();
      reader.expect("seed");
      const std::string seed_token = reader.word();
      std::uint64_t seed = 0;
      try {
        std::size_t used = 0;
        seed = std::stoull(seed_token, &used);
        if (used != seed_token.size()) throw std::invalid_argument(seed_token);
      } catch (const std::exception&) {
        reader.fail("bad seed '" + seed_token + "'");
      }
      reader.expect("final");
      MLPSpec spec;
      try {
        spec.final_activation = final_activation_from_string(reader.word());
      } catch (const ParameterError& e) {
        reader.fail(e.what());
      }
      reader.expect("widths");
      const std::size_t n_widths = reader.count();
      for (std::size_t i = 0; i < n_widths; ++i) spec.layer_widths.push_back(reader.count());
      try {
        spec.validate();
      } catch (const ParameterError& e) {
        reader.fail(e.what());
      }
      std::vector<Tensor> params;
      for (std::size_t i = 0; i < 2 * spec.layer_count(); ++i) {
        reader.expect("tensor");
        const std::size_t rows = reader.count();
        const std::size_t cols = reader.count();
        std::vector<double> values(rows * cols);
        for (double& v : values) v = reader.real();
        params.push_back(Tensor::matrix(rows, cols, std::move(values), true));
      }
      try {
        checkpoint.models.emplace_back(name, Model(spec, seed, std::move(params)));
      } catch (const ShapeError& e) {
        reader.fail(e.what());
      }
    } else if (record == "array") {
      const std::string name = reader.word();
      std::vector<double> values(reader.count());
      for (double& v : values) v = reader.real();
      checkpoint.arrays[name] = std::move(values);
    } else {
      reader.fail("unknown record '" + record + "'");
    }
  }
  return checkpoint;
}

}  // namespace uda
