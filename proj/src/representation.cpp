#include "softts/representation.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "softts/errors.hpp"
#include "softts/text_io.hpp"

namespace softts {

std::string_view to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::precomputed: return "precomputed";
    case EncoderKind::random_conv: return "random_conv";
    case EncoderKind::identity: return "identity";
  }
  return "unknown";
}

EncoderKind encoder_kind_from_string(std::string_view s) {
  if (s == "precomputed") return EncoderKind::precomputed;
  if (s == "random_conv") return EncoderKind::random_conv;
  if (s == "identity") return EncoderKind::identity;
  throw ConfigError("unknown encoder kind '" + std::string(s) + "'");
}

void EncoderSpec::validate() const {
  if (kind == EncoderKind::precomputed && !file_path) {
    throw ConfigError("precomputed encoder requires a representation file");
  }
  if (num_kernels < 1) throw ConfigError("num_kernels must be >= 1");
}

std::string EncoderSpec::describe() const {
  switch (kind) {
    case EncoderKind::identity: return "identity";
    case EncoderKind::precomputed:
      return "precomputed-" + (file_path ? file_path->stem().string() : std::string("none"));
    case EncoderKind::random_conv:
      return "random_conv-k" + std::to_string(num_kernels) + "-s" + std::to_string(seed) +
             (pooling == Pooling::max ? "-max" : "-last");
  }
  return "unknown";
}

std::vector<kernels::RandomKernel> make_random_kernels(std::size_t length, int num_kernels, std::uint64_t seed) {
  static constexpr int kLengths[] = {7, 9, 11};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_length(0, 2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<kernels::RandomKernel> out(static_cast<std::size_t>(num_kernels));
  const double t = static_cast<double>(length);
  for (auto& k : out) {
    const int len = kLengths[pick_length(rng)];
    k.weights.resize(static_cast<std::size_t>(len));
    for (double& w : k.weights) w = normal(rng);
    k.bias = unit(rng);
    const double max_exponent = t > len ? std::log2((t - 1.0) / (len - 1.0)) : 0.0;
    std::uniform_real_distribution<double> exponent(0.0, std::max(0.0, max_exponent));
    k.dilation = std::max(1, static_cast<int>(std::floor(std::pow(2.0, exponent(rng)))));
    const int span = (len - 1) * k.dilation + 1;
    // Series shorter than the kernel get just enough padding for one output.
    k.padding = span > static_cast<int>(length) ? (span - static_cast<int>(length) + 1) / 2 : 0;
  }
  return out;
}

RepresentationMatrix encode(const LabeledDataset& dataset, const EncoderSpec& spec) {
  spec.validate();
  RepresentationMatrix out;
  out.source = spec.describe();
  switch (spec.kind) {
    case EncoderKind::identity:
      out.reps = dataset.samples;
      break;
    case EncoderKind::precomputed: {
      auto loaded = load_representations(*spec.file_path);
      if (loaded.reps.rows != dataset.size()) {
        throw DimensionError("representation file " + spec.file_path->string() + " has " +
                             std::to_string(loaded.reps.rows) + " rows, dataset " + dataset.name + " has " +
                             std::to_string(dataset.size()));
      }
      out.reps = std::move(loaded.reps);
      break;
    }
    case EncoderKind::random_conv: {
      const auto kern = make_random_kernels(dataset.length(), spec.num_kernels, spec.seed);
      out.reps = Matrix(dataset.size(), 2 * kern.size());
      kernels::omp::random_conv_features(kern, dataset.samples.data, dataset.size(), dataset.length(),
                                         spec.pooling == Pooling::last, out.reps.data);
      break;
    }
  }
  for (double v : out.reps.data) {
    if (!std::isfinite(v)) throw NumericError("non-finite representation value for " + dataset.name);
  }
  return out;
}

void save_representations(const RepresentationMatrix& reps, const std::filesystem::path& path) {
  for (double v : reps.reps.data) {
    if (!std::isfinite(v)) throw NumericError("refusing to save non-finite representation");
  }
  std::ostringstream os;
  os << reps.reps.rows << ' ' << reps.reps.cols << '\n';
  write_matrix_rows(os, reps.reps);
  write_file_atomic(path, os.str());
}

RepresentationMatrix load_representations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
  const auto header = parse_numbers(line, path.string() + ":1");
  if (header.size() != 2 || header[0] < 1 || header[1] < 1 || header[0] != std::floor(header[0]) ||
      header[1] != std::floor(header[1])) {
    throw ParseError(path.string() + ":1: header must be 'N D'");
  }
  RepresentationMatrix out;
  out.source = "file:" + path.filename().string();
  out.reps = read_matrix_rows(in, static_cast<std::size_t>(header[0]), static_cast<std::size_t>(header[1]),
                              path.string(), 2);
  if (std::getline(in, line) && line.find_first_not_of(" \t\r") != std::string::npos) {
    throw ParseError(path.string() + ": more rows than the header declares");
  }
  return out;
}

}  // namespace softts
