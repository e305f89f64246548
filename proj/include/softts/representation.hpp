#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "softts/dataset_io.hpp"
#include "softts/kernels.hpp"
#include "softts/matrix.hpp"

namespace softts {

enum class EncoderKind { precomputed, random_conv, identity };
enum class Pooling { max, last };

std::string_view to_string(EncoderKind k);
EncoderKind encoder_kind_from_string(std::string_view s);

struct EncoderSpec {
  EncoderKind kind = EncoderKind::random_conv;
  std::optional<std::filesystem::path> file_path;  // precomputed only
  int num_kernels = 256;
  std::uint64_t seed = 0;
  // Reduction of per-timestep kernel outputs for the first feature of each
  // random kernel; the second feature is always the proportion of positives.
  Pooling pooling = Pooling::max;

  void validate() const;
  /// Stable identifier used in cache file names, e.g. "random_conv-k256-s0-max".
  std::string describe() const;
};

struct RepresentationMatrix {
  Matrix reps;  // N x D
  std::string source;
};

/// Kernels of the random-convolution encoder for series of length `length`.
std::vector<kernels::RandomKernel> make_random_kernels(std::size_t length, int num_kernels, std::uint64_t seed);

RepresentationMatrix encode(const LabeledDataset& dataset, const EncoderSpec& spec);

/// Text format: "N D" header, then N rows of D space-separated decimals.
void save_representations(const RepresentationMatrix& reps, const std::filesystem::path& path);
RepresentationMatrix load_representations(const std::filesystem::path& path);

}  // namespace softts
