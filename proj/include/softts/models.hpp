#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "softts/matrix.hpp"
#include "softts/nn/layers.hpp"

namespace softts {

enum class Architecture { inception, lstm_fcn, resnet18 };

std::string_view to_string(Architecture a);

struct ModelSpec {
  Architecture architecture = Architecture::inception;
  int inception_depth = 6;  // 1, 2, 3 or 6; inception only
  int base_channels = 0;    // 0 selects the architecture default (32 / 128 / 64)
  int num_classes = 2;
  int input_length = 0;
  std::uint64_t seed = 0;
  int lstm_hidden = 8;
  double lstm_dropout = 0.8;

  void validate() const;
  int channels() const;
  /// "inceptiontime", "inceptiontime-3", "lstm-fcn", "resnet18", ...
  std::string name() const;
  /// Shortest series the architecture accepts.
  int min_input_length() const;

  /// Architecture and depth from a preset name; widths stay at defaults.
  static ModelSpec from_name(std::string_view name);
};

struct ClassifierOutput {
  std::vector<float> logits;
  std::vector<float> penultimate;
};

/// Feature extractor body followed by a linear head. Logits are unnormalized.
class Classifier {
 public:
  Classifier(ModelSpec spec, std::unique_ptr<nn::Layer> body, int feature_dim, std::mt19937_64& rng);

  struct Output {
    nn::Tensor logits;    // [B, L, 1]
    nn::Tensor features;  // [B, F, 1]
  };

  /// x is [B, 1, T].
  Output forward(const nn::Tensor& x, nn::Mode mode);
  /// Backpropagates d(loss)/d(logits) into parameter gradients.
  void backward(const nn::Tensor& grad_logits);

  std::vector<nn::Parameter*> parameters();
  std::vector<std::vector<float>*> buffers();
  std::size_t parameter_count();
  int feature_dim() const { return feature_dim_; }
  const ModelSpec& spec() const { return spec_; }
  void reseed_dropout(std::uint64_t seed) { body_->reseed(seed); }

  void save(const std::filesystem::path& path);
  void load(const std::filesystem::path& path);

 private:
  ModelSpec spec_;
  std::unique_ptr<nn::Layer> body_;
  nn::Linear head_;
  int feature_dim_;
};

std::unique_ptr<Classifier> build_model(const ModelSpec& spec);

/// Converts rows of `batch` (B x T) to a [B, 1, T] tensor.
nn::Tensor to_tensor(const Matrix& batch);
nn::Tensor to_tensor(const Matrix& samples, std::span<const std::size_t> rows);

std::vector<ClassifierOutput> forward(Classifier& model, const Matrix& batch, nn::Mode mode = nn::Mode::eval);

}  // namespace softts
