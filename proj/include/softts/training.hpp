#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "softts/dataset_io.hpp"
#include "softts/losses.hpp"
#include "softts/models.hpp"
#include "softts/softlabel.hpp"

namespace softts {

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 128;
  double learning_rate = 0.001;
  int eval_every = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EvalPoint {
  int epoch = 0;
  double accuracy = 0.0;
  bool operator==(const EvalPoint&) const = default;
};

/// One (dataset, model, method, seed) cell.
struct ExperimentResult {
  std::string dataset;
  std::string model;        // ModelSpec::name()
  int depth = 0;            // inception depth, 0 for other architectures
  std::string method;       // baseline | ls | cp | ss
  std::string label;        // column label in reports (defaults to method)
  std::string encoder;      // EncoderSpec::describe() for ss, empty otherwise
  std::uint64_t seed = 0;
  double gamma = 0.0, beta = 0.0, tau = 0.0, epsilon = 0.0;
  std::vector<EvalPoint> eval_points;
  double best_accuracy = 0.0;
  double wall_time = 0.0;
  std::string status = "ok";  // ok | diverged
  std::string message;

  nlohmann::json to_json() const;
  static ExperimentResult from_json(const nlohmann::json& j);
};

struct ExperimentOptions {
  std::string label;     // reported method label, defaults to the method name
  std::string encoder;   // encoder description recorded for ss
  double gamma = 0.0;    // recorded for ss
  /// When set, the model state at the best evaluation is written here.
  std::filesystem::path checkpoint_path;
  /// When set, test-set penultimate features at the best evaluation are written here (CSV).
  std::filesystem::path features_path;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

/// Trains one classifier with the given objective and records test accuracy every
/// `eval_every` epochs. `soft_labels` must be row-aligned with `train` for ss.
ExperimentResult run_experiment(const LabeledDataset& train, const LabeledDataset& test, const ModelSpec& model_spec,
                                const MethodConfig& method, const TrainConfig& config,
                                const SoftLabelMatrix* soft_labels = nullptr, const ExperimentOptions& options = {});

/// Index of the largest logit; ties go to the lowest index.
int predict_class(std::span<const float> logits);

double evaluate_accuracy(Classifier& model, const LabeledDataset& test);

/// Writes "label,f0,f1,..." rows.
void save_features_csv(const std::filesystem::path& path, const Matrix& features, std::span<const int> labels);
/// Reads a features CSV written by save_features_csv.
void load_features_csv(const std::filesystem::path& path, Matrix& features, std::vector<int>& labels);

}  // namespace softts
