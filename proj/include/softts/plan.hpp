#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "softts/losses.hpp"
#include "softts/models.hpp"
#include "softts/representation.hpp"
#include "softts/softlabel.hpp"
#include "softts/training.hpp"

namespace softts {

/// One method column of the experiment matrix. Unset hyperparameters take the
/// per-model presets when the plan is resolved.
struct MethodEntry {
  Method method = Method::baseline;
  std::string label;  // report column, defaults to the method name
  std::optional<double> epsilon, beta, tau;
  std::optional<EncoderSpec> encoder;  // ss only; falls back to the plan encoder
};

/// Method hyperparameters for a given model: ls eps 0.1, cp beta 0.1, and the
/// ss beta/tau table (tau 2, or 4 for resnet18; beta 1 for full InceptionTime,
/// 0.5 for the depth-1/2 variants, 0.1 otherwise).
MethodConfig preset_method(Method method, const ModelSpec& model);

struct ReportOptions {
  double alpha = 0.05;
  std::vector<std::pair<std::string, std::string>> tsne;  // (model, dataset)
  std::vector<std::string> tsne_labels{"baseline", "ss"};
  double tsne_perplexity = 0.0;
  std::uint64_t tsne_seed = 0;
};

struct ExperimentPlan {
  std::filesystem::path archive_root;
  std::vector<std::string> datasets;
  bool all_fixed_length = false;
  bool normalize = true;
  EncoderSpec encoder;
  SoftLabelConfig softlabel;
  std::vector<ModelSpec> models;
  std::vector<MethodEntry> methods;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  int workers = 1;
  ReportOptions report;
  std::filesystem::path output_dir;

  /// Throws ConfigError carrying the offending field path (e.g. "methods[1]").
  static ExperimentPlan from_json(const nlohmann::json& j);
  static ExperimentPlan load(const std::filesystem::path& path);

  /// Dataset names to run; every one must exist under archive_root.
  std::vector<std::string> resolve_datasets() const;

  MethodConfig resolve(const MethodEntry& entry, const ModelSpec& model) const;
  std::string label_of(const MethodEntry& entry) const;
  const EncoderSpec& encoder_of(const MethodEntry& entry) const;
  /// Encoders referenced by ss entries, deduplicated, plan order.
  std::vector<EncoderSpec> ss_encoders() const;
};

/// Cache identifier for an encoder (precomputed encoders are named by their directory).
std::string encoder_tag(const EncoderSpec& spec);
/// Encoder for one dataset; precomputed encoders read `<dir>/<dataset>.txt`.
EncoderSpec encoder_for_dataset(const EncoderSpec& spec, const std::string& dataset);

/// Artifact locations under the plan's output directory.
struct PlanPaths {
  std::filesystem::path root;

  std::filesystem::path reps(const std::string& dataset, const EncoderSpec& enc) const;
  std::filesystem::path soft_labels(const std::string& dataset, const EncoderSpec& enc,
                                    const SoftLabelConfig& cfg) const;
  std::filesystem::path results() const { return root / "results.jsonl"; }
  std::filesystem::path features(const std::string& model, const std::string& label, const std::string& dataset,
                                 std::uint64_t seed) const;
  std::filesystem::path checkpoint(const std::string& model, const std::string& label, const std::string& dataset,
                                   std::uint64_t seed) const;
  std::filesystem::path report_dir() const { return root / "report"; }
};

}  // namespace softts
