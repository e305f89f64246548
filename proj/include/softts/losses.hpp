#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softts/matrix.hpp"

namespace softts {

enum class Method { baseline, ls, cp, ss };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);  // throws ConfigError

struct MethodConfig {
  Method method = Method::baseline;
  double epsilon = 0.1;  // label-smoothing mix
  double beta = 1.0;     // weight of the penalty / KL term
  double tau = 2.0;      // temperature, ss only

  void validate() const;
};

struct LossValue {
  double total = 0.0;
  double ce_part = 0.0;
  double reg_part = 0.0;
};

/// Loss and its gradient with respect to the logits.
struct LossGrad {
  LossValue value;
  std::vector<double> grad;
};

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0);

LossGrad cross_entropy(std::span<const double> logits, int target);
LossGrad cross_entropy(std::span<const double> logits, std::span<const double> target);

/// (1 - eps) * one_hot(hard) + eps / L.
std::vector<double> smooth_targets(int hard, int num_classes, double epsilon);

/// sum_k p_k ln(p_k / q_k) with 0 ln 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Per-sample objective of the four methods. `soft_confidences` is the cached
/// pre-softmax confidence row for the sample and is required for ss.
LossGrad method_loss(std::span<const double> logits, int hard_label, const MethodConfig& config,
                     std::optional<std::span<const double>> soft_confidences = std::nullopt);

struct BatchLoss {
  LossValue mean;
  Matrix grad;  // B x L, gradient of the mean loss
};

/// Mean of method_loss over the rows of `logits`. `soft_confidences`, when
/// given, is indexed by `sample_index[b]`.
BatchLoss batch_method_loss(const Matrix& logits, std::span<const int> labels, const MethodConfig& config,
                            const Matrix* soft_confidences = nullptr,
                            std::span<const std::size_t> sample_index = {});

}  // namespace softts
