#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "softts/matrix.hpp"

namespace softts {

/// Average L2 distance from each sample to every foreign class.
/// Own-class entries are unused and hold NaN.
struct ClassDistanceTable {
  Matrix distances;  // N x L
  std::vector<int> labels;
  int num_classes = 0;

  bool used(std::size_t m, int n) const { return labels[m] != n; }
};

struct SoftLabelConfig {
  double gamma = 0.001;
  double distance_floor = 1e-8;
  // Adds `strict_margin` to the own-class confidence so the true class stays a
  // strict argmax even for two-class problems. Off by default.
  bool strict_argmax = false;
  double strict_margin = 1e-6;

  void validate() const;
};

struct SoftLabelMatrix {
  Matrix probs;        // N x L, rows are softmax(a)
  Matrix confidences;  // N x L, the pre-softmax a
  double gamma = 0.0;
};

ClassDistanceTable average_class_distance(const Matrix& reps, std::span<const int> labels, int num_classes,
                                          double distance_floor = 1e-8);

/// Off-class a = gamma / r; own class gets the sum of the row's off-class entries.
Matrix confidence_scores(const ClassDistanceTable& table, const SoftLabelConfig& config);

/// Row-wise softmax of `a` (max-subtracted).
SoftLabelMatrix soft_labels(const Matrix& a, double gamma = 0.0);

/// Distance table, confidences and softmax in one go (training split only).
SoftLabelMatrix build_soft_labels(const Matrix& reps, std::span<const int> labels, int num_classes,
                                  const SoftLabelConfig& config);

struct SoftLabelReport {
  std::vector<std::size_t> non_strict_argmax;  // rows where the true class is not a strict argmax
  std::vector<std::size_t> non_monotone;       // rows violating distance/probability ordering
  std::size_t rows = 0;

  bool ok() const { return non_strict_argmax.empty() && non_monotone.empty(); }
};

/// Checks the two soft-label criteria: the true class is the strict argmax, and
/// foreign-class probabilities decrease as the average distance grows. When
/// `table` is null the ordering is judged from the confidences (a = gamma / r).
SoftLabelReport validate_criteria(const SoftLabelMatrix& softmat, std::span<const int> labels,
                                  const ClassDistanceTable* table = nullptr);

/// Cache format: "N L gamma", N rows of probabilities, N rows of confidences.
void save_soft_labels(const SoftLabelMatrix& m, const std::filesystem::path& path);
SoftLabelMatrix load_soft_labels(const std::filesystem::path& path);

}  // namespace softts
