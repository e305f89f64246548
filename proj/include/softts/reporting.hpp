#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "softts/matrix.hpp"
#include "softts/training.hpp"

namespace softts {

/// Reads a JSON-lines results file. Malformed lines (e.g. a partially written
/// final line) are skipped; their count is returned through `skipped`.
std::vector<ExperimentResult> read_results(const std::filesystem::path& path, std::size_t* skipped = nullptr);

/// Mean best accuracy over seeds for every (model, label, dataset).
struct AccuracyCube {
  // model -> label -> dataset -> mean over seeds
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> cells;
};
AccuracyCube collect_accuracies(const std::vector<ExperimentResult>& records);

struct ResultsTable {
  std::vector<std::string> models;
  std::vector<std::string> methods;       // column labels
  Matrix means;                           // models x methods, unweighted mean over datasets
  std::vector<std::size_t> dataset_count; // per model
};

/// Average accuracy per (model, method label). `model_filter` keeps one model;
/// `method_order` fixes the column order (labels not listed are appended sorted).
/// Throws CoverageError naming the gaps when a model's methods cover different datasets.
ResultsTable aggregate_table(const std::vector<ExperimentResult>& records,
                             const std::optional<std::string>& model_filter = std::nullopt,
                             const std::vector<std::string>& method_order = {});

/// Fractional ranking: the highest score gets rank 1, ties share the mean rank.
std::vector<double> fractional_ranks(std::span<const double> scores);

/// Two-sided Wilcoxon signed-rank p-value (Pratt zero handling; exact for
/// small samples without ties or zeros, normal approximation otherwise).
double wilcoxon_signed_rank_p(std::span<const double> a, std::span<const double> b);

/// Friedman chi-square statistic (tie-corrected) and p-value over a datasets x methods score matrix.
std::pair<double, double> friedman_test(const Matrix& scores);

struct RankReport {
  std::string model;
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  Matrix ranks;                      // datasets x methods
  std::vector<double> average_ranks; // per method
  double friedman_statistic = 0.0;
  double friedman_p = 1.0;
  Matrix pairwise_p;                 // methods x methods, raw Wilcoxon p-values
  std::vector<std::vector<bool>> significant;  // after Holm correction
  std::vector<std::vector<std::string>> cliques;  // groups with no significant difference
};

/// Ranks methods per dataset and groups statistically indistinguishable ones
/// (Friedman test, then pairwise Wilcoxon signed-rank with Holm correction).
RankReport critical_difference(const std::vector<ExperimentResult>& records, const std::string& model,
                               double alpha = 0.05, const std::vector<std::string>& method_order = {});

struct TsneOptions {
  double perplexity = 0.0;  // <= 0 selects min(30, (N - 1) / 3)
  int iterations = 1000;
  int exaggeration_iterations = 250;
  double exaggeration = 12.0;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

/// Exact t-SNE to two dimensions. `initial` (N x 2) overrides the seeded
/// Gaussian initialization.
Matrix tsne_embed(const Matrix& features, const TsneOptions& options = {}, const Matrix* initial = nullptr);

/// Seeded N(0, 1e-4) initial layout used by tsne_embed.
Matrix tsne_initial_layout(std::size_t n, std::uint64_t seed);

// ---- figures and tables

struct ScatterPoint {
  std::string dataset;
  double baseline = 0.0;
  double method = 0.0;
};

/// Per-dataset accuracy of `method_label` against `baseline_label` for one model.
std::vector<ScatterPoint> scatter_points(const std::vector<ExperimentResult>& records, const std::string& model,
                                         const std::string& method_label = "ss",
                                         const std::string& baseline_label = "baseline");

struct TsnePanel {
  std::string title;
  Matrix coords;  // N x 2
  std::vector<int> labels;
};

enum class FigureKind { cd_diagram, scatter_compare, tsne_plot };

/// SVG markup; the writers below save it to disk.
std::string cd_diagram_svg(const std::vector<RankReport>& reports);
std::string scatter_svg(const std::vector<ScatterPoint>& points, const std::string& model,
                        const std::string& method_label = "ss", const std::string& baseline_label = "baseline");
std::string tsne_svg(const std::vector<TsnePanel>& panels);

void write_cd_diagram(const std::vector<RankReport>& reports, const std::filesystem::path& path);
void write_scatter(const std::vector<ScatterPoint>& points, const std::string& model, const std::filesystem::path& path,
                   const std::string& method_label = "ss", const std::string& baseline_label = "baseline");
void write_tsne(const std::vector<TsnePanel>& panels, const std::filesystem::path& svg_path,
                const std::filesystem::path& csv_path);

void write_table_csv(const ResultsTable& table, const std::filesystem::path& path);
void write_ranks_csv(const std::vector<RankReport>& reports, const std::filesystem::path& path);

}  // namespace softts
