#include "softts/softlabel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "softts/errors.hpp"
#include "softts/kernels.hpp"
#include "softts/text_io.hpp"

namespace softts {

void SoftLabelConfig::validate() const {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0", "softlabel.gamma");
  if (!(distance_floor > 0.0)) throw ConfigError("distance_floor must be > 0", "softlabel.distance_floor");
  if (strict_argmax && !(strict_margin > 0.0)) throw ConfigError("strict_margin must be > 0", "softlabel.strict_margin");
}

ClassDistanceTable average_class_distance(const Matrix& reps, std::span<const int> labels, int num_classes,
                                          double distance_floor) {
  if (labels.size() != reps.rows) {
    throw DimensionError("labels (" + std::to_string(labels.size()) + ") and representations (" +
                         std::to_string(reps.rows) + ") disagree");
  }
  if (num_classes < 2) throw DimensionError("need at least 2 classes");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw DimensionError("label " + std::to_string(y) + " out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw DimensionError("class " + std::to_string(c) + " has no training samples");
    }
  }
  for (double v : reps.data) {
    if (!std::isfinite(v)) throw NumericError("non-finite representation");
  }

  ClassDistanceTable table;
  table.labels.assign(labels.begin(), labels.end());
  table.num_classes = num_classes;
  table.distances = Matrix(reps.rows, static_cast<std::size_t>(num_classes));
  kernels::omp::class_mean_distances(reps.data, reps.rows, reps.cols, labels, counts,
                                     static_cast<std::size_t>(num_classes), table.distances.data);
  for (std::size_t m = 0; m < reps.rows; ++m) {
    for (int n = 0; n < num_classes; ++n) {
      if (table.used(m, n)) table.distances(m, n) = std::max(table.distances(m, n), distance_floor);
    }
  }
  return table;
}

Matrix confidence_scores(const ClassDistanceTable& table, const SoftLabelConfig& config) {
  config.validate();
  const std::size_t n = table.distances.rows;
  Matrix a(n, static_cast<std::size_t>(table.num_classes));
  for (std::size_t m = 0; m < n; ++m) {
    double own = 0.0;
    for (int c = 0; c < table.num_classes; ++c) {
      if (!table.used(m, c)) continue;
      const double r = table.distances(m, c);
      if (!(r > 0.0) || !std::isfinite(r)) throw NumericError("invalid class distance in row " + std::to_string(m));
      a(m, c) = config.gamma / r;
      own += a(m, c);
    }
    if (config.strict_argmax) own += config.strict_margin;
    a(m, table.labels[m]) = own;
  }
  return a;
}

SoftLabelMatrix soft_labels(const Matrix& a, double gamma) {
  SoftLabelMatrix out;
  out.gamma = gamma;
  out.confidences = a;
  out.probs = Matrix(a.rows, a.cols);
  for (std::size_t m = 0; m < a.rows; ++m) {
    auto in = a.row(m);
    auto p = out.probs.row(m);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) {
      p[c] = std::exp(in[c] - mx);
      z += p[c];
    }
    for (double& v : p) v /= z;
  }
  return out;
}

SoftLabelMatrix build_soft_labels(const Matrix& reps, std::span<const int> labels, int num_classes,
                                  const SoftLabelConfig& config) {
  const auto table = average_class_distance(reps, labels, num_classes, config.distance_floor);
  return soft_labels(confidence_scores(table, config), config.gamma);
}

SoftLabelReport validate_criteria(const SoftLabelMatrix& softmat, std::span<const int> labels,
                                  const ClassDistanceTable* table) {
  if (labels.size() != softmat.probs.rows) throw DimensionError("labels and soft labels disagree");
  SoftLabelReport report;
  report.rows = labels.size();
  const std::size_t num_classes = softmat.probs.cols;
  for (std::size_t m = 0; m < labels.size(); ++m) {
    const auto p = softmat.probs.row(m);
    const auto y = static_cast<std::size_t>(labels[m]);
    bool strict = true;
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (c != y && !(p[y] > p[c])) strict = false;
    }
    if (!strict) report.non_strict_argmax.push_back(m);

    // Larger distance (smaller confidence) must mean strictly smaller probability;
    // equal distances may give equal probabilities.
    auto closeness = [&](std::size_t c) {
      return table ? -table->distances(m, c) : softmat.confidences(m, c);
    };
    bool monotone = true;
    for (std::size_t c1 = 0; c1 < num_classes && monotone; ++c1) {
      if (c1 == y) continue;
      for (std::size_t c2 = 0; c2 < num_classes; ++c2) {
        if (c2 == y || c2 == c1) continue;
        if (closeness(c1) > closeness(c2) && !(p[c1] > p[c2])) {
          monotone = false;
          break;
        }
      }
    }
    if (!monotone) report.non_monotone.push_back(m);
  }
  return report;
}

void save_soft_labels(const SoftLabelMatrix& m, const std::filesystem::path& path) {
  std::ostringstream os;
  os << m.probs.rows << ' ' << m.probs.cols << ' ' << format_double(m.gamma) << '\n';
  write_matrix_rows(os, m.probs);
  write_matrix_rows(os, m.confidences);
  write_file_atomic(path, os.str());
}

SoftLabelMatrix load_soft_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
  const auto header = parse_numbers(line, path.string() + ":1");
  if (header.size() != 3 || header[0] < 1 || header[1] < 2) {
    throw ParseError(path.string() + ":1: header must be 'N L gamma'");
  }
  const auto n = static_cast<std::size_t>(header[0]);
  const auto l = static_cast<std::size_t>(header[1]);
  SoftLabelMatrix out;
  out.gamma = header[2];
  out.probs = read_matrix_rows(in, n, l, path.string(), 2);
  out.confidences = read_matrix_rows(in, n, l, path.string(), 2 + n);
  return out;
}

}  // namespace softts
