#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "softts/errors.hpp"
#include "softts/kernels.hpp"
#include "softts/reporting.hpp"
#include "fixed_sum.hpp"

namespace softts {

namespace {

// Row-conditional affinities whose entropy matches log(perplexity), found by
// bisection on the precision of each Gaussian.
std::vector<double> conditional_affinities(const Matrix& x, double perplexity) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x(i, k) - x(j, k);
        s += diff * diff;
      }
      dist[i * n + j] = dist[j * n + i] = s;
    }
  }

  const double target = std::log(perplexity);
  std::vector<double> p(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, dist[i * n + j]);
    }
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 100; ++iter) {
      detail::FixedSum sum, weighted;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          row[j] = 0.0;
          continue;
        }
        const double shifted = dist[i * n + j] - dmin;
        row[j] = std::exp(-beta * shifted);
        sum.add(row[j]);
        weighted.add(shifted * row[j]);
      }
      const double entropy = std::log(sum.value()) + beta * weighted.value() / sum.value();
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    detail::FixedSum total;
    for (std::size_t j = 0; j < n; ++j) total.add(row[j]);
    const double sum = total.value();
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j] / sum;
  }
  return p;
}

}  // namespace

Matrix tsne_initial_layout(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1e-4);
  Matrix y(n, 2);
  for (double& v : y.data) v = normal(rng);
  return y;
}

Matrix tsne_embed(const Matrix& features, const TsneOptions& options, const Matrix* initial) {
  const std::size_t n = features.rows;
  if (n < 4) throw DimensionError("t-SNE needs at least 4 points, got " + std::to_string(n));
  for (double v : features.data) {
    if (!std::isfinite(v)) throw NumericError("t-SNE input contains non-finite values");
  }
  bool identical = true;
  for (std::size_t i = 1; i < n && identical; ++i)
    for (std::size_t k = 0; k < features.cols && identical; ++k) identical = features(i, k) == features(0, k);
  if (identical) throw NumericError("t-SNE input rows are all identical");

  const double perplexity = options.perplexity > 0.0 ? options.perplexity : std::min(30.0, double(n - 1) / 3.0);
  if (double(n) <= 3.0 * perplexity) {
    throw DimensionError("t-SNE perplexity " + std::to_string(perplexity) + " too large for " + std::to_string(n) +
                         " points");
  }
  if (options.iterations < 1 || options.learning_rate <= 0.0) throw ConfigError("invalid t-SNE options", "tsne");

  const auto cond = conditional_affinities(features, perplexity);
  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      p[i * n + j] = std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * double(n)), 1e-12);
  for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 0.0;

  Matrix y;
  if (initial) {
    if (initial->rows != n || initial->cols != 2) throw DimensionError("t-SNE initial layout must be N x 2");
    y = *initial;
  } else {
    y = tsne_initial_layout(n, options.seed);
  }

  std::vector<double> exaggerated(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) exaggerated[i] = p[i] * options.exaggeration;

  std::vector<double> grad(2 * n), update(2 * n, 0.0), gains(2 * n, 1.0);
  for (int it = 0; it < options.iterations; ++it) {
    const bool early = it < options.exaggeration_iterations;
    const double momentum = early ? 0.5 : 0.8;
    kernels::omp::tsne_gradient(early ? exaggerated : p, y.data, n, grad);
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const bool flipped = update[k] * grad[k] < 0.0;
      gains[k] = flipped ? gains[k] + 0.2 : std::max(gains[k] * 0.8, 0.01);
      update[k] = momentum * update[k] - options.learning_rate * gains[k] * grad[k];
      y.data[k] += update[k];
    }
    for (std::size_t c = 0; c < 2; ++c) {
      detail::FixedSum total;
      for (std::size_t i = 0; i < n; ++i) total.add(y(i, c));
      const double mean = total.value() / double(n);
      for (std::size_t i = 0; i < n; ++i) y(i, c) -= mean;
    }
  }
  return y;
}

}  // namespace softts
