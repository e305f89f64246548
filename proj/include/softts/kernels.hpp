#pragma once

// Data-parallel hot loops. Every kernel has an OpenMP implementation (used by
// the library) and a straightforward serial reference with a different loop
// order, kept for equivalence tests and benchmarks. The OpenMP versions only
// parallelize over independent outputs, so results do not depend on the
// thread count.

#include <cstddef>
#include <span>
#include <vector>

namespace softts::kernels {

/// Geometry of a 1-D convolution over a [batch, channels, length] tensor.
/// Output position t reads input position t * stride + k * dilation - pad_left.
struct Conv1dShape {
  int batch = 1;
  int in_channels = 1;
  int out_channels = 1;
  int in_length = 1;
  int kernel = 1;
  int stride = 1;
  int dilation = 1;
  int pad_left = 0;
  int out_length = 1;

  std::size_t input_size() const { return std::size_t(batch) * in_channels * in_length; }
  std::size_t output_size() const { return std::size_t(batch) * out_channels * out_length; }
  std::size_t weight_size() const { return std::size_t(out_channels) * in_channels * kernel; }
};

/// Output length for explicit left/right zero padding.
int conv_output_length(int in_length, int kernel, int stride, int dilation, int pad_left, int pad_right);

/// One random dilated kernel of the random-convolution encoder.
struct RandomKernel {
  std::vector<double> weights;
  double bias = 0.0;
  int dilation = 1;
  int padding = 0;
};

namespace serial {

// y = conv(x, w) + bias. `bias` may be empty.
void conv1d_forward(const Conv1dShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y);
// gx = d(loss)/dx (overwritten).
void conv1d_backward_input(const Conv1dShape& s, std::span<const float> gy, std::span<const float> w,
                           std::span<float> gx);
// gw += d(loss)/dw, gbias += d(loss)/dbias (gbias may be empty).
void conv1d_backward_weight(const Conv1dShape& s, std::span<const float> gy, std::span<const float> x,
                            std::span<float> gw, std::span<float> gbias);

/// out(m, n) = mean Euclidean distance from row m to rows of class n, for
/// n != labels[m]; own-class entries are NaN. `counts[n]` must be > 0.
void class_mean_distances(std::span<const double> reps, std::size_t n, std::size_t d,
                          std::span<const int> labels, std::span<const std::size_t> counts,
                          std::size_t num_classes, std::span<double> out);

/// Exact t-SNE gradient for a 2-D embedding. `p` is the symmetric N x N
/// affinity matrix. Returns the normalizer Z = sum_{i != j} (1 + |y_i - y_j|^2)^-1.
double tsne_gradient(std::span<const double> p, std::span<const double> y, std::size_t n,
                     std::span<double> grad);

/// Two features per kernel (peak activation and proportion of positive
/// values) for every row of `series` (n x t), written to `out` (n x 2K).
void random_conv_features(std::span<const RandomKernel> kernels, std::span<const double> series,
                          std::size_t n, std::size_t t, bool use_last, std::span<double> out);

}  // namespace serial

namespace omp {

void conv1d_forward(const Conv1dShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y);
void conv1d_backward_input(const Conv1dShape& s, std::span<const float> gy, std::span<const float> w,
                           std::span<float> gx);
void conv1d_backward_weight(const Conv1dShape& s, std::span<const float> gy, std::span<const float> x,
                            std::span<float> gw, std::span<float> gbias);
void class_mean_distances(std::span<const double> reps, std::size_t n, std::size_t d,
                          std::span<const int> labels, std::span<const std::size_t> counts,
                          std::size_t num_classes, std::span<double> out);
double tsne_gradient(std::span<const double> p, std::span<const double> y, std::size_t n,
                     std::span<double> grad);
void random_conv_features(std::span<const RandomKernel> kernels, std::span<const double> series,
                          std::size_t n, std::size_t t, bool use_last, std::span<double> out);

}  // namespace omp

}  // namespace softts::kernels
