#include <algorithm>
#include <cmath>
#include <limits>

#include "softts/kernels.hpp"

namespace softts::kernels {

int conv_output_length(int in_length, int kernel, int stride, int dilation, int pad_left, int pad_right) {
  const int span = (kernel - 1) * dilation + 1;
  const int padded = in_length + pad_left + pad_right;
  if (padded < span) return 0;
  return (padded - span) / stride + 1;
}

namespace serial {

void conv1d_forward(const Conv1dShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y) {
  for (int b = 0; b < s.batch; ++b) {
    for (int o = 0; o < s.out_channels; ++o) {
      for (int t = 0; t < s.out_length; ++t) {
        float acc = bias.empty() ? 0.0f : bias[o];
        for (int i = 0; i < s.in_channels; ++i) {
          for (int k = 0; k < s.kernel; ++k) {
            const int p = t * s.stride + k * s.dilation - s.pad_left;
            if (p < 0 || p >= s.in_length) continue;
            acc += w[(std::size_t(o) * s.in_channels + i) * s.kernel + k] *
                   x[(std::size_t(b) * s.in_channels + i) * s.in_length + p];
          }
        }
        y[(std::size_t(b) * s.out_channels + o) * s.out_length + t] = acc;
      }
    }
  }
}

void conv1d_backward_input(const Conv1dShape& s, std::span<const float> gy, std::span<const float> w,
                           std::span<float> gx) {
  for (int b = 0; b < s.batch; ++b) {
    for (int i = 0; i < s.in_channels; ++i) {
      for (int p = 0; p < s.in_length; ++p) {
        float acc = 0.0f;
        for (int o = 0; o < s.out_channels; ++o) {
          for (int k = 0; k < s.kernel; ++k) {
            const int q = p + s.pad_left - k * s.dilation;
            if (q < 0 || q % s.stride != 0) continue;
            const int t = q / s.stride;
            if (t >= s.out_length) continue;
            acc += w[(std::size_t(o) * s.in_channels + i) * s.kernel + k] *
                   gy[(std::size_t(b) * s.out_channels + o) * s.out_length + t];
          }
        }
        gx[(std::size_t(b) * s.in_channels + i) * s.in_length + p] = acc;
      }
    }
  }
}

void conv1d_backward_weight(const Conv1dShape& s, std::span<const float> gy, std::span<const float> x,
                            std::span<float> gw, std::span<float> gbias) {
  for (int o = 0; o < s.out_channels; ++o) {
    for (int i = 0; i < s.in_channels; ++i) {
      for (int k = 0; k < s.kernel; ++k) {
        double acc = 0.0;
        for (int b = 0; b < s.batch; ++b) {
          for (int t = 0; t < s.out_length; ++t) {
            const int p = t * s.stride + k * s.dilation - s.pad_left;
            if (p < 0 || p >= s.in_length) continue;
            acc += double(gy[(std::size_t(b) * s.out_channels + o) * s.out_length + t]) *
                   x[(std::size_t(b) * s.in_channels + i) * s.in_length + p];
          }
        }
        gw[(std::size_t(o) * s.in_channels + i) * s.kernel + k] += static_cast<float>(acc);
      }
    }
    if (!gbias.empty()) {
      double acc = 0.0;
      for (int b = 0; b < s.batch; ++b)
        for (int t = 0; t < s.out_length; ++t) acc += gy[(std::size_t(b) * s.out_channels + o) * s.out_length + t];
      gbias[o] += static_cast<float>(acc);
    }
  }
}

void class_mean_distances(std::span<const double> reps, std::size_t n, std::size_t d,
                          std::span<const int> labels, std::span<const std::size_t> counts,
                          std::size_t num_classes, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  // Each unordered pair is visited once and credited to both endpoints.
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t j = m + 1; j < n; ++j) {
      if (labels[m] == labels[j]) continue;
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = reps[m * d + k] - reps[j * d + k];
        sq += diff * diff;
      }
      const double dist = std::sqrt(sq);
      out[m * num_classes + std::size_t(labels[j])] += dist;
      out[j * num_classes + std::size_t(labels[m])] += dist;
    }
  }
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      double& v = out[m * num_classes + c];
      v = (int(c) == labels[m]) ? std::numeric_limits<double>::quiet_NaN() : v / double(counts[c]);
    }
  }
}

double tsne_gradient(std::span<const double> p, std::span<const double> y, std::size_t n,
                     std::span<double> grad) {
  std::vector<double> num(n * n, 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      const double q = 1.0 / (1.0 + dx * dx + dy * dy);
      num[i * n + j] = num[j * n + i] = q;
      z += 2.0 * q;
    }
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double q = num[i * n + j];
      const double mult = 4.0 * (p[i * n + j] - q / z) * q;
      grad[2 * i] += mult * (y[2 * i] - y[2 * j]);
      grad[2 * i + 1] += mult * (y[2 * i + 1] - y[2 * j + 1]);
    }
  }
  return z;
}

void random_conv_features(std::span<const RandomKernel> kernels, std::span<const double> series,
                          std::size_t n, std::size_t t, bool use_last, std::span<double> out) {
  const std::size_t nk = kernels.size();
  for (std::size_t k = 0; k < nk; ++k) {
    const RandomKernel& rk = kernels[k];
    const int len = static_cast<int>(rk.weights.size());
    const int out_len = static_cast<int>(t) + 2 * rk.padding - (len - 1) * rk.dilation;
    for (std::size_t s = 0; s < n; ++s) {
      const double* x = series.data() + s * t;
      double peak = -std::numeric_limits<double>::infinity();
      double last = 0.0;
      int positive = 0;
      for (int pos = 0; pos < out_len; ++pos) {
        double acc = rk.bias;
        for (int j = 0; j < len; ++j) {
          const int idx = pos - rk.padding + j * rk.dilation;
          if (idx >= 0 && idx < static_cast<int>(t)) acc += rk.weights[std::size_t(j)] * x[idx];
        }
        peak = std::max(peak, acc);
        last = acc;
        if (acc > 0.0) ++positive;
      }
      out[s * 2 * nk + 2 * k] = use_last ? last : peak;
      out[s * 2 * nk + 2 * k + 1] = out_len > 0 ? double(positive) / out_len : 0.0;
    }
  }
}

}  // namespace serial
}  // namespace softts::kernels
