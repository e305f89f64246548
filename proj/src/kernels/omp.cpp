#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "softts/kernels.hpp"

#include "../fixed_sum.hpp"

namespace softts::kernels::omp {

namespace {

// Output positions [lo, hi) whose input index t * stride + off lies in [0, in_length).
std::pair<int, int> valid_range(int off, int stride, int in_length, int out_length) {
  const int lo = off < 0 ? (-off + stride - 1) / stride : 0;
  const int last = in_length - 1 - off;
  const int hi = last < 0 ? 0 : std::min(out_length, last / stride + 1);
  return {lo, std::max(lo, hi)};
}

// Samples per im2col chunk, sized so one column row stays a few KiB.
int chunk_samples(int batch, int out_length) { return std::clamp(2048 / std::max(1, out_length), 1, std::max(1, batch)); }

// Unrolled input for samples [b0, b0 + nb): row (i * K + k) holds, for every
// output position of every sample in the chunk, the input value tap k reads
// (zero where it falls in the padding). Only taps listed in `taps` are filled.
void im2col(const Conv1dShape& s, const float* x, int b0, int nb, const std::vector<int>& taps, float* col) {
  const int C = s.in_channels, K = s.kernel, L = s.in_length, T = s.out_length;
  const std::size_t N = std::size_t(nb) * T;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < C; ++i) {
    for (int k : taps) {
      float* row = col + (std::size_t(i) * K + k) * N;
      const int off = k * s.dilation - s.pad_left;
      const auto [lo, hi] = valid_range(off, s.stride, L, T);
      for (int bb = 0; bb < nb; ++bb) {
        const float* xrow = x + (std::size_t(b0 + bb) * C + i) * L;
        float* dst = row + std::size_t(bb) * T;
        std::fill(dst, dst + lo, 0.0f);
        for (int t = lo; t < hi; ++t) dst[t] = xrow[t * s.stride + off];
        std::fill(dst + hi, dst + T, 0.0f);
      }
    }
  }
}

// Kernel taps that touch at least one real input position.
std::vector<int> live_taps(const Conv1dShape& s) {
  std::vector<int> taps;
  for (int k = 0; k < s.kernel; ++k) {
    const auto [lo, hi] = valid_range(k * s.dilation - s.pad_left, s.stride, s.in_length, s.out_length);
    if (lo < hi) taps.push_back(k);
  }
  return taps;
}

// gyt[o][bb * T + t] = gy[b0 + bb][o][t].
void gather_rows(const Conv1dShape& s, const float* gy, int b0, int nb, float* gyt) {
  const int O = s.out_channels, T = s.out_length;
  const std::size_t N = std::size_t(nb) * T;
  for (int o = 0; o < O; ++o)
    for (int bb = 0; bb < nb; ++bb) {
      const float* src = gy + (std::size_t(b0 + bb) * O + o) * T;
      std::copy(src, src + T, gyt + o * N + std::size_t(bb) * T);
    }
}

}  // namespace

void conv1d_forward(const Conv1dShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y) {
  const int B = s.batch, C = s.in_channels, O = s.out_channels, K = s.kernel, T = s.out_length;
  const int chunk = chunk_samples(B, T);
  const auto taps = live_taps(s);
  std::vector<float> col(std::size_t(C) * K * chunk * T);
  for (int b0 = 0; b0 < B; b0 += chunk) {
    const int nb = std::min(chunk, B - b0);
    const std::size_t N = std::size_t(nb) * T;
    im2col(s, x.data(), b0, nb, taps, col.data());
#pragma omp parallel
    {
      std::vector<float> acc(N);
#pragma omp for schedule(static)
      for (int o = 0; o < O; ++o) {
        std::fill(acc.begin(), acc.end(), bias.empty() ? 0.0f : bias[o]);
        for (int i = 0; i < C; ++i) {
          const float* wrow = w.data() + (std::size_t(o) * C + i) * K;
          for (int k : taps) {
            const float wk = wrow[k];
            const float* src = col.data() + (std::size_t(i) * K + k) * N;
            float* dst = acc.data();
#pragma omp simd
            for (std::size_t n = 0; n < N; ++n) dst[n] += wk * src[n];
          }
        }
        for (int bb = 0; bb < nb; ++bb)
          std::copy_n(acc.data() + std::size_t(bb) * T, T, y.data() + (std::size_t(b0 + bb) * O + o) * T);
      }
    }
  }
}

void conv1d_backward_input(const Conv1dShape& s, std::span<const float> gy, std::span<const float> w,
                           std::span<float> gx) {
  const int B = s.batch, C = s.in_channels, O = s.out_channels, L = s.in_length;
  const int K = s.kernel, S = s.stride, D = s.dilation, T = s.out_length;
  const int chunk = chunk_samples(B, T);
  const auto taps = live_taps(s);
  std::fill(gx.begin(), gx.end(), 0.0f);
  std::vector<float> gyt(std::size_t(O) * chunk * T), gcol(std::size_t(C) * K * chunk * T);
  for (int b0 = 0; b0 < B; b0 += chunk) {
    const int nb = std::min(chunk, B - b0);
    const std::size_t N = std::size_t(nb) * T;
    gather_rows(s, gy.data(), b0, nb, gyt.data());
    // Gradient of the unrolled input, then scattered back per input channel.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < C; ++i) {
      for (int k : taps) {
        float* dst = gcol.data() + (std::size_t(i) * K + k) * N;
        std::fill(dst, dst + N, 0.0f);
        for (int o = 0; o < O; ++o) {
          const float wk = w[(std::size_t(o) * C + i) * K + k];
          const float* src = gyt.data() + o * N;
#pragma omp simd
          for (std::size_t n = 0; n < N; ++n) dst[n] += wk * src[n];
        }
      }
      for (int k : taps) {
        const float* src = gcol.data() + (std::size_t(i) * K + k) * N;
        const int off = k * D - s.pad_left;
        const auto [lo, hi] = valid_range(off, S, L, T);
        for (int bb = 0; bb < nb; ++bb) {
          float* gxrow = gx.data() + (std::size_t(b0 + bb) * C + i) * L;
          const float* g = src + std::size_t(bb) * T;
          for (int t = lo; t < hi; ++t) gxrow[t * S + off] += g[t];
        }
      }
    }
  }
}

void conv1d_backward_weight(const Conv1dShape& s, std::span<const float> gy, std::span<const float> x,
                            std::span<float> gw, std::span<float> gbias) {
  const int B = s.batch, C = s.in_channels, O = s.out_channels, K = s.kernel, T = s.out_length;
  const int chunk = chunk_samples(B, T);
  const auto taps = live_taps(s);
  const std::size_t R = std::size_t(C) * K;
  std::vector<float> gyt(std::size_t(O) * chunk * T), col(R * chunk * T);
  std::vector<double> wacc(std::size_t(O) * R, 0.0), bacc(std::size_t(O), 0.0);
  for (int b0 = 0; b0 < B; b0 += chunk) {
    const int nb = std::min(chunk, B - b0);
    const std::size_t N = std::size_t(nb) * T;
    gather_rows(s, gy.data(), b0, nb, gyt.data());
    im2col(s, x.data(), b0, nb, taps, col.data());
#pragma omp parallel for schedule(static)
    for (int o = 0; o < O; ++o) {
      const float* g = gyt.data() + o * N;
      for (int i = 0; i < C; ++i) {
        for (int k : taps) {
          const float* src = col.data() + (std::size_t(i) * K + k) * N;
          float part = 0.0f;
#pragma omp simd reduction(+ : part)
          for (std::size_t n = 0; n < N; ++n) part += g[n] * src[n];
          wacc[std::size_t(o) * R + std::size_t(i) * K + k] += part;
        }
      }
      float part = 0.0f;
#pragma omp simd reduction(+ : part)
      for (std::size_t n = 0; n < N; ++n) part += g[n];
      bacc[std::size_t(o)] += part;
    }
  }
  for (std::size_t j = 0; j < wacc.size(); ++j) gw[j] += static_cast<float>(wacc[j]);
  if (!gbias.empty())
    for (int o = 0; o < O; ++o) gbias[std::size_t(o)] += static_cast<float>(bacc[std::size_t(o)]);
}

void class_mean_distances(std::span<const double> reps, std::size_t n, std::size_t d,
                          std::span<const int> labels, std::span<const std::size_t> counts,
                          std::size_t num_classes, std::span<double> out) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t mi = 0; mi < nn; ++mi) {
    const auto m = static_cast<std::size_t>(mi);
    double* row = out.data() + m * num_classes;
    std::fill(row, row + num_classes, 0.0);
    const double* rm = reps.data() + m * d;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] == labels[m]) continue;
      const double* rj = reps.data() + j * d;
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = rm[k] - rj[k];
        sq += diff * diff;
      }
      row[labels[j]] += std::sqrt(sq);
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      row[c] = (int(c) == labels[m]) ? std::numeric_limits<double>::quiet_NaN() : row[c] / double(counts[c]);
    }
  }
}

double tsne_gradient(std::span<const double> p, std::span<const double> y, std::size_t n,
                     std::span<double> grad) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
  std::vector<double> row_z(n, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < nn; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    detail::FixedSum acc;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      acc.add(1.0 / (1.0 + dx * dx + dy * dy));
    }
    row_z[i] = acc.value();
  }
  detail::FixedSum total;
  for (double v : row_z) total.add(v);
  const double z = total.value();
  const double inv_z = 1.0 / z;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < nn; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    detail::FixedSum gx, gy;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = y[2 * i] - y[2 * j];
      const double dy = y[2 * i + 1] - y[2 * j + 1];
      const double q = 1.0 / (1.0 + dx * dx + dy * dy);
      const double mult = (p[i * n + j] - q * inv_z) * q;
      gx.add(mult * dx);
      gy.add(mult * dy);
    }
    grad[2 * i] = 4.0 * gx.value();
    grad[2 * i + 1] = 4.0 * gy.value();
  }
  return z;
}

void random_conv_features(std::span<const RandomKernel> kernels, std::span<const double> series,
                          std::size_t n, std::size_t t, bool use_last, std::span<double> out) {
  const std::size_t nk = kernels.size();
  const auto ns = static_cast<std::ptrdiff_t>(n);
  const int len_t = static_cast<int>(t);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < ns; ++si) {
    const auto s = static_cast<std::size_t>(si);
    const double* x = series.data() + s * t;
    double* row = out.data() + s * 2 * nk;
    for (std::size_t k = 0; k < nk; ++k) {
      const RandomKernel& rk = kernels[k];
      const int len = static_cast<int>(rk.weights.size());
      const int out_len = len_t + 2 * rk.padding - (len - 1) * rk.dilation;
      double peak = -std::numeric_limits<double>::infinity();
      double last = 0.0;
      int positive = 0;
      for (int pos = 0; pos < out_len; ++pos) {
        const int base = pos - rk.padding;
        double acc = rk.bias;
        if (base >= 0 && base + (len - 1) * rk.dilation < len_t) {
          for (int j = 0; j < len; ++j) acc += rk.weights[std::size_t(j)] * x[base + j * rk.dilation];
        } else {
          for (int j = 0; j < len; ++j) {
            const int idx = base + j * rk.dilation;
            if (idx >= 0 && idx < len_t) acc += rk.weights[std::size_t(j)] * x[idx];
          }
        }
        peak = std::max(peak, acc);
        last = acc;
        positive += acc > 0.0;
      }
      row[2 * k] = use_last ? last : peak;
      row[2 * k + 1] = out_len > 0 ? double(positive) / out_len : 0.0;
    }
  }
}

}  // namespace softts::kernels::omp
