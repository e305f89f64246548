#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace softts::nn {

/// Dense float tensor laid out as [batch, channels, length].
struct Tensor {
  int n = 0;
  int c = 0;
  int t = 0;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int batch, int channels, int length, float fill = 0.0f)
      : n(batch), c(channels), t(length), data(std::size_t(batch) * channels * length, fill) {}

  std::size_t size() const { return data.size(); }
  float& at(int b, int ch, int i) { return data[(std::size_t(b) * c + ch) * t + i]; }
  float at(int b, int ch, int i) const { return data[(std::size_t(b) * c + ch) * t + i]; }
  std::span<float> channel(int b, int ch) { return {data.data() + (std::size_t(b) * c + ch) * t, std::size_t(t)}; }
  std::span<const float> channel(int b, int ch) const {
    return {data.data() + (std::size_t(b) * c + ch) * t, std::size_t(t)};
  }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && t == o.t; }
};

/// Stacks tensors with equal batch and length along the channel axis.
Tensor concat_channels(std::span<const Tensor* const> parts);
/// Inverse of concat_channels for a gradient: slices channels [begin, begin + count).
Tensor slice_channels(const Tensor& x, int begin, int count);
/// a += b (same shape).
void add_inplace(Tensor& a, const Tensor& b);

struct Parameter {
  std::string name;
  std::vector<float> value;
  std::vector<float> grad;

  Parameter() = default;
  Parameter(std::string nm, std::size_t size) : name(std::move(nm)), value(size, 0.0f), grad(size, 0.0f) {}
};

enum class Mode { train, eval };

}  // namespace softts::nn
