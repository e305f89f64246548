#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "softts/kernels.hpp"
#include "softts/nn/tensor.hpp"

namespace softts::nn {

/// A differentiable block. forward() caches what backward() needs, so the two
/// must alternate on the same instance.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Mode mode) = 0;
  /// Accumulates parameter gradients and returns d(loss)/d(input).
  virtual Tensor backward(const Tensor& grad) = 0;
  /// Trainable parameters and non-trainable state (e.g. running statistics).
  virtual void collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) {
    (void)params;
    (void)buffers;
  }
  /// Restarts any internal randomness (dropout masks).
  virtual void reseed(std::uint64_t seed) { (void)seed; }
};

using LayerPtr = std::unique_ptr<Layer>;

class Conv1d final : public Layer {
 public:
  Conv1d(int in_channels, int out_channels, int kernel, int stride, int pad_left, int pad_right, bool bias,
         std::mt19937_64& rng, int dilation = 1);
  /// Stride 1 with Keras-style "same" padding (extra element on the right for even kernels).
  static std::unique_ptr<Conv1d> same(int in_channels, int out_channels, int kernel, bool bias, std::mt19937_64& rng);

  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) override;

  int out_length(int in_length) const;
  int out_channels() const { return out_; }

 private:
  kernels::Conv1dShape shape_for(const Tensor& x) const;

  int in_, out_, kernel_, stride_, dilation_, pad_left_, pad_right_;
  Parameter weight_;
  Parameter bias_;
  bool has_bias_;
  Tensor input_;
};

class BatchNorm1d final : public Layer {
 public:
  explicit BatchNorm1d(int channels, double momentum = 0.1, double eps = 1e-5);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) override;

 private:
  int channels_;
  double momentum_, eps_;
  Parameter gamma_, beta_;
  std::vector<float> running_mean_, running_var_;
  Tensor xhat_;
  std::vector<float> inv_std_;
  Mode last_mode_ = Mode::train;
};

class ReLU final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  Tensor output_;
};

class MaxPool1d final : public Layer {
 public:
  MaxPool1d(int kernel, int stride, int pad_left, int pad_right);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  int kernel_, stride_, pad_left_, pad_right_;
  int in_n_ = 0, in_c_ = 0, in_t_ = 0;
  std::vector<int> argmax_;
};

/// [n, c, t] -> [n, c, 1]
class GlobalAvgPool final : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;

 private:
  int in_t_ = 0;
};

/// [n, in, 1] -> [n, out, 1]
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features, std::mt19937_64& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) override;

 private:
  int in_, out_;
  Parameter weight_, bias_;
  Tensor input_;
};

/// Inverted dropout; identity in eval mode.
class Dropout final : public Layer {
 public:
  Dropout(double rate, std::uint64_t seed);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void reseed(std::uint64_t seed) override { rng_.seed(seed); }

 private:
  double rate_;
  std::mt19937_64 rng_;
  std::vector<float> mask_;
};

/// Single-layer LSTM over the length axis: [n, features, t] -> last hidden state [n, hidden, 1].
class Lstm final : public Layer {
 public:
  Lstm(int input_size, int hidden_size, std::mt19937_64& rng);
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) override;

 private:
  int input_, hidden_;
  Parameter w_ih_, w_hh_, bias_;  // gate order: input, forget, cell, output
  Tensor x_;
  // Per step caches, [t][n][4H] gates after activation and [t + 1][n][H] cell/hidden.
  std::vector<float> gates_, cells_, hiddens_;
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential& add(LayerPtr layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }
  Tensor forward(const Tensor& x, Mode mode) override;
  Tensor backward(const Tensor& grad) override;
  void collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) override;
  void reseed(std::uint64_t seed) override;
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<LayerPtr> layers_;
};

}  // namespace softts::nn
