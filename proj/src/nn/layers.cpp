#include "softts/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "softts/errors.hpp"

namespace softts::nn {

Tensor concat_channels(std::span<const Tensor* const> parts) {
  const Tensor& first = *parts.front();
  int channels = 0;
  for (const Tensor* p : parts) {
    if (p->n != first.n || p->t != first.t) throw DimensionError("concat: batch/length mismatch");
    channels += p->c;
  }
  Tensor out(first.n, channels, first.t);
  for (int b = 0; b < first.n; ++b) {
    int offset = 0;
    for (const Tensor* p : parts) {
      const float* src = p->data.data() + std::size_t(b) * p->c * p->t;
      std::copy(src, src + std::size_t(p->c) * p->t, out.data.data() + (std::size_t(b) * channels + offset) * first.t);
      offset += p->c;
    }
  }
  return out;
}

Tensor slice_channels(const Tensor& x, int begin, int count) {
  Tensor out(x.n, count, x.t);
  for (int b = 0; b < x.n; ++b) {
    const float* src = x.data.data() + (std::size_t(b) * x.c + begin) * x.t;
    std::copy(src, src + std::size_t(count) * x.t, out.data.data() + std::size_t(b) * count * x.t);
  }
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw DimensionError("add: shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

namespace {

void glorot_uniform(std::vector<float>& w, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (float& v : w) v = static_cast<float>(dist(rng));
}

}  // namespace

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, int stride, int pad_left, int pad_right, bool bias,
               std::mt19937_64& rng, int dilation)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      dilation_(dilation),
      pad_left_(pad_left),
      pad_right_(pad_right),
      weight_("conv.weight", std::size_t(out_channels) * in_channels * kernel),
      bias_("conv.bias", bias ? std::size_t(out_channels) : 0),
      has_bias_(bias) {
  glorot_uniform(weight_.value, in_channels * kernel, out_channels * kernel, rng);
}

std::unique_ptr<Conv1d> Conv1d::same(int in_channels, int out_channels, int kernel, bool bias, std::mt19937_64& rng) {
  const int total = kernel - 1;
  return std::make_unique<Conv1d>(in_channels, out_channels, kernel, 1, total / 2, total - total / 2, bias, rng);
}

int Conv1d::out_length(int in_length) const {
  return kernels::conv_output_length(in_length, kernel_, stride_, dilation_, pad_left_, pad_right_);
}

kernels::Conv1dShape Conv1d::shape_for(const Tensor& x) const {
  kernels::Conv1dShape s;
  s.batch = x.n;
  s.in_channels = in_;
  s.out_channels = out_;
  s.in_length = x.t;
  s.kernel = kernel_;
  s.stride = stride_;
  s.dilation = dilation_;
  s.pad_left = pad_left_;
  s.out_length = out_length(x.t);
  return s;
}

Tensor Conv1d::forward(const Tensor& x, Mode) {
  if (x.c != in_) throw DimensionError("conv1d: expected " + std::to_string(in_) + " channels, got " + std::to_string(x.c));
  const auto s = shape_for(x);
  if (s.out_length < 1) throw DimensionError("conv1d: input too short");
  Tensor y(x.n, out_, s.out_length);
  kernels::omp::conv1d_forward(s, x.data, weight_.value, bias_.value, y.data);
  input_ = x;
  return y;
}

Tensor Conv1d::backward(const Tensor& grad) {
  const auto s = shape_for(input_);
  Tensor gx(input_.n, in_, input_.t);
  kernels::omp::conv1d_backward_weight(s, grad.data, input_.data, weight_.grad, bias_.grad);
  kernels::omp::conv1d_backward_input(s, grad.data, weight_.value, gx.data);
  return gx;
}

void Conv1d::collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>&) {
  params.push_back(&weight_);
  if (has_bias_) params.push_back(&bias_);
}

// ---------------------------------------------------------------- BatchNorm1d

BatchNorm1d::BatchNorm1d(int channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_("bn.gamma", std::size_t(channels)),
      beta_("bn.beta", std::size_t(channels)),
      running_mean_(std::size_t(channels), 0.0f),
      running_var_(std::size_t(channels), 1.0f) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode) {
  if (x.c != channels_) throw DimensionError("batchnorm: channel mismatch");
  last_mode_ = mode;
  Tensor y(x.n, x.c, x.t);
  xhat_ = Tensor(x.n, x.c, x.t);
  inv_std_.assign(std::size_t(channels_), 0.0f);
  const double count = double(x.n) * x.t;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < channels_; ++ch) {
    double mean = 0.0, var = 0.0;
    if (mode == Mode::train) {
      for (int b = 0; b < x.n; ++b)
        for (float v : x.channel(b, ch)) mean += v;
      mean /= count;
      for (int b = 0; b < x.n; ++b)
        for (float v : x.channel(b, ch)) var += (v - mean) * (v - mean);
      var /= count;
      const double unbiased = count > 1 ? var * count / (count - 1) : var;
      running_mean_[ch] = float((1 - momentum_) * running_mean_[ch] + momentum_ * mean);
      running_var_[ch] = float((1 - momentum_) * running_var_[ch] + momentum_ * unbiased);
    } else {
      mean = running_mean_[ch];
      var = running_var_[ch];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[ch] = float(inv);
    const float g = gamma_.value[ch], bt = beta_.value[ch];
    for (int b = 0; b < x.n; ++b) {
      auto in = x.channel(b, ch);
      auto xh = xhat_.channel(b, ch);
      auto out = y.channel(b, ch);
      for (int i = 0; i < x.t; ++i) {
        xh[i] = float((in[i] - mean) * inv);
        out[i] = g * xh[i] + bt;
      }
    }
  }
  return y;
}

Tensor BatchNorm1d::backward(const Tensor& grad) {
  Tensor gx(grad.n, grad.c, grad.t);
  const double count = double(grad.n) * grad.t;
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < channels_; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < grad.n; ++b) {
      auto g = grad.channel(b, ch);
      auto xh = xhat_.channel(b, ch);
      for (int i = 0; i < grad.t; ++i) {
        sum_g += g[i];
        sum_gx += double(g[i]) * xh[i];
      }
    }
    gamma_.grad[ch] += float(sum_gx);
    beta_.grad[ch] += float(sum_g);
    const double gm = gamma_.value[ch];
    const double inv = inv_std_[ch];
    for (int b = 0; b < grad.n; ++b) {
      auto g = grad.channel(b, ch);
      auto xh = xhat_.channel(b, ch);
      auto out = gx.channel(b, ch);
      for (int i = 0; i < grad.t; ++i) {
        if (last_mode_ == Mode::train) {
          out[i] = float(gm * inv * (g[i] - sum_g / count - xh[i] * sum_gx / count));
        } else {
          out[i] = float(gm * inv * g[i]);
        }
      }
    }
  }
  return gx;
}

void BatchNorm1d::collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) {
  params.push_back(&gamma_);
  params.push_back(&beta_);
  buffers.push_back(&running_mean_);
  buffers.push_back(&running_var_);
}

// ---------------------------------------------------------------- ReLU

Tensor ReLU::forward(const Tensor& x, Mode) {
  output_ = x;
  for (float& v : output_.data) v = v > 0.0f ? v : 0.0f;
  return output_;
}

Tensor ReLU::backward(const Tensor& grad) {
  Tensor gx = grad;
  for (std::size_t i = 0; i < gx.data.size(); ++i) {
    if (!(output_.data[i] > 0.0f)) gx.data[i] = 0.0f;
  }
  return gx;
}

// ---------------------------------------------------------------- MaxPool1d

MaxPool1d::MaxPool1d(int kernel, int stride, int pad_left, int pad_right)
    : kernel_(kernel), stride_(stride), pad_left_(pad_left), pad_right_(pad_right) {}

Tensor MaxPool1d::forward(const Tensor& x, Mode) {
  const int out_t = kernels::conv_output_length(x.t, kernel_, stride_, 1, pad_left_, pad_right_);
  if (out_t < 1) throw DimensionError("maxpool: input too short");
  in_n_ = x.n;
  in_c_ = x.c;
  in_t_ = x.t;
  Tensor y(x.n, x.c, out_t);
  argmax_.assign(y.size(), 0);
  for (int b = 0; b < x.n; ++b) {
    for (int ch = 0; ch < x.c; ++ch) {
      auto in = x.channel(b, ch);
      const std::size_t base = (std::size_t(b) * x.c + ch) * out_t;
      for (int t = 0; t < out_t; ++t) {
        float best = -std::numeric_limits<float>::infinity();
        int arg = std::clamp(t * stride_ - pad_left_, 0, x.t - 1);
        for (int k = 0; k < kernel_; ++k) {
          const int p = t * stride_ + k - pad_left_;
          if (p < 0 || p >= x.t) continue;
          if (in[p] > best) {
            best = in[p];
            arg = p;
          }
        }
        y.data[base + t] = best;
        argmax_[base + t] = arg;
      }
    }
  }
  return y;
}

Tensor MaxPool1d::backward(const Tensor& grad) {
  Tensor gx(in_n_, in_c_, in_t_);
  for (int b = 0; b < grad.n; ++b) {
    for (int ch = 0; ch < grad.c; ++ch) {
      const std::size_t base = (std::size_t(b) * grad.c + ch) * grad.t;
      auto out = gx.channel(b, ch);
      for (int t = 0; t < grad.t; ++t) out[argmax_[base + t]] += grad.data[base + t];
    }
  }
  return gx;
}

// ---------------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, Mode) {
  in_t_ = x.t;
  Tensor y(x.n, x.c, 1);
  for (int b = 0; b < x.n; ++b) {
    for (int ch = 0; ch < x.c; ++ch) {
      double acc = 0.0;
      for (float v : x.channel(b, ch)) acc += v;
      y.at(b, ch, 0) = float(acc / x.t);
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad) {
  Tensor gx(grad.n, grad.c, in_t_);
  const float scale = 1.0f / float(in_t_);
  for (int b = 0; b < grad.n; ++b) {
    for (int ch = 0; ch < grad.c; ++ch) {
      const float g = grad.at(b, ch, 0) * scale;
      for (float& v : gx.channel(b, ch)) v = g;
    }
  }
  return gx;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, std::mt19937_64& rng)
    : in_(in_features),
      out_(out_features),
      weight_("linear.weight", std::size_t(out_features) * in_features),
      bias_("linear.bias", std::size_t(out_features)) {
  glorot_uniform(weight_.value, in_features, out_features, rng);
}

Tensor Linear::forward(const Tensor& x, Mode) {
  if (x.c * x.t != in_) throw DimensionError("linear: expected " + std::to_string(in_) + " features");
  input_ = x;
  Tensor y(x.n, out_, 1);
  for (int b = 0; b < x.n; ++b) {
    const float* xi = x.data.data() + std::size_t(b) * in_;
    for (int o = 0; o < out_; ++o) {
      const float* w = weight_.value.data() + std::size_t(o) * in_;
      double acc = bias_.value[o];
      for (int i = 0; i < in_; ++i) acc += double(w[i]) * xi[i];
      y.data[std::size_t(b) * out_ + o] = float(acc);
    }
  }
  return y;
}

Tensor Linear::backward(const Tensor& grad) {
  Tensor gx(input_.n, input_.c, input_.t);
  for (int b = 0; b < grad.n; ++b) {
    const float* xi = input_.data.data() + std::size_t(b) * in_;
    float* gxi = gx.data.data() + std::size_t(b) * in_;
    for (int o = 0; o < out_; ++o) {
      const float g = grad.data[std::size_t(b) * out_ + o];
      bias_.grad[o] += g;
      float* gw = weight_.grad.data() + std::size_t(o) * in_;
      const float* w = weight_.value.data() + std::size_t(o) * in_;
      for (int i = 0; i < in_; ++i) {
        gw[i] += g * xi[i];
        gxi[i] += g * w[i];
      }
    }
  }
  return gx;
}

void Linear::collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>&) {
  params.push_back(&weight_);
  params.push_back(&bias_);
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {}

Tensor Dropout::forward(const Tensor& x, Mode mode) {
  mask_.assign(x.size(), 1.0f);
  if (mode == Mode::eval || rate_ <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate_);
  const float scale = float(1.0 / (1.0 - rate_));
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = keep(rng_) ? scale : 0.0f;
    y.data[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad) {
  Tensor gx = grad;
  for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] *= mask_[i];
  return gx;
}

// ---------------------------------------------------------------- Lstm

namespace {
inline float sigmoid(float v) { return 1.0f / (1.0f + std::exp(-v)); }
}  // namespace

Lstm::Lstm(int input_size, int hidden_size, std::mt19937_64& rng)
    : input_(input_size),
      hidden_(hidden_size),
      w_ih_("lstm.w_ih", std::size_t(4) * hidden_size * input_size),
      w_hh_("lstm.w_hh", std::size_t(4) * hidden_size * hidden_size),
      bias_("lstm.bias", std::size_t(4) * hidden_size) {
  const double limit = 1.0 / std::sqrt(double(hidden_size));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (float& v : w_ih_.value) v = float(dist(rng));
  for (float& v : w_hh_.value) v = float(dist(rng));
  // Forget gate starts open.
  for (int h = 0; h < hidden_size; ++h) bias_.value[std::size_t(hidden_size + h)] = 1.0f;
}

Tensor Lstm::forward(const Tensor& x, Mode) {
  if (x.c != input_) throw DimensionError("lstm: feature mismatch");
  x_ = x;
  const int n = x.n, steps = x.t, H = hidden_, G = 4 * hidden_;
  gates_.assign(std::size_t(steps) * n * G, 0.0f);
  cells_.assign(std::size_t(steps + 1) * n * H, 0.0f);
  hiddens_.assign(std::size_t(steps + 1) * n * H, 0.0f);
  std::vector<float> pre(static_cast<std::size_t>(G));
  for (int s = 0; s < steps; ++s) {
    for (int b = 0; b < n; ++b) {
      const float* h_prev = hiddens_.data() + (std::size_t(s) * n + b) * H;
      const float* c_prev = cells_.data() + (std::size_t(s) * n + b) * H;
      for (int g = 0; g < G; ++g) {
        float acc = bias_.value[g];
        for (int i = 0; i < input_; ++i) acc += w_ih_.value[std::size_t(g) * input_ + i] * x.at(b, i, s);
        for (int h = 0; h < H; ++h) acc += w_hh_.value[std::size_t(g) * H + h] * h_prev[h];
        pre[g] = acc;
      }
      float* gate = gates_.data() + (std::size_t(s) * n + b) * G;
      float* c = cells_.data() + (std::size_t(s + 1) * n + b) * H;
      float* hcur = hiddens_.data() + (std::size_t(s + 1) * n + b) * H;
      for (int h = 0; h < H; ++h) {
        const float ig = sigmoid(pre[h]);
        const float fg = sigmoid(pre[H + h]);
        const float cg = std::tanh(pre[2 * H + h]);
        const float og = sigmoid(pre[3 * H + h]);
        gate[h] = ig;
        gate[H + h] = fg;
        gate[2 * H + h] = cg;
        gate[3 * H + h] = og;
        c[h] = fg * c_prev[h] + ig * cg;
        hcur[h] = og * std::tanh(c[h]);
      }
    }
  }
  Tensor y(n, H, 1);
  std::copy_n(hiddens_.data() + std::size_t(steps) * n * H, std::size_t(n) * H, y.data.data());
  return y;
}

Tensor Lstm::backward(const Tensor& grad) {
  const int n = x_.n, steps = x_.t, H = hidden_, G = 4 * hidden_;
  Tensor gx(n, input_, steps);
  std::vector<float> dh(std::size_t(n) * H), dc(std::size_t(n) * H, 0.0f), da(static_cast<std::size_t>(G));
  std::copy(grad.data.begin(), grad.data.end(), dh.begin());
  for (int s = steps - 1; s >= 0; --s) {
    std::vector<float> dh_prev(std::size_t(n) * H, 0.0f);
    for (int b = 0; b < n; ++b) {
      const float* gate = gates_.data() + (std::size_t(s) * n + b) * G;
      const float* c = cells_.data() + (std::size_t(s + 1) * n + b) * H;
      const float* c_prev = cells_.data() + (std::size_t(s) * n + b) * H;
      const float* h_prev = hiddens_.data() + (std::size_t(s) * n + b) * H;
      float* dhb = dh.data() + std::size_t(b) * H;
      float* dcb = dc.data() + std::size_t(b) * H;
      for (int h = 0; h < H; ++h) {
        const float ig = gate[h], fg = gate[H + h], cg = gate[2 * H + h], og = gate[3 * H + h];
        const float tc = std::tanh(c[h]);
        const float d_o = dhb[h] * tc;
        const float d_c = dcb[h] + dhb[h] * og * (1.0f - tc * tc);
        da[h] = d_c * cg * ig * (1.0f - ig);
        da[H + h] = d_c * c_prev[h] * fg * (1.0f - fg);
        da[2 * H + h] = d_c * ig * (1.0f - cg * cg);
        da[3 * H + h] = d_o * og * (1.0f - og);
        dcb[h] = d_c * fg;
      }
      for (int g = 0; g < G; ++g) {
        bias_.grad[g] += da[g];
        for (int i = 0; i < input_; ++i) {
          w_ih_.grad[std::size_t(g) * input_ + i] += da[g] * x_.at(b, i, s);
          gx.at(b, i, s) += w_ih_.value[std::size_t(g) * input_ + i] * da[g];
        }
        for (int h = 0; h < H; ++h) {
          w_hh_.grad[std::size_t(g) * H + h] += da[g] * h_prev[h];
          dh_prev[std::size_t(b) * H + h] += w_hh_.value[std::size_t(g) * H + h] * da[g];
        }
      }
    }
    dh.swap(dh_prev);
  }
  return gx;
}

void Lstm::collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>&) {
  params.push_back(&w_ih_);
  params.push_back(&w_hh_);
  params.push_back(&bias_);
}

// ---------------------------------------------------------------- Sequential

Tensor Sequential::forward(const Tensor& x, Mode mode) {
  Tensor cur = x;
  for (auto& l : layers_) cur = l->forward(cur, mode);
  return cur;
}

Tensor Sequential::backward(const Tensor& grad) {
  Tensor cur = grad;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  return cur;
}

void Sequential::collect(std::vector<Parameter*>& params, std::vector<std::vector<float>*>& buffers) {
  for (auto& l : layers_) l->collect(params, buffers);
}

void Sequential::reseed(std::uint64_t seed) {
  for (auto& l : layers_) l->reseed(seed);
}

}  // namespace softts::nn
