#include <cmath>
#include <random>

#include "doctest.h"
#include "softts/nn/layers.hpp"
#include "softts/nn/optim.hpp"

using namespace softts::nn;

namespace {

Tensor random_tensor(std::mt19937_64& rng, int n, int c, int t) {
  Tensor x(n, c, t);
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (float& v : x.data) v = d(rng);
  return x;
}

double weighted_sum(const Tensor& y, const std::vector<float>& w) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += double(y.data[i]) * w[i];
  return s;
}

// Compares analytic input and parameter gradients of L = sum(w * layer(x)) with
// central differences. Float forward passes limit accuracy, hence the loose bound.
void check_layer(Layer& layer, Tensor x, std::uint64_t seed, double tol = 2e-2) {
  std::mt19937_64 rng(seed);
  layer.reseed(seed);
  const Tensor y = layer.forward(x, Mode::train);
  std::vector<float> w(y.size());
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (float& v : w) v = d(rng);
  std::vector<Parameter*> params;
  std::vector<std::vector<float>*> buffers;
  layer.collect(params, buffers);
  zero_grad(params);
  Tensor gy(y.n, y.c, y.t);
  gy.data = w;
  const Tensor gx = layer.backward(gy);
  REQUIRE(gx.same_shape(x));

  const float h = 1e-3f;
  auto loss = [&]() {
    layer.reseed(seed);
    return weighted_sum(layer.forward(x, Mode::train), w);
  };
  auto compare = [&](float& slot, double analytic) {
    const float keep = slot;
    slot = keep + h;
    const double up = loss();
    slot = keep - h;
    const double down = loss();
    slot = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1.0});
    CHECK(std::abs(numeric - analytic) / scale < tol);
  };
  for (std::size_t i = 0; i < x.size(); i += std::max<std::size_t>(1, x.size() / 25)) compare(x.data[i], gx.data[i]);
  for (Parameter* p : params) {
    const std::vector<float> g = p->grad;
    for (std::size_t i = 0; i < p->value.size(); i += std::max<std::size_t>(1, p->value.size() / 10)) {
      compare(p->value[i], g[i]);
    }
  }
}

}  // namespace

TEST_CASE("conv1d gradients, including stride, dilation and same padding") {
  std::mt19937_64 rng(1);
  Conv1d plain(2, 3, 5, 1, 2, 2, true, rng);
  check_layer(plain, random_tensor(rng, 2, 2, 11), 1);
  Conv1d strided(2, 3, 4, 2, 1, 2, false, rng, 2);
  check_layer(strided, random_tensor(rng, 2, 2, 13), 2);
  auto same = Conv1d::same(1, 2, 10, false, rng);
  CHECK(same->out_length(16) == 16);
  check_layer(*same, random_tensor(rng, 2, 1, 16), 3);
}

TEST_CASE("batch norm, relu, pooling and linear gradients") {
  std::mt19937_64 rng(2);
  BatchNorm1d bn(3);
  check_layer(bn, random_tensor(rng, 4, 3, 5), 4);
  ReLU relu;
  check_layer(relu, random_tensor(rng, 2, 2, 9), 5);
  MaxPool1d pool(3, 2, 1, 1);
  check_layer(pool, random_tensor(rng, 2, 2, 9), 6);
  GlobalAvgPool gap;
  check_layer(gap, random_tensor(rng, 2, 3, 7), 7);
  Linear lin(6, 4, rng);
  check_layer(lin, random_tensor(rng, 3, 6, 1), 8);
}

TEST_CASE("dropout gradient follows its mask and eval mode is the identity") {
  std::mt19937_64 rng(3);
  Dropout drop(0.5, 11);
  check_layer(drop, random_tensor(rng, 2, 4, 6), 9);
  const Tensor x = random_tensor(rng, 1, 2, 3);
  CHECK(drop.forward(x, Mode::eval).data == x.data);
}

TEST_CASE("lstm backprop through time") {
  std::mt19937_64 rng(4);
  Lstm lstm(1, 4, rng);
  check_layer(lstm, random_tensor(rng, 2, 1, 8), 10);
}

TEST_CASE("sequential chains layers and collects their parameters in order") {
  std::mt19937_64 rng(5);
  Sequential seq;
  seq.add(std::make_unique<Conv1d>(1, 2, 3, 1, 1, 1, true, rng));
  seq.add(std::make_unique<BatchNorm1d>(2));
  seq.add(std::make_unique<ReLU>());
  seq.add(std::make_unique<GlobalAvgPool>());
  check_layer(seq, random_tensor(rng, 3, 1, 10), 11);
  std::vector<Parameter*> params;
  std::vector<std::vector<float>*> buffers;
  seq.collect(params, buffers);
  CHECK(params.size() == 4);
  CHECK(buffers.size() == 2);
}

TEST_CASE("batch norm uses running statistics in eval mode") {
  BatchNorm1d bn(1);
  Tensor x(4, 1, 1);
  x.data = {1, 2, 3, 4};
  for (int i = 0; i < 200; ++i) bn.forward(x, Mode::train);
  const Tensor y = bn.forward(x, Mode::eval);
  // Running mean 2.5 and unbiased variance 5/3 after convergence.
  CHECK(y.data[0] == doctest::Approx((1 - 2.5) / std::sqrt(5.0 / 3.0 + 1e-5)).epsilon(1e-3));
}

TEST_CASE("adam and sgd move parameters against the gradient") {
  Parameter p("w", 2);
  p.value = {1.0f, -1.0f};
  p.grad = {2.0f, -2.0f};
  Adam adam({&p}, 0.1);
  adam.step();
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-4));
  CHECK(p.value[1] == doctest::Approx(-0.9).epsilon(1e-4));
  sgd_step({&p}, 0.5);
  CHECK(p.value[0] == doctest::Approx(-0.1).epsilon(1e-4));
}
