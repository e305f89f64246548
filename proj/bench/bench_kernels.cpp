// Serial reference vs OpenMP kernels on shapes taken from the desk-scale models.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "softts/kernels.hpp"
#include "softts/representation.hpp"

using namespace softts::kernels;

namespace {

std::vector<float> randf(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = d(rng);
  return v;
}

std::vector<double> randd(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Inception branch: 16 -> 16 channels, kernel 40, length 256, batch 32.
Conv1dShape inception_shape() {
  Conv1dShape s;
  s.batch = 32;
  s.in_channels = 16;
  s.out_channels = 16;
  s.in_length = 256;
  s.kernel = 40;
  s.pad_left = 19;
  s.out_length = conv_output_length(256, 40, 1, 1, 19, 20);
  return s;
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const auto s = inception_shape();
  const auto x = randf(s.input_size(), 1), w = randf(s.weight_size(), 2);
  std::vector<float> y(s.output_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      omp::conv1d_forward(s, x, w, {}, y);
    } else {
      serial::conv1d_forward(s, x, w, {}, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_ConvBackwardInput(benchmark::State& state) {
  const auto s = inception_shape();
  const auto gy = randf(s.output_size(), 1), w = randf(s.weight_size(), 2);
  std::vector<float> gx(s.input_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      omp::conv1d_backward_input(s, gy, w, gx);
    } else {
      serial::conv1d_backward_input(s, gy, w, gx);
    }
    benchmark::DoNotOptimize(gx.data());
  }
}

template <bool Parallel>
void BM_ConvBackwardWeight(benchmark::State& state) {
  const auto s = inception_shape();
  const auto gy = randf(s.output_size(), 1), x = randf(s.input_size(), 2);
  std::vector<float> gw(s.weight_size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      omp::conv1d_backward_weight(s, gy, x, gw, {});
    } else {
      serial::conv1d_backward_weight(s, gy, x, gw, {});
    }
    benchmark::DoNotOptimize(gw.data());
  }
}

template <bool Parallel>
void BM_ClassDistances(benchmark::State& state) {
  const std::size_t n = 500, d = 320, classes = 5;
  const auto reps = randd(n * d, 3);
  std::vector<int> labels(n);
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < n; ++i) ++counts[labels[i] = int(i % classes)];
  std::vector<double> out(n * classes);
  for (auto _ : state) {
    if constexpr (Parallel) {
      omp::class_mean_distances(reps, n, d, labels, counts, classes, out);
    } else {
      serial::class_mean_distances(reps, n, d, labels, counts, classes, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_TsneGradient(benchmark::State& state) {
  const std::size_t n = 400;
  auto p = randd(n * n, 4);
  for (double& v : p) v = std::abs(v) / double(n * n);
  const auto y = randd(2 * n, 5);
  std::vector<double> g(2 * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(omp::tsne_gradient(p, y, n, g));
    } else {
      benchmark::DoNotOptimize(serial::tsne_gradient(p, y, n, g));
    }
  }
}

template <bool Parallel>
void BM_RandomConvFeatures(benchmark::State& state) {
  const std::size_t n = 100, t = 300;
  const auto series = randd(n * t, 6);
  const auto kern = softts::make_random_kernels(t, 160, 0);
  std::vector<double> out(n * 320);
  for (auto _ : state) {
    if constexpr (Parallel) {
      omp::random_conv_features(kern, series, n, t, false, out);
    } else {
      serial::random_conv_features(kern, series, n, t, false, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/serial");
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/omp");
BENCHMARK(BM_ConvBackwardInput<false>)->Name("conv_backward_input/serial");
BENCHMARK(BM_ConvBackwardInput<true>)->Name("conv_backward_input/omp");
BENCHMARK(BM_ConvBackwardWeight<false>)->Name("conv_backward_weight/serial");
BENCHMARK(BM_ConvBackwardWeight<true>)->Name("conv_backward_weight/omp");
BENCHMARK(BM_ClassDistances<false>)->Name("class_distances/serial");
BENCHMARK(BM_ClassDistances<true>)->Name("class_distances/omp");
BENCHMARK(BM_TsneGradient<false>)->Name("tsne_gradient/serial");
BENCHMARK(BM_TsneGradient<true>)->Name("tsne_gradient/omp");
BENCHMARK(BM_RandomConvFeatures<false>)->Name("random_conv/serial");
BENCHMARK(BM_RandomConvFeatures<true>)->Name("random_conv/omp");

BENCHMARK_MAIN();
