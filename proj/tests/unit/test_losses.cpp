#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "softts/errors.hpp"
#include "softts/losses.hpp"

using namespace softts;

namespace {

std::vector<double> random_logits(std::mt19937_64& rng, int l) {
  std::normal_distribution<double> n(0.0, 2.0);
  std::vector<double> z(l);
  for (double& v : z) v = n(rng);
  return z;
}

std::vector<double> random_confidences(std::mt19937_64& rng, int l, int hard) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> a(l);
  double sum = 0;
  for (int k = 0; k < l; ++k) {
    if (k == hard) continue;
    a[k] = u(rng);
    sum += a[k];
  }
  a[hard] = sum;
  return a;
}

}  // namespace

TEST_CASE("KL to uniform equals ln L minus entropy") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int l = 2 + int(rng() % 9);
    const auto p = softmax(random_logits(rng, l));
    const std::vector<double> u(l, 1.0 / l);
    double h = 0;
    for (double x : p) h -= x * std::log(x);
    CHECK(std::abs(kl_divergence(p, u) - (std::log(double(l)) - h)) < 1e-8);
  }
}

TEST_CASE("label smoothing mixes hard cross-entropy with the uniform one") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int l = 2 + int(rng() % 9), y = int(rng() % l);
    const double eps = 0.3;
    const auto z = random_logits(rng, l);
    const auto lp = log_softmax(z);
    double uniform_ce = 0;
    for (double v : lp) uniform_ce -= v / l;
    const double mixed = (1 - eps) * (-lp[y]) + eps * uniform_ce;
    CHECK(std::abs(cross_entropy(z, smooth_targets(y, l, eps)).value.total - mixed) < 1e-8);
  }
}

TEST_CASE("every method's gradient matches central differences") {
  std::mt19937_64 rng(3);
  for (Method m : {Method::baseline, Method::ls, Method::cp, Method::ss}) {
    for (int trial = 0; trial < 30; ++trial) {
      const int l = 2 + int(rng() % 9), y = int(rng() % l);
      MethodConfig cfg;
      cfg.method = m;
      cfg.beta = 0.7;
      cfg.tau = 3.0;
      const auto z = random_logits(rng, l);
      const auto a = random_confidences(rng, l, y);
      std::optional<std::span<const double>> soft;
      if (m == Method::ss) soft = std::span<const double>(a);
      const auto analytic = method_loss(z, y, cfg, soft).grad;
      const auto numeric = oracle::numeric_gradient(
          [&](const std::vector<double>& zz) { return method_loss(zz, y, cfg, soft).value.total; }, z);
      CHECK(oracle::max_relative_error(analytic, numeric) < 1e-4);
    }
  }
}

TEST_CASE("ss with vanishing beta is the baseline, huge tau flattens the target") {
  std::mt19937_64 rng(4);
  MethodConfig ss;
  ss.method = Method::ss;
  ss.beta = 1e-12;
  const auto z = random_logits(rng, 5);
  const auto a = random_confidences(rng, 5, 2);
  const double base = method_loss(z, 2, MethodConfig{}).value.total;
  CHECK(std::abs(method_loss(z, 2, ss, std::span<const double>(a)).value.total - base) < 1e-8);
  for (double p : softmax(a, 1e6)) CHECK(std::abs(p - 0.2) < 1e-6);
}

TEST_CASE("batch loss is the mean of per-sample losses and its gradient is scaled") {
  std::mt19937_64 rng(5);
  Matrix logits(3, 4);
  for (double& v : logits.data) v = std::normal_distribution<double>(0, 1)(rng);
  const std::vector<int> labels{0, 3, 1};
  MethodConfig cfg;
  cfg.method = Method::cp;
  cfg.beta = 0.1;
  const auto batch = batch_method_loss(logits, labels, cfg);
  double mean = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto one = method_loss(logits.row(b), labels[b], cfg);
    mean += one.value.total / 3;
    for (std::size_t k = 0; k < 4; ++k) CHECK(batch.grad(b, k) == doctest::Approx(one.grad[k] / 3));
  }
  CHECK(batch.mean.total == doctest::Approx(mean));
}

TEST_CASE("method names and validation") {
  CHECK(method_from_string("ss") == Method::ss);
  CHECK_THROWS_AS(method_from_string("kd"), ConfigError);
  MethodConfig c;
  c.method = Method::ss;
  c.beta = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  MethodConfig ss;
  ss.method = Method::ss;
  const std::vector<double> z{1, 2};
  CHECK_THROWS(method_loss(z, 0, ss));
}
