#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "softts/errors.hpp"
#include "softts/losses.hpp"
#include "softts/models.hpp"
#include "softts/nn/optim.hpp"

using namespace softts;

namespace {

ModelSpec spec_for(const std::string& name, int width, int classes = 3, int length = 32) {
  ModelSpec s = ModelSpec::from_name(name);
  s.base_channels = width;
  s.num_classes = classes;
  s.input_length = length;
  s.seed = 1;
  return s;
}

Matrix random_batch(std::size_t b, std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0, 1);
  Matrix m(b, t);
  for (double& v : m.data) v = d(rng);
  return m;
}

}  // namespace

TEST_CASE("preset names round-trip") {
  for (const char* n : {"inceptiontime", "inceptiontime-1", "inceptiontime-2", "inceptiontime-3", "lstm-fcn", "resnet18"}) {
    CHECK(ModelSpec::from_name(n).name() == n);
  }
  CHECK_THROWS_AS(ModelSpec::from_name("mlp"), ConfigError);
}

TEST_CASE("inception depth orders parameter counts and penultimate width is four filters") {
  std::size_t last = 0;
  for (const char* n : {"inceptiontime-1", "inceptiontime-2", "inceptiontime-3", "inceptiontime"}) {
    auto m = build_model(spec_for(n, 8));
    CHECK(m->parameter_count() > last);
    last = m->parameter_count();
    CHECK(m->feature_dim() == 32);
  }
  CHECK(build_model(spec_for("inceptiontime", 0))->feature_dim() == 128);
}

TEST_CASE("every architecture gives finite logits of the right shape, even on zeros") {
  for (const char* n : {"inceptiontime-2", "lstm-fcn", "resnet18"}) {
    auto m = build_model(spec_for(n, 8, 4, 24));
    const auto out = forward(*m, Matrix(3, 24, 0.0));
    REQUIRE(out.size() == 3);
    for (const auto& o : out) {
      CHECK(o.logits.size() == 4);
      CHECK(int(o.penultimate.size()) == m->feature_dim());
      for (float v : o.logits) CHECK(std::isfinite(v));
    }
  }
  CHECK(build_model(spec_for("lstm-fcn", 8))->feature_dim() == 8 + 8);
  CHECK(build_model(spec_for("resnet18", 8))->feature_dim() == 64);
}

TEST_CASE("too-short series are rejected when the model is built") {
  for (const char* n : {"inceptiontime", "lstm-fcn", "resnet18"}) {
    auto s = spec_for(n, 8);
    s.input_length = s.min_input_length() - 1;
    CHECK_THROWS_AS(build_model(s), DimensionError);
    s.input_length = s.min_input_length();
    CHECK_NOTHROW(build_model(s));
  }
}

TEST_CASE("same seed builds identical models, different seeds differ") {
  const auto x = random_batch(2, 32, 3);
  auto a = build_model(spec_for("inceptiontime-1", 8));
  auto b = build_model(spec_for("inceptiontime-1", 8));
  CHECK(forward(*a, x)[1].logits == forward(*b, x)[1].logits);
  auto s = spec_for("inceptiontime-1", 8);
  s.seed = 2;
  CHECK_FALSE(forward(*build_model(s), x)[1].logits == forward(*a, x)[1].logits);
}

TEST_CASE("a few gradient steps lower the loss for every architecture") {
  for (const char* n : {"inceptiontime-1", "lstm-fcn", "resnet18"}) {
    auto m = build_model(spec_for(n, 8, 3, 24));
    const auto x = random_batch(6, 24, 5);
    const std::vector<int> y{0, 1, 2, 0, 1, 2};
    auto loss_at = [&](bool step) {
      const auto out = m->forward(to_tensor(x), nn::Mode::eval);
      Matrix logits(6, 3);
      for (std::size_t i = 0; i < 18; ++i) logits.data[i] = out.logits.data[i];
      const auto loss = batch_method_loss(logits, y, MethodConfig{});
      if (step) {
        m->forward(to_tensor(x), nn::Mode::train);
        nn::Tensor g(6, 3, 1);
        for (std::size_t i = 0; i < 18; ++i) g.data[i] = float(loss.grad.data[i]);
        nn::zero_grad(m->parameters());
        m->backward(g);
      }
      return loss.mean.total;
    };
    const double before = loss_at(false);
    nn::Adam opt(m->parameters(), 1e-2);
    for (int i = 0; i < 10; ++i) {
      m->reseed_dropout(0);
      loss_at(true);
      opt.step();
    }
    CHECK(loss_at(false) < before);
  }
}

TEST_CASE("checkpoints restore parameters and running statistics") {
  auto a = build_model(spec_for("inceptiontime-1", 8));
  const auto x = random_batch(4, 32, 8);
  a->forward(to_tensor(x), nn::Mode::train);
  const auto path = std::filesystem::temp_directory_path() / "softts_ckpt.bin";
  a->save(path);
  auto s = spec_for("inceptiontime-1", 8);
  s.seed = 99;
  auto b = build_model(s);
  b->load(path);
  CHECK(forward(*a, x)[0].logits == forward(*b, x)[0].logits);
  auto wrong = build_model(spec_for("inceptiontime-2", 8));
  CHECK_THROWS(wrong->load(path));
  std::filesystem::remove(path);
}
