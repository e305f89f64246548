#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "softts/errors.hpp"
#include "softts/softlabel.hpp"

using namespace softts;

TEST_CASE("average class distance matches the double-loop oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(rng, 60, 12, 2, 6);
    const auto table = average_class_distance(inst.reps, inst.labels, inst.num_classes);
    const auto ref = oracle::naive_class_distance(inst.reps, inst.labels, inst.num_classes);
    for (std::size_t m = 0; m < ref.rows; ++m)
      for (int c = 0; c < inst.num_classes; ++c) {
        if (c == inst.labels[m]) {
          CHECK(std::isnan(table.distances(m, c)));
        } else {
          CHECK(std::abs(table.distances(m, c) - ref(m, c)) < 1e-9);
        }
      }
  }
}

TEST_CASE("hand-computed two-class example") {
  // Points 0 and 3 on a line; class 0 = {0}, class 1 = {3, 5}.
  Matrix x(3, 1);
  x(0, 0) = 0;
  x(1, 0) = 3;
  x(2, 0) = 5;
  const std::vector<int> y{0, 1, 1};
  const auto t = average_class_distance(x, y, 2);
  CHECK(t.distances(0, 1) == doctest::Approx(4.0));
  CHECK(t.distances(1, 0) == doctest::Approx(3.0));
  SoftLabelConfig cfg;
  cfg.gamma = 1.0;
  const auto a = confidence_scores(t, cfg);
  CHECK(a(0, 1) == doctest::Approx(0.25));
  CHECK(a(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("soft labels: rows sum to one, true class wins, farther classes get less") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = oracle::random_instance(rng, 80, 16, 3, 6);
    SoftLabelConfig cfg;
    cfg.gamma = 1.0;
    const auto table = average_class_distance(inst.reps, inst.labels, inst.num_classes);
    const auto soft = soft_labels(confidence_scores(table, cfg), cfg.gamma);
    for (std::size_t m = 0; m < soft.probs.rows; ++m) {
      double sum = 0;
      for (double p : soft.probs.row(m)) sum += p;
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    CHECK(validate_criteria(soft, inst.labels, &table).ok());
  }
}

TEST_CASE("two classes give exactly uniform rows which the validator flags") {
  std::mt19937_64 rng(5);
  const auto inst = oracle::random_instance(rng, 30, 4, 2, 2);
  const auto soft = build_soft_labels(inst.reps, inst.labels, 2, SoftLabelConfig{});
  for (double p : soft.probs.data) CHECK(std::abs(p - 0.5) <= 1e-12);
  const auto report = validate_criteria(soft, inst.labels);
  CHECK(report.non_strict_argmax.size() == inst.labels.size());

  SoftLabelConfig strict;
  strict.strict_argmax = true;
  const auto fixed = build_soft_labels(inst.reps, inst.labels, 2, strict);
  CHECK(validate_criteria(fixed, inst.labels).non_strict_argmax.empty());
}

TEST_CASE("empty classes and non-finite representations are rejected") {
  Matrix x(3, 1, 1.0);
  CHECK_THROWS(average_class_distance(x, std::vector<int>{0, 0, 0}, 2));
  x(1, 0) = std::nan("");
  CHECK_THROWS(average_class_distance(x, std::vector<int>{0, 1, 0}, 2));
  SoftLabelConfig bad;
  bad.gamma = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("distance floor keeps duplicate points finite") {
  Matrix x(2, 2, 1.0);
  const auto t = average_class_distance(x, std::vector<int>{0, 1}, 2);
  CHECK(t.distances(0, 1) == 1e-8);
  const auto soft = build_soft_labels(x, std::vector<int>{0, 1}, 2, SoftLabelConfig{});
  for (double p : soft.probs.data) CHECK(std::isfinite(p));
}

TEST_CASE("soft-label cache round-trips exactly") {
  std::mt19937_64 rng(2);
  const auto inst = oracle::random_instance(rng, 40, 6, 3, 5);
  const auto soft = build_soft_labels(inst.reps, inst.labels, inst.num_classes, SoftLabelConfig{});
  const auto path = std::filesystem::temp_directory_path() / "softts_soft_roundtrip.txt";
  save_soft_labels(soft, path);
  const auto back = load_soft_labels(path);
  CHECK(back.probs == soft.probs);
  CHECK(back.confidences == soft.confidences);
  CHECK(back.gamma == soft.gamma);
  std::filesystem::remove(path);
}
