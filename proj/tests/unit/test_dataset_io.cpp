#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "softts/dataset_io.hpp"
#include "softts/errors.hpp"

using namespace softts;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("softts_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
}

}  // namespace

TEST_CASE("parse accepts tab, comma and space separators") {
  std::istringstream in("1\t0.5\t1.5\n2,3,4\n1 7 8\n");
  const auto recs = parse_ucr_stream(in, "mem");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].label_token == "1");
  CHECK(recs[1].values == std::vector<double>{3, 4});
  CHECK(recs[2].values == std::vector<double>{7, 8});
}

TEST_CASE("missing markers become NaN and malformed numbers name the line") {
  std::istringstream in("1\t0.5\tNaN\t?\n");
  const auto recs = parse_ucr_stream(in, "mem");
  CHECK(std::isnan(recs[0].values[1]));
  CHECK(std::isnan(recs[0].values[2]));

  std::istringstream bad("1\t0.5\n1\tabc\n");
  try {
    parse_ucr_stream(bad, "mem");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }

  std::istringstream empty("");
  CHECK_THROWS_AS(parse_ucr_stream(empty, "mem"), ParseError);
}

TEST_CASE("interpolation fills interior linearly and edges with nearest value") {
  const double nan = std::nan("");
  std::vector<double> v{nan, 1.0, nan, 3.0, nan};
  interpolate_missing(v);
  CHECK(v == std::vector<double>{1.0, 1.0, 2.0, 3.0, 3.0});
  std::vector<double> all{nan, nan};
  CHECK_THROWS(interpolate_missing(all));
}

TEST_CASE("z-normalization gives zero mean and unit variance, constant series stay finite") {
  std::vector<double> v{1, 2, 3, 4};
  z_normalize(v);
  double mean = 0, var = 0;
  for (double x : v) mean += x / 4;
  for (double x : v) var += (x - mean) * (x - mean) / 4;
  CHECK(mean == doctest::Approx(0).epsilon(1e-12));
  CHECK(var == doctest::Approx(1).epsilon(1e-12));
  std::vector<double> c{5, 5, 5};
  z_normalize(c);
  for (double x : c) CHECK(x == 0.0);
}

TEST_CASE("label map orders numeric tokens numerically and is shared with the test split") {
  const auto map = LabelMap::from_tokens({"10", "2", "-1", "2"});
  CHECK(map.tokens() == std::vector<std::string>{"-1", "2", "10"});
  CHECK(map.index_of("10") == 2);
  CHECK(map.index_of("3") == -1);
  CHECK(LabelMap::from_tokens({"b", "a"}).tokens() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("preprocess rejects single-class, ragged and unknown-label inputs") {
  std::vector<RawRecord> one{{"1", {1, 2}}, {"1", {2, 3}}};
  CHECK_THROWS_AS(preprocess(one, "x", Split::train, true), DimensionError);
  std::vector<RawRecord> ragged{{"1", {1, 2}}, {"2", {2, 3, 4}}};
  CHECK_THROWS_AS(preprocess(ragged, "x", Split::train, true), DimensionError);
  std::vector<RawRecord> ok{{"1", {1, 2}}, {"2", {2, 3}}};
  const auto train = preprocess(ok, "x", Split::train, false);
  std::vector<RawRecord> test{{"3", {1, 2}}};
  CHECK_THROWS(preprocess(test, "x", Split::test, false, &train.label_map));
}

TEST_CASE("load_ucr_dataset reads both splits and the fixed-length listing skips padded sets") {
  const auto root = temp_dir("archive");
  fs::create_directories(root / "Toy");
  write(root / "Toy" / "Toy_TRAIN.tsv", "1\t1\t2\t3\n2\t3\t2\t1\n");
  write(root / "Toy" / "Toy_TEST.tsv", "2\t1\t1\t1\n1\t0\t1\t2\n");
  fs::create_directories(root / "Ragged");
  write(root / "Ragged" / "Ragged_TRAIN.tsv", "1\t1\t2\tNaN\n2\t3\t2\t1\n");
  write(root / "Ragged" / "Ragged_TEST.tsv", "1\t1\t2\t3\n2\t3\t2\t1\n");

  const auto pair = load_ucr_dataset(root / "Toy");
  CHECK(pair.train.size() == 2);
  CHECK(pair.test.size() == 2);
  CHECK(pair.train.length() == 3);
  CHECK(pair.test.labels == std::vector<int>{1, 0});
  CHECK(list_fixed_length_datasets(root) == std::vector<std::string>{"Toy"});
  fs::remove_all(root);
}
