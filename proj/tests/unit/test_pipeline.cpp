#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "softts/errors.hpp"
#include "softts/pipeline.hpp"
#include "softts/reporting.hpp"

using namespace softts;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_split(const fs::path& path, std::size_t n, std::uint64_t seed) {
  Matrix x;
  std::vector<int> y;
  oracle::toy_series(n, 16, seed, x, y);
  std::ofstream out(path);
  for (std::size_t i = 0; i < n; ++i) {
    out << (y[i] + 1);
    for (double v : x.row(i)) out << '\t' << v;
    out << '\n';
  }
}

fs::path make_archive(const std::string& tag, const std::vector<std::string>& names) {
  const fs::path root = fs::temp_directory_path() / ("softts_archive_" + tag);
  fs::remove_all(root);
  std::uint64_t seed = 1;
  for (const auto& n : names) {
    fs::create_directories(root / n);
    write_split(root / n / (n + "_TRAIN.tsv"), 12, seed++);
    write_split(root / n / (n + "_TEST.tsv"), 10, seed++);
  }
  return root;
}

json base_plan(const fs::path& archive, const fs::path& out) {
  return json{{"data", {{"archive_root", archive.string()}, {"datasets", {"A", "B"}}}},
              {"encoder", {{"kind", "random_conv"}, {"num_kernels", 8}}},
              {"models", {{{"name", "inceptiontime-1"}, {"base_channels", 4}}}},
              {"methods", {"baseline", "ss"}},
              {"train", {{"epochs", 2}, {"eval_every", 1}, {"batch_size", 8}}},
              {"output_dir", out.string()}};
}

std::string field_of(const json& j) {
  try {
    ExperimentPlan::from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("plan validation names the offending field") {
  const auto archive = make_archive("schema", {"A", "B"});
  auto j = base_plan(archive, "/tmp/x");
  CHECK(field_of(j) == "<accepted>");

  auto bad_method = j;
  bad_method["methods"] = {"baseline", "kd"};
  CHECK(field_of(bad_method) == "methods[1]");

  auto bad_beta = j;
  bad_beta["methods"] = {json{{"name", "ss"}, {"beta", -1}}};
  CHECK(field_of(bad_beta).rfind("methods[0]", 0) == 0);

  auto unknown = j;
  unknown["train"]["epoch"] = 3;
  CHECK(field_of(unknown) == "train.epoch");

  auto bad_model = j;
  bad_model["models"] = {"transformer"};
  CHECK(field_of(bad_model) == "models[0]");

  auto bad_type = j;
  bad_type["train"]["epochs"] = "many";
  CHECK(field_of(bad_type) == "train.epochs");

  auto missing = j;
  missing.erase("output_dir");
  CHECK(field_of(missing) == "output_dir");

  auto dup = j;
  dup["methods"] = {"ss", "ss"};
  CHECK(field_of(dup) == "methods[1]");

  auto enc_on_baseline = j;
  enc_on_baseline["methods"] = {json{{"name", "baseline"}, {"encoder", {{"kind", "identity"}}}}};
  CHECK(field_of(enc_on_baseline) == "methods[0].encoder");
  fs::remove_all(archive);
}

TEST_CASE("default presets fill method hyperparameters per model") {
  CHECK(preset_method(Method::ss, ModelSpec::from_name("inceptiontime")).beta == 1.0);
  CHECK(preset_method(Method::ss, ModelSpec::from_name("inceptiontime-1")).beta == 0.5);
  CHECK(preset_method(Method::ss, ModelSpec::from_name("inceptiontime-2")).beta == 0.5);
  CHECK(preset_method(Method::ss, ModelSpec::from_name("inceptiontime-3")).beta == 0.1);
  CHECK(preset_method(Method::ss, ModelSpec::from_name("lstm-fcn")).beta == 0.1);
  const auto r = preset_method(Method::ss, ModelSpec::from_name("resnet18"));
  CHECK(r.beta == 0.1);
  CHECK(r.tau == 4.0);
  CHECK(preset_method(Method::ss, ModelSpec::from_name("lstm-fcn")).tau == 2.0);
  CHECK(preset_method(Method::ls, ModelSpec{}).epsilon == 0.1);
  CHECK(preset_method(Method::cp, ModelSpec{}).beta == 0.1);
}

TEST_CASE("unknown datasets fail before any work") {
  const auto archive = make_archive("unknown", {"A"});
  const auto out = fs::temp_directory_path() / "softts_out_unknown";
  fs::remove_all(out);
  const auto plan = ExperimentPlan::from_json(base_plan(archive, out));
  try {
    run_pipeline(Command::all, plan);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "data.datasets[1]");
  }
  CHECK_FALSE(fs::exists(out));
  fs::remove_all(archive);
}

TEST_CASE("all, resume and report on a two-dataset plan") {
  const auto archive = make_archive("run", {"A", "B"});
  const auto out = fs::temp_directory_path() / "softts_out_run";
  fs::remove_all(out);
  const auto plan = ExperimentPlan::from_json(base_plan(archive, out));
  const PlanPaths paths{out};

  auto s = run_pipeline(Command::all, plan);
  CHECK(s.exit_code() == 0);
  CHECK(s.cells_run == 4);
  CHECK(read_results(paths.results()).size() == 4);
  CHECK(fs::exists(paths.report_dir() / "table.csv"));
  CHECK_FALSE(fs::exists(paths.report_dir() / "cd_diagram.svg"));
  bool cd_notice = false;
  for (const auto& n : s.notices) cd_notice = cd_notice || n.find("critical difference skipped") != std::string::npos;
  CHECK(cd_notice);
  const auto table = slurp(paths.report_dir() / "table.csv");
  const auto labels_file = paths.soft_labels("A", plan.encoder, plan.softlabel);
  const auto labels_bytes = slurp(labels_file);

  // Keep three records and resume: exactly one new cell runs.
  const auto records = read_results(paths.results());
  {
    std::ofstream trunc(paths.results(), std::ios::trunc);
    for (std::size_t i = 0; i < 3; ++i) trunc << records[i].to_json().dump() << '\n';
  }
  RunOptions resume;
  resume.resume = true;
  s = run_pipeline(Command::train, plan, resume);
  CHECK(s.cells_run == 1);
  CHECK(s.cells_skipped == 3);
  const auto after = read_results(paths.results());
  REQUIRE(after.size() == 4);
  CHECK(after[3].eval_points == records[3].eval_points);

  // A completed plan resumed with `all` trains nothing and reproduces the report bytes.
  s = run_pipeline(Command::all, plan, resume);
  CHECK(s.cells_run == 0);
  CHECK(slurp(paths.report_dir() / "table.csv") == table);
  CHECK(slurp(labels_file) == labels_bytes);

  fs::remove_all(out);
  fs::remove_all(archive);
}

TEST_CASE("commands parse by name") {
  CHECK(command_from_string("report") == Command::report);
  CHECK_THROWS_AS(command_from_string("deploy"), ConfigError);
}
