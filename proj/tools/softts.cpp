#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "softts/dataset_io.hpp"
#include "softts/errors.hpp"
#include "softts/pipeline.hpp"
#include "softts/plan.hpp"
#include "softts/representation.hpp"
#include "softts/softlabel.hpp"

namespace {

struct PlanArgs {
  std::string plan;
  bool resume = false;
  int workers = 0;
};

struct EncodeArgs {
  std::string dataset, encoder = "random_conv", reps_file, out;
  int kernels = 256;
  std::uint64_t seed = 0;
  bool no_normalize = false;
  std::string pooling = "max";
};

struct LabelsArgs {
  std::string reps, dataset, out;
  double gamma = 0.001;
  bool strict = false;
  bool no_normalize = false;
};

void add_plan_options(CLI::App* cmd, PlanArgs& args, bool required) {
  auto* opt = cmd->add_option("--plan", args.plan, "experiment plan (JSON)");
  if (required) opt->required();
  cmd->add_flag("--resume", args.resume, "skip cells already in the results file");
  cmd->add_option("--workers", args.workers, "parallel experiment workers (overrides the plan)")->check(CLI::PositiveNumber);
}

int run_plan(softts::Command command, const PlanArgs& args) {
  const auto plan = softts::ExperimentPlan::load(args.plan);
  softts::RunOptions opts;
  opts.resume = args.resume;
  opts.workers = args.workers;
  opts.log = &std::cerr;
  const auto summary = softts::run_pipeline(command, plan, opts);
  if (command == softts::Command::train || command == softts::Command::all) {
    std::cerr << "cells: " << summary.cells_total << " total, " << summary.cells_run << " run, "
              << summary.cells_skipped << " skipped, " << summary.failures.size() << " failed\n";
  }
  if (!summary.failures.empty()) {
    std::cerr << summary.failures.size() << " failure(s):\n";
    for (const auto& f : summary.failures) std::cerr << "  " << f << '\n';
  }
  return summary.exit_code();
}

int standalone_encode(const EncodeArgs& a) {
  const auto data = softts::load_ucr_dataset(a.dataset, !a.no_normalize);
  softts::EncoderSpec spec;
  spec.kind = softts::encoder_kind_from_string(a.encoder);
  if (!a.reps_file.empty()) spec.file_path = a.reps_file;
  spec.num_kernels = a.kernels;
  spec.seed = a.seed;
  spec.pooling = a.pooling == "last" ? softts::Pooling::last : softts::Pooling::max;
  spec.validate();
  const auto reps = softts::encode(data.train, spec);
  softts::save_representations(reps, a.out);
  std::cerr << "wrote " << reps.reps.rows << " x " << reps.reps.cols << " representations to " << a.out << '\n';
  return 0;
}

int standalone_labels(const LabelsArgs& a) {
  const auto data = softts::load_ucr_dataset(a.dataset, !a.no_normalize);
  const auto reps = softts::load_representations(a.reps);
  softts::SoftLabelConfig cfg;
  cfg.gamma = a.gamma;
  cfg.strict_argmax = a.strict;
  cfg.validate();
  const auto soft = softts::build_soft_labels(reps.reps, data.train.labels, data.train.num_classes(), cfg);
  softts::save_soft_labels(soft, a.out);
  const auto report = softts::validate_criteria(soft, data.train.labels);
  std::cerr << "wrote " << soft.probs.rows << " soft labels to " << a.out << "; "
            << report.non_strict_argmax.size() << " rows without a strict true-class argmax, "
            << report.non_monotone.size() << " violating distance ordering\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-label time series classification pipeline"};
  app.require_subcommand(1);

  PlanArgs plan_args;
  EncodeArgs enc;
  LabelsArgs lab;

  auto* encode = app.add_subcommand("encode", "compute encoder representations");
  add_plan_options(encode, plan_args, false);
  encode->add_option("--dataset", enc.dataset, "dataset directory (standalone mode)");
  encode->add_option("--encoder", enc.encoder, "identity | random_conv | precomputed")
      ->check(CLI::IsMember({"identity", "random_conv", "precomputed"}));
  encode->add_option("--reps-file", enc.reps_file, "representation file for the precomputed encoder");
  encode->add_option("--kernels", enc.kernels, "random kernels")->check(CLI::PositiveNumber);
  encode->add_option("--seed", enc.seed, "encoder seed");
  encode->add_option("--pooling", enc.pooling, "max | last")->check(CLI::IsMember({"max", "last"}));
  encode->add_option("--out", enc.out, "output file (standalone mode)");
  encode->add_flag("--no-normalize", enc.no_normalize, "skip z-normalization");

  auto* labels = app.add_subcommand("labels", "build soft-label caches");
  add_plan_options(labels, plan_args, false);
  labels->add_option("--reps", lab.reps, "representation file (standalone mode)");
  labels->add_option("--dataset", lab.dataset, "dataset directory (standalone mode)");
  labels->add_option("--gamma", lab.gamma, "uniform coefficient")->check(CLI::PositiveNumber);
  labels->add_flag("--strict-argmax", lab.strict, "add a small margin to the true-class confidence");
  labels->add_option("--out", lab.out, "output file (standalone mode)");
  labels->add_flag("--no-normalize", lab.no_normalize, "skip z-normalization");

  auto* train = app.add_subcommand("train", "run the experiment matrix");
  add_plan_options(train, plan_args, true);
  auto* report = app.add_subcommand("report", "write tables and figures");
  add_plan_options(report, plan_args, true);
  auto* all = app.add_subcommand("all", "encode, labels, train and report");
  add_plan_options(all, plan_args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (encode->parsed()) {
      if (!plan_args.plan.empty()) return run_plan(softts::Command::encode, plan_args);
      if (enc.dataset.empty() || enc.out.empty()) throw softts::ConfigError("standalone encode needs --dataset and --out");
      return standalone_encode(enc);
    }
    if (labels->parsed()) {
      if (!plan_args.plan.empty()) return run_plan(softts::Command::labels, plan_args);
      if (lab.reps.empty() || lab.dataset.empty() || lab.out.empty()) {
        throw softts::ConfigError("standalone labels needs --reps, --dataset and --out");
      }
      return standalone_labels(lab);
    }
    if (train->parsed()) return run_plan(softts::Command::train, plan_args);
    if (report->parsed()) return run_plan(softts::Command::report, plan_args);
    if (all->parsed()) return run_plan(softts::Command::all, plan_args);
  } catch (const softts::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
