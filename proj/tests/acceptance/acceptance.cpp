// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero if
// any criterion fails. The desk-scale study (criteria 7, 8 and 10) trains 45
// small networks and takes several minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "softts/dataset_io.hpp"
#include "softts/losses.hpp"
#include "softts/pipeline.hpp"
#include "softts/reporting.hpp"
#include "softts/softlabel.hpp"
#include "softts/training.hpp"

using namespace softts;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o) {
  std::printf("[%s] criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome soft_label_invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::size_t bad_sum = 0, bad_argmax = 0, bad_order = 0, rows = 0;
  for (int inst_id = 0; inst_id < 200; ++inst_id) {
    const auto inst = oracle::random_instance(rng, 100, 16, 3, 6);
    const auto soft = build_soft_labels(inst.reps, inst.labels, inst.num_classes, SoftLabelConfig{});
    const auto r = oracle::naive_class_distance(inst.reps, inst.labels, inst.num_classes);
    for (std::size_t m = 0; m < soft.probs.rows; ++m, ++rows) {
      const int y = inst.labels[m];
      double sum = 0;
      for (double p : soft.probs.row(m)) sum += p;
      if (std::abs(sum - 1.0) > 1e-9) ++bad_sum;
      for (int c = 0; c < inst.num_classes; ++c) {
        if (c != y && !(soft.probs(m, y) > soft.probs(m, c))) {
          ++bad_argmax;
          break;
        }
      }
      bool ordered = true;
      for (int a = 0; a < inst.num_classes; ++a)
        for (int b = 0; b < inst.num_classes; ++b)
          if (a != y && b != y && r(m, a) < r(m, b) && !(soft.probs(m, a) > soft.probs(m, b))) ordered = false;
      if (!ordered) ++bad_order;
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = bad_sum == 0 && bad_argmax == 0 && bad_order == 0 && secs < 10.0;
  o.detail = std::to_string(rows) + " rows; sum violations " + std::to_string(bad_sum) + ", argmax violations " +
             std::to_string(bad_argmax) + ", ordering violations " + std::to_string(bad_order) + ", " +
             fmt("%.2f s", secs);
  return o;
}

Outcome distance_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int inst_id = 0; inst_id < 200; ++inst_id) {
    const auto inst = oracle::random_instance(rng, 100, 16, 3, 6);
    const auto got = average_class_distance(inst.reps, inst.labels, inst.num_classes);
    const auto want = oracle::naive_class_distance(inst.reps, inst.labels, inst.num_classes);
    for (std::size_t m = 0; m < want.rows; ++m)
      for (int c = 0; c < inst.num_classes; ++c)
        if (c != inst.labels[m]) worst = std::max(worst, std::abs(got.distances(m, c) - want(m, c)));
  }
  return {worst <= 1e-9, "max abs error " + fmt("%.3g", worst) + " over 200 instances"};
}

Outcome loss_identities() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 2.0);
  double worst_kl = 0, worst_ls = 0;
  for (int i = 0; i < 1000; ++i) {
    const int l = 2 + int(rng() % 9), y = int(rng() % l);
    std::vector<double> z(l);
    for (double& v : z) v = normal(rng);
    const auto p = softmax(z);
    double h = 0;
    for (double v : p) h -= v * std::log(v);
    const std::vector<double> u(l, 1.0 / l);
    worst_kl = std::max(worst_kl, std::abs(kl_divergence(p, u) - (std::log(double(l)) - h)));
    const double eps = 0.1;
    const auto lp = log_softmax(z);
    double uniform_ce = 0;
    for (double v : lp) uniform_ce -= v / l;
    const double mixed = (1 - eps) * (-lp[y]) + eps * uniform_ce;
    worst_ls = std::max(worst_ls, std::abs(cross_entropy(z, smooth_targets(y, l, eps)).value.total - mixed));
  }

  double worst_grad = 0;
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  for (Method m : {Method::baseline, Method::ls, Method::cp, Method::ss}) {
    for (int l = 2; l <= 10; ++l) {
      for (int rep = 0; rep < 20; ++rep) {
        const int y = int(rng() % l);
        MethodConfig cfg;
        cfg.method = m;
        cfg.beta = 0.5;
        cfg.tau = 2.0;
        std::vector<double> z(l), a(l, 0.0);
        for (double& v : z) v = normal(rng);
        for (int k = 0; k < l; ++k)
          if (k != y) a[k] = unit(rng), a[y] += a[k];
        std::optional<std::span<const double>> soft;
        if (m == Method::ss) soft = std::span<const double>(a);
        const auto analytic = method_loss(z, y, cfg, soft).grad;
        const auto numeric = oracle::numeric_gradient(
            [&](const std::vector<double>& zz) { return method_loss(zz, y, cfg, soft).value.total; }, z);
        worst_grad = std::max(worst_grad, oracle::max_relative_error(analytic, numeric));
      }
    }
  }
  Outcome o;
  o.pass = worst_kl <= 1e-8 && worst_ls <= 1e-8 && worst_grad < 1e-4;
  o.detail = "KL identity err " + fmt("%.2g", worst_kl) + ", LS mixing err " + fmt("%.2g", worst_ls) +
             ", worst gradient rel err " + fmt("%.2g", worst_grad) + " (4 losses, L=2..10)";
  return o;
}

Outcome binary_degeneracy() {
  std::mt19937_64 rng(3);
  std::size_t rows = 0, flagged = 0;
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const auto inst = oracle::random_instance(rng, 100, 16, 2, 2);
    const auto soft = build_soft_labels(inst.reps, inst.labels, 2, SoftLabelConfig{});
    for (double p : soft.probs.data) worst = std::max(worst, std::abs(p - 0.5));
    const auto rep = validate_criteria(soft, inst.labels);
    rows += rep.rows;
    flagged += rep.non_strict_argmax.size();
  }
  return {worst <= 1e-12 && flagged == rows,
          "max |p - 0.5| " + fmt("%.2g", worst) + ", flagged " + std::to_string(flagged) + " of " +
              std::to_string(rows) + " rows"};
}

Outcome continuity() {
  // Confidences come from the soft-label construction itself, as in training.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 2.0);
  oracle::Instance inst;
  do {
    inst = oracle::random_instance(rng, 64, 8, 5, 5);
  } while (inst.reps.rows < 40);
  const auto soft = build_soft_labels(inst.reps, inst.labels, 5, SoftLabelConfig{});
  const std::size_t b = inst.reps.rows;
  Matrix logits(b, 5);
  std::vector<std::size_t> idx(b);
  for (double& v : logits.data) v = normal(rng);
  for (std::size_t i = 0; i < b; ++i) idx[i] = i;
  MethodConfig ss;
  ss.method = Method::ss;
  ss.beta = 1e-12;
  const double base = batch_method_loss(logits, inst.labels, MethodConfig{}).mean.total;
  const double near = batch_method_loss(logits, inst.labels, ss, &soft.confidences, idx).mean.total;
  double worst_uniform = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (double p : softmax(soft.confidences.row(i), 1e6)) worst_uniform = std::max(worst_uniform, std::abs(p - 0.2));
  }
  return {std::abs(near - base) <= 1e-8 && worst_uniform <= 1e-6,
          "|ss(beta=1e-12) - baseline| " + fmt("%.2g", std::abs(near - base)) + " over " + std::to_string(b) +
              " samples, target at tau=1e6 deviates " + fmt("%.2g", worst_uniform) + " from uniform"};
}

LabeledDataset toy_split(std::uint64_t seed, Split split) {
  LabeledDataset d;
  d.name = "toy";
  d.split = split;
  oracle::toy_series(40, 16, seed, d.samples, d.labels);
  d.label_map = LabelMap::from_tokens({"0", "1"});
  return d;
}

Outcome smoke_training() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto train = toy_split(11, Split::train), test = toy_split(12, Split::test);

  // Linear-probe oracle: nearest class centroid must already separate the toy set.
  std::vector<double> c0(16, 0.0), c1(16, 0.0);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t t = 0; t < 16; ++t) (train.labels[i] ? c1 : c0)[t] += train.samples(i, t) / 20.0;
  int probe_correct = 0;
  for (std::size_t i = 0; i < 40; ++i) {
    double d0 = 0, d1 = 0;
    for (std::size_t t = 0; t < 16; ++t) {
      d0 += std::pow(test.samples(i, t) - c0[t], 2);
      d1 += std::pow(test.samples(i, t) - c1[t], 2);
    }
    probe_correct += int((d1 < d0) == (test.labels[i] == 1));
  }

  TrainConfig cfg;
  cfg.epochs = 200;
  const auto r = run_experiment(train, test, ModelSpec::from_name("inceptiontime"), MethodConfig{}, cfg);
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = probe_correct == 40 && r.best_accuracy == 1.0 && secs < 120.0;
  o.detail = "centroid probe " + std::to_string(probe_correct) + "/40, inceptiontime baseline best accuracy " +
             fmt("%.4f", r.best_accuracy) + ", " + fmt("%.1f s", secs);
  return o;
}

struct DeskRun {
  ExperimentPlan plan;
  RunSummary summary;
  std::vector<ExperimentResult> records;
  double seconds = 0;
};

DeskRun desk_study(const fs::path& out_dir) {
  DeskRun run;
  run.plan = ExperimentPlan::load(fs::path(SOFTTS_SOURCE_DIR) / "configs" / "desk-scale.json");
  if (run.plan.archive_root.is_relative()) run.plan.archive_root = fs::path(SOFTTS_SOURCE_DIR) / run.plan.archive_root;
  run.plan.output_dir = out_dir;
  fs::remove_all(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  RunOptions opts;
  opts.log = &std::cerr;
  run.summary = run_pipeline(Command::all, run.plan, opts);
  run.seconds = seconds_since(t0);
  run.records = read_results(PlanPaths{out_dir}.results());
  return run;
}

Outcome directional_study(const DeskRun& run) {
  const std::size_t expected =
      run.plan.datasets.size() * run.plan.models.size() * run.plan.methods.size() * run.plan.seeds.size();
  Outcome o;
  if (run.summary.exit_code() != 0 || run.records.size() != expected) {
    o.pass = false;
    o.detail = "pipeline errors: " + std::to_string(run.summary.failures.size()) + " failures, " +
               std::to_string(run.records.size()) + "/" + std::to_string(expected) + " records";
    return o;
  }
  const auto table = aggregate_table(run.records, std::nullopt, {"baseline", "ss", "ss-noenc"});
  const auto ranks = critical_difference(run.records, "inceptiontime-1", 0.05, {"baseline", "ss", "ss-noenc"});
  std::ostringstream d;
  d << run.records.size() << " cells in " << fmt("%.0f s", run.seconds) << "; mean acc";
  for (std::size_t j = 0; j < table.methods.size(); ++j) d << ' ' << table.methods[j] << '=' << fmt("%.4f", table.means(0, j));
  d << "; avg rank";
  for (std::size_t j = 0; j < ranks.methods.size(); ++j) d << ' ' << ranks.methods[j] << '=' << fmt("%.2f", ranks.average_ranks[j]);
  const double base = table.means(0, 0), ss = table.means(0, 1);
  d << "; direction ss >= baseline - 0.01: " << (ss >= base - 0.01 ? "yes" : "no") << " (informational)";
  o.detail = d.str();
  return o;
}

Outcome ablation_parity(const DeskRun& run) {
  const PlanPaths paths{run.plan.output_dir};
  std::size_t noenc = 0, ss = 0;
  for (const auto& r : run.records) {
    if (r.label == "ss-noenc" && r.encoder == "identity" && r.method == "ss") ++noenc;
    if (r.label == "ss" && r.method == "ss") ++ss;
  }
  EncoderSpec identity;
  identity.kind = EncoderKind::identity;
  std::size_t matched = 0;
  for (const auto& ds : run.plan.datasets) {
    const auto pair = load_ucr_dataset(run.plan.archive_root / ds, run.plan.normalize);
    const auto fresh = build_soft_labels(pair.train.samples, pair.train.labels, pair.train.num_classes(), run.plan.softlabel);
    const auto cached = load_soft_labels(paths.soft_labels(ds, identity, run.plan.softlabel));
    if (cached.confidences == fresh.confidences && cached.probs == fresh.probs) ++matched;
  }
  const bool table_ok = slurp(paths.report_dir() / "table.csv").find("ss-noenc") != std::string::npos;
  Outcome o;
  o.pass = noenc == ss && noenc > 0 && matched == run.plan.datasets.size() && table_ok;
  o.detail = "identity-encoder cells " + std::to_string(noenc) + " (encoder cells " + std::to_string(ss) +
             "), raw-series soft labels match cache on " + std::to_string(matched) + "/" +
             std::to_string(run.plan.datasets.size()) + " datasets, table column " + (table_ok ? "present" : "missing");
  return o;
}

Outcome reporting_oracles() {
  std::mt19937_64 rng(9);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + int(rng() % 5), n = 1 + int(rng() % 20);
    for (int i = 0; i < n; ++i) {
      std::vector<double> s(k);
      for (double& v : s) v = double(rng() % 5) / 5.0;
      const auto got = fractional_ranks(s);
      const auto want = oracle::brute_force_ranks(s);
      for (int j = 0; j < k; ++j)
        if (std::abs(got[j] - want[j]) > 1e-12) ++mismatches;
    }
  }

  std::vector<ExperimentResult> tie;
  for (const char* ds : {"a", "b", "c", "d", "e"})
    for (const char* m : {"baseline", "ss", "ls", "cp"}) {
      ExperimentResult r;
      r.dataset = ds;
      r.model = "resnet18";
      r.method = r.label = m;
      r.best_accuracy = 0.75;
      tie.push_back(r);
    }
  const auto cd = critical_difference(tie, "resnet18");
  const bool one_clique = cd.cliques.size() == 1 && cd.cliques[0].size() == 4;

  std::vector<ExperimentResult> means;
  const double acc[2][3] = {{0.6, 0.8, 0.7}, {0.9, 0.5, 0.4}};
  const char* labels[2] = {"baseline", "ss"};
  const char* sets[3] = {"x", "y", "z"};
  for (int m = 0; m < 2; ++m)
    for (int d = 0; d < 3; ++d) {
      ExperimentResult r;
      r.dataset = sets[d];
      r.model = "lstm-fcn";
      r.method = r.label = labels[m];
      r.best_accuracy = acc[m][d];
      means.push_back(r);
    }
  const auto table = aggregate_table(means, std::nullopt, {"baseline", "ss"});
  const bool means_ok = table.means(0, 0) == (0.6 + 0.8 + 0.7) / 3.0 && table.means(0, 1) == (0.9 + 0.5 + 0.4) / 3.0;
  return {mismatches == 0 && one_clique && means_ok,
          "rank mismatches vs brute force " + std::to_string(mismatches) + " (100 matrices), full tie cliques " +
              std::to_string(cd.cliques.size()) + ", hand-computed means " + (means_ok ? "exact" : "differ")};
}

Outcome determinism(const DeskRun& first, const fs::path& out_dir) {
  // Re-run two datasets of the same plan from scratch and compare with the first run.
  DeskRun again;
  again.plan = first.plan;
  again.plan.datasets = {"GunPoint", "ItalyPowerDemand"};
  again.plan.output_dir = out_dir;
  again.plan.report.tsne.clear();
  fs::remove_all(out_dir);
  const auto summary = run_pipeline(Command::all, again.plan);
  const auto records = read_results(PlanPaths{out_dir}.results());

  std::map<std::tuple<std::string, std::string, std::uint64_t>, std::vector<EvalPoint>> base;
  for (const auto& r : first.records) base[{r.dataset, r.label, r.seed}] = r.eval_points;
  std::size_t same = 0;
  for (const auto& r : records) {
    auto it = base.find({r.dataset, r.label, r.seed});
    if (it != base.end() && it->second == r.eval_points) ++same;
  }

  std::size_t caches = 0, identical = 0;
  for (const auto& ds : again.plan.datasets) {
    for (const auto& enc : again.plan.ss_encoders()) {
      ++caches;
      const auto a = slurp(PlanPaths{first.plan.output_dir}.soft_labels(ds, enc, first.plan.softlabel));
      const auto b = slurp(PlanPaths{out_dir}.soft_labels(ds, enc, again.plan.softlabel));
      if (!a.empty() && a == b) ++identical;
    }
  }
  Outcome o;
  o.pass = summary.exit_code() == 0 && !records.empty() && same == records.size() && identical == caches;
  o.detail = "identical eval_points " + std::to_string(same) + "/" + std::to_string(records.size()) +
             " re-run cells, byte-identical soft-label caches " + std::to_string(identical) + "/" +
             std::to_string(caches);
  return o;
}

template <class F>
Outcome guarded(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_runs";
  report(1, "soft-label invariants", guarded(soft_label_invariants));
  report(2, "distance oracle", guarded(distance_oracle));
  report(3, "loss identities and gradients", guarded(loss_identities));
  report(4, "binary degeneracy", guarded(binary_degeneracy));
  report(5, "continuity", guarded(continuity));
  report(6, "smoke training", guarded(smoke_training));

  DeskRun desk;
  Outcome desk_error;
  try {
    desk = desk_study(work / "desk-scale");
  } catch (const std::exception& e) {
    desk_error = {false, std::string("exception: ") + e.what()};
  }
  report(7, "desk-scale directional study", desk_error.pass ? guarded([&] { return directional_study(desk); }) : desk_error);
  report(8, "ablation pipeline parity", desk_error.pass ? guarded([&] { return ablation_parity(desk); }) : desk_error);
  report(9, "reporting oracles", guarded(reporting_oracles));
  report(10, "determinism", desk_error.pass ? guarded([&] { return determinism(desk, work / "rerun"); }) : desk_error);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
