#include "softts/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>
#include <tuple>

#include "softts/dataset_io.hpp"
#include "softts/errors.hpp"
#include "softts/reporting.hpp"

namespace softts {

namespace fs = std::filesystem;

std::string_view to_string(Command c) {
  switch (c) {
    case Command::encode: return "encode";
    case Command::labels: return "labels";
    case Command::train: return "train";
    case Command::report: return "report";
    case Command::all: return "all";
  }
  return "unknown";
}

Command command_from_string(std::string_view s) {
  for (Command c : {Command::encode, Command::labels, Command::train, Command::report, Command::all}) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError("unknown command '" + std::string(s) + "'", "command");
}

namespace {

using CellKey = std::tuple<std::string, std::string, std::string, std::uint64_t>;  // dataset, model, label, seed

struct Cell {
  std::string dataset;
  const ModelSpec* model;
  const MethodEntry* method;
  std::uint64_t seed;
};

class Runner {
 public:
  Runner(const ExperimentPlan& plan, const RunOptions& options)
      : plan_(plan), options_(options), paths_{plan.output_dir}, datasets_(plan.resolve_datasets()) {}

  RunSummary run(Command command) {
    fs::create_directories(plan_.output_dir);
    switch (command) {
      case Command::encode: encode(); break;
      case Command::labels: labels(); break;
      case Command::train: train(); break;
      case Command::report: report(); break;
      case Command::all:
        encode();
        labels();
        train();
        report();
        break;
    }
    return std::move(summary_);
  }

 private:
  void log(const std::string& line) {
    std::lock_guard lock(log_mutex_);
    if (options_.log) *options_.log << line << '\n' << std::flush;
  }
  void fail(const std::string& line) {
    std::lock_guard lock(summary_mutex_);
    summary_.failures.push_back(line);
    if (options_.log) *options_.log << "error: " << line << '\n' << std::flush;
  }
  void notice(const std::string& line) {
    std::lock_guard lock(summary_mutex_);
    summary_.notices.push_back(line);
    if (options_.log) *options_.log << "notice: " << line << '\n' << std::flush;
  }

  const DatasetPair& data(const std::string& name) {
    std::lock_guard lock(data_mutex_);
    auto it = data_.find(name);
    if (it == data_.end()) {
      it = data_.emplace(name, load_ucr_dataset(plan_.archive_root / name, plan_.normalize)).first;
    }
    return it->second;
  }

  RepresentationMatrix representations(const std::string& dataset, const EncoderSpec& enc, bool rebuild) {
    const fs::path path = paths_.reps(dataset, enc);
    if (!rebuild && fs::exists(path)) return load_representations(path);
    auto reps = encode_train(dataset, enc);
    save_representations(reps, path);
    return reps;
  }

  RepresentationMatrix encode_train(const std::string& dataset, const EncoderSpec& enc) {
    return softts::encode(data(dataset).train, encoder_for_dataset(enc, dataset));
  }

  SoftLabelMatrix soft_labels_for(const std::string& dataset, const EncoderSpec& enc) {
    std::lock_guard lock(labels_mutex_);
    const fs::path path = paths_.soft_labels(dataset, enc, plan_.softlabel);
    if (fs::exists(path)) return load_soft_labels(path);
    return build_labels(dataset, enc, false);
  }

  SoftLabelMatrix build_labels(const std::string& dataset, const EncoderSpec& enc, bool rebuild_reps) {
    const auto reps = representations(dataset, enc, rebuild_reps);
    const auto& train = data(dataset).train;
    if (reps.reps.rows != train.size()) {
      throw DimensionError("cached representations for " + dataset + " do not match the training split");
    }
    auto soft = build_soft_labels(reps.reps, train.labels, train.num_classes(), plan_.softlabel);
    save_soft_labels(soft, paths_.soft_labels(dataset, enc, plan_.softlabel));
    return soft;
  }

  void encode() {
    const auto encoders = plan_.ss_encoders();
    if (encoders.empty()) {
      notice("encode: no ss method in the plan, nothing to encode");
      return;
    }
    for (const auto& ds : datasets_) {
      for (const auto& enc : encoders) {
        try {
          const auto reps = representations(ds, enc, true);
          log("encode " + ds + " " + encoder_tag(enc) + ": " + std::to_string(reps.reps.rows) + " x " +
              std::to_string(reps.reps.cols));
        } catch (const std::exception& e) {
          fail("encode " + ds + " " + encoder_tag(enc) + ": " + e.what());
        }
      }
    }
  }

  void labels() {
    for (const auto& ds : datasets_) {
      for (const auto& enc : plan_.ss_encoders()) {
        try {
          const auto soft = build_labels(ds, enc, false);
          const auto rep = validate_criteria(soft, data(ds).train.labels);
          log("labels " + ds + " " + encoder_tag(enc) + ": " + std::to_string(soft.probs.rows) + " rows");
          if (!rep.ok()) {
            notice("labels " + ds + " " + encoder_tag(enc) + ": " + std::to_string(rep.non_strict_argmax.size()) +
                   " of " + std::to_string(rep.rows) + " rows lack a strict true-class argmax, " +
                   std::to_string(rep.non_monotone.size()) + " violate distance ordering");
          }
        } catch (const std::exception& e) {
          fail("labels " + ds + " " + encoder_tag(enc) + ": " + e.what());
        }
      }
    }
  }

  std::set<CellKey> completed() const {
    std::set<CellKey> done;
    for (const auto& r : read_results(paths_.results())) done.emplace(r.dataset, r.model, r.label, r.seed);
    return done;
  }

  void append_result(const ExperimentResult& r) {
    std::lock_guard lock(results_mutex_);
    std::ofstream out(paths_.results(), std::ios::app);
    if (!out) throw std::runtime_error("cannot append to " + paths_.results().string());
    out << r.to_json().dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write to " + paths_.results().string() + " failed");
  }

  void run_cell(const Cell& cell) {
    const auto& pair = data(cell.dataset);
    const MethodConfig method = plan_.resolve(*cell.method, *cell.model);
    const std::string label = plan_.label_of(*cell.method);
    TrainConfig cfg = plan_.train;
    cfg.seed = cell.seed;

    ExperimentOptions opts;
    opts.label = label;
    opts.checkpoint_path = paths_.checkpoint(cell.model->name(), label, cell.dataset, cell.seed);
    opts.features_path = paths_.features(cell.model->name(), label, cell.dataset, cell.seed);
    fs::create_directories(opts.checkpoint_path.parent_path());
    fs::create_directories(opts.features_path.parent_path());

    SoftLabelMatrix soft;
    if (method.method == Method::ss) {
      const auto& enc = plan_.encoder_of(*cell.method);
      soft = soft_labels_for(cell.dataset, enc);
      opts.encoder = encoder_tag(enc);
      opts.gamma = plan_.softlabel.gamma;
    }
    const auto result = run_experiment(pair.train, pair.test, *cell.model, method, cfg,
                                       method.method == Method::ss ? &soft : nullptr, opts);
    append_result(result);
    std::string line = "train " + cell.dataset + " " + result.model + " " + label + " seed " +
                       std::to_string(cell.seed) + ": best accuracy " + std::to_string(result.best_accuracy);
    if (result.status != "ok") {
      notice(line + " (" + result.status + ": " + result.message + ")");
    } else {
      log(line);
    }
  }

  void train() {
    std::vector<Cell> cells;
    for (const auto& ds : datasets_)
      for (const auto& model : plan_.models)
        for (const auto& method : plan_.methods)
          for (auto seed : plan_.seeds) cells.push_back({ds, &model, &method, seed});
    summary_.cells_total = cells.size();

    std::vector<Cell> todo;
    const auto done = options_.resume ? completed() : std::set<CellKey>{};
    for (const auto& c : cells) {
      if (done.count({c.dataset, c.model->name(), plan_.label_of(*c.method), c.seed})) {
        ++summary_.cells_skipped;
      } else {
        todo.push_back(c);
      }
    }
    if (summary_.cells_skipped) log("resume: skipping " + std::to_string(summary_.cells_skipped) + " finished cells");

    const int workers = std::max(1, std::min<int>(options_.workers > 0 ? options_.workers : plan_.workers,
                                                  static_cast<int>(std::max<std::size_t>(todo.size(), 1))));
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> ran{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < todo.size(); i = next++) {
        const auto& c = todo[i];
        try {
          run_cell(c);
          ++ran;
        } catch (const std::exception& e) {
          fail("cell " + c.dataset + "/" + c.model->name() + "/" + plan_.label_of(*c.method) + "/seed " +
               std::to_string(c.seed) + ": " + e.what());
        }
      }
    };
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    summary_.cells_run = ran;
  }

  void report() {
    std::size_t skipped = 0;
    const auto all = read_results(paths_.results(), &skipped);
    if (skipped) notice("report: skipped " + std::to_string(skipped) + " malformed result lines");

    // Only the plan's own cells; the store may hold records of other plans.
    std::set<std::string> ds_set(datasets_.begin(), datasets_.end()), model_set, label_set;
    std::vector<std::string> order;
    for (const auto& m : plan_.models) model_set.insert(m.name());
    for (const auto& m : plan_.methods) {
      label_set.insert(plan_.label_of(m));
      order.push_back(plan_.label_of(m));
    }
    std::set<std::uint64_t> seed_set(plan_.seeds.begin(), plan_.seeds.end());
    std::vector<ExperimentResult> records;
    for (const auto& r : all) {
      if (ds_set.count(r.dataset) && model_set.count(r.model) && label_set.count(r.label) && seed_set.count(r.seed)) {
        records.push_back(r);
      }
    }
    if (records.empty()) {
      fail("report: no results for this plan in " + paths_.results().string());
      return;
    }

    const fs::path dir = paths_.report_dir();
    fs::create_directories(dir);
    try {
      const auto table = aggregate_table(records, std::nullopt, order);
      write_table_csv(table, dir / "table.csv");
      log("report: wrote " + (dir / "table.csv").string());
    } catch (const std::exception& e) {
      fail(std::string("report table: ") + e.what());
    }

    std::vector<RankReport> ranks;
    const auto cube = collect_accuracies(records);
    for (const auto& model : plan_.models) {
      const std::string name = model.name();
      if (!cube.cells.count(name)) continue;
      std::set<std::string> covered;
      for (const auto& [label, by_ds] : cube.cells.at(name))
        for (const auto& [ds, _] : by_ds) covered.insert(ds);
      if (covered.size() < 3) {
        notice("critical difference skipped for " + name + ": " + std::to_string(covered.size()) +
               " datasets (< 3)");
      } else if (cube.cells.at(name).size() < 2) {
        notice("critical difference skipped for " + name + ": fewer than 2 methods");
      } else {
        try {
          ranks.push_back(critical_difference(records, name, plan_.report.alpha, order));
        } catch (const std::exception& e) {
          fail("critical difference " + name + ": " + e.what());
        }
      }

      const auto pts = scatter_points(records, name);
      if (!pts.empty()) write_scatter(pts, name, dir / ("scatter_" + name + ".svg"));
    }
    write_ranks_csv(ranks, dir / "ranks.csv");
    if (!ranks.empty()) write_cd_diagram(ranks, dir / "cd_diagram.svg");

    for (const auto& [model, dataset] : plan_.report.tsne) tsne(model, dataset);
  }

  void tsne(const std::string& model, const std::string& dataset) {
    const std::uint64_t seed = plan_.seeds.front();
    std::vector<TsnePanel> panels;
    for (const auto& label : plan_.report.tsne_labels) {
      const fs::path path = paths_.features(model, label, dataset, seed);
      if (!fs::exists(path)) {
        notice("t-SNE " + model + "/" + dataset + ": no features for " + label);
        continue;
      }
      try {
        TsnePanel panel;
        panel.title = label;
        Matrix features;
        load_features_csv(path, features, panel.labels);
        TsneOptions opts;
        opts.perplexity = plan_.report.tsne_perplexity;
        opts.seed = plan_.report.tsne_seed;
        panel.coords = tsne_embed(features, opts);
        panels.push_back(std::move(panel));
      } catch (const std::exception& e) {
        fail("t-SNE " + model + "/" + dataset + "/" + label + ": " + e.what());
      }
    }
    if (panels.empty()) return;
    const fs::path dir = paths_.report_dir();
    const std::string stem = "tsne_" + model + "_" + dataset;
    write_tsne(panels, dir / (stem + ".svg"), dir / (stem + ".csv"));
  }

  const ExperimentPlan& plan_;
  RunOptions options_;
  PlanPaths paths_;
  std::vector<std::string> datasets_;
  RunSummary summary_;
  std::map<std::string, DatasetPair> data_;
  std::mutex log_mutex_, summary_mutex_, data_mutex_, labels_mutex_, results_mutex_;
};

}  // namespace

RunSummary run_pipeline(Command command, const ExperimentPlan& plan, const RunOptions& options) {
  Runner runner(plan, options);
  return runner.run(command);
}

}  // namespace softts
