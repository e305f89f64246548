#include "softts/plan.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "softts/dataset_io.hpp"
#include "softts/errors.hpp"
#include "softts/text_io.hpp"

namespace softts {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one JSON object that records the path of every field and
// rejects keys it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    if (!has(key)) return std::nullopt;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("wrong type", field(key));
    }
  }
  template <class T>
  T get(const std::string& key, T fallback) {
    return opt<T>(key).value_or(std::move(fallback));
  }
  template <class T>
  T require(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) throw ConfigError("missing required field", field(key));
    return *v;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown field", field(key));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Re-raises a library ConfigError under the plan field it came from.
template <class F>
auto at_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(e.message(), e.field().empty() ? field : field + "." + e.field());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what(), field);
  }
}

EncoderSpec parse_encoder(const json& j, const std::string& path) {
  Section s(j, path);
  EncoderSpec e;
  if (auto kind = s.opt<std::string>("kind")) {
    e.kind = at_field(s.field("kind"), [&] { return encoder_kind_from_string(*kind); });
  }
  if (auto p = s.opt<std::string>("path")) e.file_path = fs::path(*p);
  e.num_kernels = s.get<int>("num_kernels", e.num_kernels);
  e.seed = s.get<std::uint64_t>("seed", e.seed);
  if (auto pool = s.opt<std::string>("pooling")) {
    if (*pool == "max") {
      e.pooling = Pooling::max;
    } else if (*pool == "last") {
      e.pooling = Pooling::last;
    } else {
      throw ConfigError("unknown pooling '" + *pool + "'", s.field("pooling"));
    }
  }
  s.finish();
  at_field(path, [&] { e.validate(); });
  return e;
}

ModelSpec parse_model(const json& j, const std::string& path) {
  if (j.is_string()) {
    return at_field(path, [&] { return ModelSpec::from_name(j.get<std::string>()); });
  }
  Section s(j, path);
  const auto name = s.require<std::string>("name");
  ModelSpec m = at_field(s.field("name"), [&] { return ModelSpec::from_name(name); });
  m.base_channels = s.get<int>("base_channels", m.base_channels);
  m.lstm_hidden = s.get<int>("lstm_hidden", m.lstm_hidden);
  m.lstm_dropout = s.get<double>("lstm_dropout", m.lstm_dropout);
  s.finish();
  if (m.base_channels < 0) throw ConfigError("must be >= 0", s.field("base_channels"));
  if (m.lstm_hidden < 1) throw ConfigError("must be >= 1", s.field("lstm_hidden"));
  if (!(m.lstm_dropout >= 0.0 && m.lstm_dropout < 1.0)) throw ConfigError("must be in [0, 1)", s.field("lstm_dropout"));
  return m;
}

MethodEntry parse_method(const json& j, const std::string& path) {
  MethodEntry e;
  if (j.is_string()) {
    e.method = at_field(path, [&] { return method_from_string(j.get<std::string>()); });
    return e;
  }
  Section s(j, path);
  const auto name = s.require<std::string>("name");
  e.method = at_field(s.field("name"), [&] { return method_from_string(name); });
  e.label = s.get<std::string>("label", "");
  e.epsilon = s.opt<double>("epsilon");
  e.beta = s.opt<double>("beta");
  e.tau = s.opt<double>("tau");
  if (s.has("encoder")) {
    if (e.method != Method::ss) throw ConfigError("encoder only applies to ss", s.field("encoder"));
    e.encoder = parse_encoder(s.raw("encoder"), s.field("encoder"));
  }
  s.finish();
  MethodConfig probe = preset_method(e.method, ModelSpec{});
  if (e.epsilon) probe.epsilon = *e.epsilon;
  if (e.beta) probe.beta = *e.beta;
  if (e.tau) probe.tau = *e.tau;
  at_field(path, [&] { probe.validate(); });
  return e;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return s;
}

std::string cell_stem(const std::string& model, const std::string& label, const std::string& dataset,
                      std::uint64_t seed) {
  return sanitize(model) + "__" + sanitize(label) + "__" + sanitize(dataset) + "__s" + std::to_string(seed);
}

}  // namespace

MethodConfig preset_method(Method method, const ModelSpec& model) {
  MethodConfig c;
  c.method = method;
  c.epsilon = 0.1;
  c.tau = 2.0;
  switch (method) {
    case Method::baseline:
    case Method::ls:
      c.beta = 0.0;
      break;
    case Method::cp:
      c.beta = 0.1;
      break;
    case Method::ss:
      if (model.architecture == Architecture::resnet18) {
        c.tau = 4.0;
        c.beta = 0.1;
      } else if (model.architecture == Architecture::lstm_fcn) {
        c.beta = 0.1;
      } else if (model.inception_depth == 6) {
        c.beta = 1.0;
      } else if (model.inception_depth == 3) {
        c.beta = 0.1;
      } else {
        c.beta = 0.5;
      }
      break;
  }
  return c;
}

ExperimentPlan ExperimentPlan::from_json(const json& j) {
  ExperimentPlan plan;
  Section top(j, "");

  {
    if (!top.has("data")) throw ConfigError("missing required field", "data");
    Section d(top.raw("data"), "data");
    if (!d.has("datasets")) throw ConfigError("missing required field", "data.datasets");
    plan.archive_root = d.require<std::string>("archive_root");
    const json& ds = d.raw("datasets");
    if (ds.is_string()) {
      if (ds.get<std::string>() != "all-fixed-length") {
        throw ConfigError("expected a list of names or \"all-fixed-length\"", "data.datasets");
      }
      plan.all_fixed_length = true;
    } else if (ds.is_array() && !ds.empty()) {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!ds[i].is_string()) throw ConfigError("expected a dataset name", "data.datasets[" + std::to_string(i) + "]");
        plan.datasets.push_back(ds[i].get<std::string>());
      }
    } else {
      throw ConfigError("expected a non-empty list of names or \"all-fixed-length\"", "data.datasets");
    }
    plan.normalize = d.get<bool>("normalize", true);
    d.finish();
  }

  if (top.has("encoder")) plan.encoder = parse_encoder(top.raw("encoder"), "encoder");

  if (top.has("softlabel")) {
    Section s(top.raw("softlabel"), "softlabel");
    plan.softlabel.gamma = s.get<double>("gamma", plan.softlabel.gamma);
    plan.softlabel.distance_floor = s.get<double>("distance_floor", plan.softlabel.distance_floor);
    plan.softlabel.strict_argmax = s.get<bool>("strict_argmax", plan.softlabel.strict_argmax);
    plan.softlabel.strict_margin = s.get<double>("strict_margin", plan.softlabel.strict_margin);
    s.finish();
    at_field("softlabel", [&] { plan.softlabel.validate(); });
  }

  if (!top.has("models") || !top.raw("models").is_array() || top.raw("models").empty()) {
    throw ConfigError("expected a non-empty list", "models");
  }
  const json& models = top.raw("models");
  for (std::size_t i = 0; i < models.size(); ++i) plan.models.push_back(parse_model(models[i], "models[" + std::to_string(i) + "]"));

  if (!top.has("methods") || !top.raw("methods").is_array() || top.raw("methods").empty()) {
    throw ConfigError("expected a non-empty list", "methods");
  }
  const json& methods = top.raw("methods");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const std::string path = "methods[" + std::to_string(i) + "]";
    plan.methods.push_back(parse_method(methods[i], path));
    if (!labels.insert(plan.label_of(plan.methods.back())).second) {
      throw ConfigError("duplicate method label '" + plan.label_of(plan.methods.back()) + "'", path);
    }
  }

  if (top.has("train")) {
    Section t(top.raw("train"), "train");
    plan.train.epochs = t.get<int>("epochs", plan.train.epochs);
    plan.train.batch_size = t.get<int>("batch_size", plan.train.batch_size);
    plan.train.learning_rate = t.get<double>("learning_rate", plan.train.learning_rate);
    plan.train.eval_every = t.get<int>("eval_every", plan.train.eval_every);
    if (t.has("seeds")) {
      plan.seeds = t.require<std::vector<std::uint64_t>>("seeds");
      if (plan.seeds.empty()) throw ConfigError("expected at least one seed", "train.seeds");
    }
    plan.workers = t.get<int>("workers", plan.workers);
    if (plan.workers < 1) throw ConfigError("must be >= 1", "train.workers");
    t.finish();
    at_field("train", [&] { plan.train.validate(); });
  }

  if (top.has("report")) {
    Section r(top.raw("report"), "report");
    plan.report.alpha = r.get<double>("alpha", plan.report.alpha);
    if (!(plan.report.alpha > 0.0 && plan.report.alpha < 1.0)) throw ConfigError("must be in (0, 1)", "report.alpha");
    if (r.has("tsne")) {
      const json& pairs = r.raw("tsne");
      if (!pairs.is_array()) throw ConfigError("expected a list", "report.tsne");
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const std::string path = "report.tsne[" + std::to_string(i) + "]";
        Section p(pairs[i], path);
        plan.report.tsne.emplace_back(p.require<std::string>("model"), p.require<std::string>("dataset"));
        p.finish();
      }
    }
    plan.report.tsne_labels = r.get<std::vector<std::string>>("tsne_labels", plan.report.tsne_labels);
    plan.report.tsne_perplexity = r.get<double>("tsne_perplexity", 0.0);
    plan.report.tsne_seed = r.get<std::uint64_t>("tsne_seed", 0);
    r.finish();
  }

  plan.output_dir = top.require<std::string>("output_dir");
  top.finish();

  if (const char* env = std::getenv("SOFTTS_ARCHIVE"); env && *env) plan.archive_root = env;
  return plan;
}

ExperimentPlan ExperimentPlan::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("plan is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

std::vector<std::string> ExperimentPlan::resolve_datasets() const {
  if (!fs::is_directory(archive_root)) {
    throw ConfigError("archive root " + archive_root.string() + " is not a directory", "data.archive_root");
  }
  if (all_fixed_length) {
    auto names = list_fixed_length_datasets(archive_root);
    if (names.empty()) throw ConfigError("no fixed-length datasets under " + archive_root.string(), "data.datasets");
    return names;
  }
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const fs::path dir = archive_root / datasets[i];
    if (!fs::exists(dir / (datasets[i] + "_TRAIN.tsv")) || !fs::exists(dir / (datasets[i] + "_TEST.tsv"))) {
      throw ConfigError("unknown dataset '" + datasets[i] + "' (no train/test files in " + dir.string() + ")",
                        "data.datasets[" + std::to_string(i) + "]");
    }
  }
  return datasets;
}

MethodConfig ExperimentPlan::resolve(const MethodEntry& entry, const ModelSpec& model) const {
  MethodConfig c = preset_method(entry.method, model);
  if (entry.epsilon) c.epsilon = *entry.epsilon;
  if (entry.beta) c.beta = *entry.beta;
  if (entry.tau) c.tau = *entry.tau;
  return c;
}

std::string ExperimentPlan::label_of(const MethodEntry& entry) const {
  return entry.label.empty() ? std::string(to_string(entry.method)) : entry.label;
}

const EncoderSpec& ExperimentPlan::encoder_of(const MethodEntry& entry) const {
  return entry.encoder ? *entry.encoder : encoder;
}

std::vector<EncoderSpec> ExperimentPlan::ss_encoders() const {
  std::vector<EncoderSpec> out;
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (m.method != Method::ss) continue;
    const auto& e = encoder_of(m);
    if (seen.insert(encoder_tag(e)).second) out.push_back(e);
  }
  return out;
}

std::string encoder_tag(const EncoderSpec& spec) {
  if (spec.kind == EncoderKind::precomputed) {
    const fs::path p = spec.file_path.value_or("none");
    return "precomputed-" + sanitize((p.has_filename() ? p : p.parent_path()).filename().string());
  }
  return spec.describe();
}

EncoderSpec encoder_for_dataset(const EncoderSpec& spec, const std::string& dataset) {
  EncoderSpec out = spec;
  if (spec.kind == EncoderKind::precomputed) out.file_path = *spec.file_path / (dataset + ".txt");
  return out;
}

fs::path PlanPaths::reps(const std::string& dataset, const EncoderSpec& enc) const {
  return root / "reps" / (sanitize(dataset) + "__" + encoder_tag(enc) + ".txt");
}

fs::path PlanPaths::soft_labels(const std::string& dataset, const EncoderSpec& enc, const SoftLabelConfig& cfg) const {
  std::string name = sanitize(dataset) + "__" + encoder_tag(enc) + "__g" + format_double(cfg.gamma);
  if (cfg.strict_argmax) name += "-strict" + format_double(cfg.strict_margin);
  return root / "labels" / (name + ".txt");
}

fs::path PlanPaths::features(const std::string& model, const std::string& label, const std::string& dataset,
                             std::uint64_t seed) const {
  return root / "features" / (cell_stem(model, label, dataset, seed) + ".csv");
}

fs::path PlanPaths::checkpoint(const std::string& model, const std::string& label, const std::string& dataset,
                               std::uint64_t seed) const {
  return root / "checkpoints" / (cell_stem(model, label, dataset, seed) + ".bin");
}

}  // namespace softts
