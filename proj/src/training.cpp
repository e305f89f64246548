#include "softts/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "softts/errors.hpp"
#include "softts/nn/optim.hpp"
#include "softts/text_io.hpp"

namespace softts {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1", "train.epochs");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1", "train.batch_size");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1", "train.eval_every");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0", "train.learning_rate");
}

nlohmann::json ExperimentResult::to_json() const {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : eval_points) points.push_back({p.epoch, p.accuracy});
  nlohmann::json j = {{"dataset", dataset}, {"model", model},      {"depth", depth},
                      {"method", method},   {"label", label},      {"encoder", encoder},
                      {"seed", seed},       {"gamma", gamma},      {"beta", beta},
                      {"tau", tau},         {"epsilon", epsilon},  {"best_accuracy", best_accuracy},
                      {"eval_points", points}, {"wall_time", wall_time}, {"status", status}};
  if (!message.empty()) j["message"] = message;
  return j;
}

ExperimentResult ExperimentResult::from_json(const nlohmann::json& j) {
  ExperimentResult r;
  r.dataset = j.at("dataset").get<std::string>();
  r.model = j.at("model").get<std::string>();
  r.depth = j.value("depth", 0);
  r.method = j.at("method").get<std::string>();
  r.label = j.value("label", r.method);
  r.encoder = j.value("encoder", std::string());
  r.seed = j.at("seed").get<std::uint64_t>();
  r.gamma = j.value("gamma", 0.0);
  r.beta = j.value("beta", 0.0);
  r.tau = j.value("tau", 0.0);
  r.epsilon = j.value("epsilon", 0.0);
  r.best_accuracy = j.at("best_accuracy").get<double>();
  for (const auto& p : j.at("eval_points")) r.eval_points.push_back({p.at(0).get<int>(), p.at(1).get<double>()});
  r.wall_time = j.value("wall_time", 0.0);
  r.status = j.value("status", std::string("ok"));
  r.message = j.value("message", std::string());
  return r;
}

int predict_class(std::span<const float> logits) {
  int best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[std::size_t(best)]) best = int(k);
  }
  return best;
}

namespace {

constexpr std::size_t kEvalChunk = 256;

// Eval-mode forward over the whole set; returns (correct count, features).
std::pair<std::size_t, Matrix> evaluate(Classifier& model, const LabeledDataset& data, bool want_features) {
  std::size_t correct = 0;
  Matrix features;
  if (want_features) features = Matrix(data.size(), std::size_t(model.feature_dim()));
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    const std::size_t end = std::min(data.size(), start + kEvalChunk);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const auto out = model.forward(to_tensor(data.samples, rows), nn::Mode::eval);
    const auto L = std::size_t(out.logits.c);
    for (std::size_t b = 0; b < rows.size(); ++b) {
      std::span<const float> lg(out.logits.data.data() + b * L, L);
      if (predict_class(lg) == data.labels[rows[b]]) ++correct;
      if (want_features) {
        for (std::size_t f = 0; f < features.cols; ++f) features(rows[b], f) = out.features.data[b * features.cols + f];
      }
    }
  }
  return {correct, std::move(features)};
}

}  // namespace

double evaluate_accuracy(Classifier& model, const LabeledDataset& test) {
  if (test.size() == 0) return 0.0;
  return double(evaluate(model, test, false).first) / double(test.size());
}

void save_features_csv(const std::filesystem::path& path, const Matrix& features, std::span<const int> labels) {
  std::ostringstream os;
  for (std::size_t r = 0; r < features.rows; ++r) {
    os << labels[r];
    for (std::size_t c = 0; c < features.cols; ++c) os << ',' << format_double(features(r, c));
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

void load_features_csv(const std::filesystem::path& path, Matrix& features, std::vector<int>& labels) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  labels.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    for (char& ch : line) {
      if (ch == ',') ch = ' ';
    }
    auto values = parse_numbers(line, path.string() + ":" + std::to_string(line_no));
    if (values.size() < 2) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": no features");
    labels.push_back(int(values.front()));
    rows.emplace_back(values.begin() + 1, values.end());
    if (rows.back().size() != rows.front().size()) throw ParseError(path.string() + ": ragged feature rows");
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty feature file");
  features = Matrix(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), features.row(r).begin());
}

ExperimentResult run_experiment(const LabeledDataset& train, const LabeledDataset& test, const ModelSpec& model_spec,
                                const MethodConfig& method, const TrainConfig& config,
                                const SoftLabelMatrix* soft_labels, const ExperimentOptions& options) {
  config.validate();
  method.validate();
  if (!(train.label_map == test.label_map)) throw DimensionError(train.name + ": train and test label maps differ");
  if (method.method == Method::ss) {
    if (!soft_labels) throw ConfigError("method ss requires soft labels", "method");
    if (soft_labels->confidences.rows != train.size() || soft_labels->confidences.cols != std::size_t(train.num_classes())) {
      throw DimensionError(train.name + ": soft labels are not aligned with the training split");
    }
  }

  const auto started = std::chrono::steady_clock::now();
  ModelSpec spec = model_spec;
  spec.num_classes = train.num_classes();
  spec.input_length = int(train.length());
  spec.seed = config.seed;
  auto model = build_model(spec);
  auto params = model->parameters();
  nn::Adam optimizer(params, config.learning_rate);

  ExperimentResult result;
  result.dataset = train.name;
  result.model = spec.name();
  result.depth = spec.architecture == Architecture::inception ? spec.inception_depth : 0;
  result.method = std::string(to_string(method.method));
  result.label = options.label.empty() ? result.method : options.label;
  result.seed = config.seed;
  result.epsilon = method.method == Method::ls ? method.epsilon : 0.0;
  result.beta = (method.method == Method::cp || method.method == Method::ss) ? method.beta : 0.0;
  if (method.method == Method::ss) {
    result.tau = method.tau;
    result.gamma = options.gamma > 0.0 ? options.gamma : soft_labels->gamma;
    result.encoder = options.encoder;
  }

  const Matrix* soft = method.method == Method::ss ? &soft_labels->confidences : nullptr;
  std::vector<std::size_t> order(train.size());
  std::vector<int> batch_labels;
  Matrix logits;
  bool diverged = false;

  for (int epoch = 1; epoch <= config.epochs && !diverged; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(config.seed + std::uint64_t(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(shuffle_rng)]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(config.batch_size));
      std::span<const std::size_t> rows(order.data() + start, end - start);
      const auto out = model->forward(to_tensor(train.samples, rows), nn::Mode::train);

      const auto L = std::size_t(out.logits.c);
      logits = Matrix(rows.size(), L);
      batch_labels.resize(rows.size());
      bool finite = true;
      for (std::size_t b = 0; b < rows.size(); ++b) {
        batch_labels[b] = train.labels[rows[b]];
        for (std::size_t k = 0; k < L; ++k) {
          logits(b, k) = out.logits.data[b * L + k];
          finite = finite && std::isfinite(logits(b, k));
        }
      }
      if (!finite) {
        diverged = true;
        result.message = "non-finite logits at epoch " + std::to_string(epoch);
        break;
      }
      const auto loss = batch_method_loss(logits, batch_labels, method, soft, rows);
      if (!std::isfinite(loss.mean.total)) {
        diverged = true;
        result.message = "non-finite loss at epoch " + std::to_string(epoch);
        break;
      }
      epoch_loss += loss.mean.total * double(rows.size());

      nn::Tensor grad(int(rows.size()), int(L), 1);
      for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] = float(loss.grad.data[i]);
      nn::zero_grad(params);
      model->backward(grad);
      optimizer.step();
    }
    if (diverged) break;
    if (options.on_epoch) options.on_epoch(epoch, epoch_loss / double(train.size()));

    if (epoch % config.eval_every == 0) {
      const bool want_features = !options.features_path.empty();
      auto [correct, feats] = evaluate(*model, test, want_features);
      const double acc = double(correct) / double(test.size());
      const bool improved = result.eval_points.empty() || acc > result.best_accuracy;
      result.eval_points.push_back({epoch, acc});
      if (improved) {
        result.best_accuracy = acc;
        if (want_features) save_features_csv(options.features_path, feats, test.labels);
        if (!options.checkpoint_path.empty()) model->save(options.checkpoint_path);
      }
    }
  }

  if (diverged) result.status = "diverged";
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace softts
