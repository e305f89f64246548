#include "softts/losses.hpp"

#include <algorithm>
#include <cmath>

#include "softts/errors.hpp"

namespace softts {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::ls: return "ls";
    case Method::cp: return "cp";
    case Method::ss: return "ss";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "baseline") return Method::baseline;
  if (s == "ls") return Method::ls;
  if (s == "cp") return Method::cp;
  if (s == "ss") return Method::ss;
  throw ConfigError("unknown method '" + std::string(s) + "' (expected baseline, ls, cp or ss)");
}

void MethodConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in [0, 1)", "epsilon");
  if (method != Method::baseline && method != Method::ls && !(beta > 0.0)) {
    throw ConfigError("beta must be > 0", "beta");
  }
  if (method == Method::ss && !(tau >= 1.0)) throw ConfigError("tau must be >= 1", "tau");
}

namespace {

void check_finite(std::span<const double> logits) {
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("non-finite logit");
  }
}

}  // namespace

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  double mx = -INFINITY;
  for (double v : logits) mx = std::max(mx, v / temperature);
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = logits[k] / temperature - mx;
    z += std::exp(out[k]);
  }
  const double lz = std::log(z);
  for (double& v : out) v -= lz;
  return out;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  auto out = log_softmax(logits, temperature);
  for (double& v : out) v = std::exp(v);
  return out;
}

LossGrad cross_entropy(std::span<const double> logits, std::span<const double> target) {
  check_finite(logits);
  if (target.size() != logits.size()) throw DimensionError("target and logits differ in length");
  const auto lp = log_softmax(logits);
  LossGrad out;
  out.grad.resize(logits.size());
  double mass = 0.0;
  for (double t : target) mass += t;
  double loss = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (target[k] != 0.0) loss -= target[k] * lp[k];
    out.grad[k] = mass * std::exp(lp[k]) - target[k];
  }
  out.value = {loss, loss, 0.0};
  return out;
}

LossGrad cross_entropy(std::span<const double> logits, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw DimensionError("target class " + std::to_string(target) + " out of range");
  }
  std::vector<double> t(logits.size(), 0.0);
  t[static_cast<std::size_t>(target)] = 1.0;
  return cross_entropy(logits, std::span<const double>(t));
}

std::vector<double> smooth_targets(int hard, int num_classes, double epsilon) {
  if (hard < 0 || hard >= num_classes) throw DimensionError("class index out of range");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must be in [0, 1)", "epsilon");
  std::vector<double> t(static_cast<std::size_t>(num_classes), epsilon / num_classes);
  t[static_cast<std::size_t>(hard)] += 1.0 - epsilon;
  return t;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("KL arguments differ in length");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) kl += p[k] * std::log(p[k] / q[k]);
  }
  return kl;
}

LossGrad method_loss(std::span<const double> logits, int hard_label, const MethodConfig& config,
                     std::optional<std::span<const double>> soft_confidences) {
  const int num_classes = static_cast<int>(logits.size());
  switch (config.method) {
    case Method::baseline:
      return cross_entropy(logits, hard_label);

    case Method::ls: {
      const auto t = smooth_targets(hard_label, num_classes, config.epsilon);
      return cross_entropy(logits, std::span<const double>(t));
    }

    case Method::cp: {
      // beta * KL(p || u) = beta * (sum p ln p + ln L)
      auto out = cross_entropy(logits, hard_label);
      const auto lp = log_softmax(logits);
      double neg_entropy = 0.0;
      for (double v : lp) neg_entropy += std::exp(v) * v;
      const double reg = config.beta * (neg_entropy + std::log(double(num_classes)));
      for (std::size_t k = 0; k < logits.size(); ++k) {
        out.grad[k] += config.beta * std::exp(lp[k]) * (lp[k] - neg_entropy);
      }
      out.value.reg_part = reg;
      out.value.total = out.value.ce_part + reg;
      return out;
    }

    case Method::ss: {
      if (!soft_confidences) throw ConfigError("method ss requires soft labels for every training sample", "method");
      if (soft_confidences->size() != logits.size()) throw DimensionError("soft label row length mismatch");
      // beta * KL(softmax(a / tau) || softmax(z / tau)); the CE term uses raw logits.
      auto out = cross_entropy(logits, hard_label);
      const auto target = softmax(*soft_confidences, config.tau);
      const auto lq = log_softmax(logits, config.tau);
      double kl = 0.0;
      for (std::size_t k = 0; k < logits.size(); ++k) {
        if (target[k] > 0.0) kl += target[k] * (std::log(target[k]) - lq[k]);
        out.grad[k] += config.beta * (std::exp(lq[k]) - target[k]) / config.tau;
      }
      out.value.reg_part = config.beta * kl;
      out.value.total = out.value.ce_part + out.value.reg_part;
      return out;
    }
  }
  throw ConfigError("unhandled method");
}

BatchLoss batch_method_loss(const Matrix& logits, std::span<const int> labels, const MethodConfig& config,
                            const Matrix* soft_confidences, std::span<const std::size_t> sample_index) {
  if (labels.size() != logits.rows) throw DimensionError("labels and logits disagree");
  BatchLoss out;
  out.grad = Matrix(logits.rows, logits.cols);
  const double inv_b = 1.0 / static_cast<double>(logits.rows);
  for (std::size_t b = 0; b < logits.rows; ++b) {
    std::optional<std::span<const double>> soft;
    if (soft_confidences) {
      const std::size_t idx = sample_index.empty() ? b : sample_index[b];
      soft = soft_confidences->row(idx);
    }
    const auto lg = method_loss(logits.row(b), labels[b], config, soft);
    out.mean.total += lg.value.total * inv_b;
    out.mean.ce_part += lg.value.ce_part * inv_b;
    out.mean.reg_part += lg.value.reg_part * inv_b;
    for (std::size_t k = 0; k < logits.cols; ++k) out.grad(b, k) = lg.grad[k] * inv_b;
  }
  return out;
}

}  // namespace softts
