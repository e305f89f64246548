#include "softts/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace softts::nn {

void zero_grad(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

void sgd_step(const std::vector<Parameter*>& params, double learning_rate) {
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= float(learning_rate * p->grad[i]);
  }
}

Adam::Adam(std::vector<Parameter*> params, double learning_rate, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(eps) {
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, double(t_));
  const double c2 = 1.0 - std::pow(b2_, double(t_));
  const float step = float(lr_ * std::sqrt(c2) / c1);
  const float eps_hat = float(eps_ * std::sqrt(c2));
  const float b1 = float(b1_), b2 = float(b2_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& val = params_[k]->value;
    const auto& g = params_[k]->grad;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      val[i] -= step * m[i] / (std::sqrt(v[i]) + eps_hat);
    }
  }
}

}  // namespace softts::nn
