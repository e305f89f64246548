#pragma once

#include <vector>

#include "softts/nn/tensor.hpp"

namespace softts::nn {

void zero_grad(const std::vector<Parameter*>& params);

/// Plain SGD step, used by descent sanity checks.
void sgd_step(const std::vector<Parameter*>& params, double learning_rate);

class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, double learning_rate = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step();
  long steps() const { return t_; }

 private:
  std::vector<Parameter*> params_;
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace softts::nn
