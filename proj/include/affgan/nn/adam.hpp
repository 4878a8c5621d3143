#pragma once

#include <cstdint>
#include <vector>

#include "affgan/nn/layers.hpp"

namespace affgan::nn {

/// Adam with bias correction. Moment buffers live on the Param so they
/// survive checkpointing and PAGAN channel growth; the optimizer only
/// carries hyperparameters and the step counter.
class Adam {
 public:
  Adam(float lr, float beta1, float beta2, float eps = 1e-8f)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params);

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  float lr() const { return lr_; }

 private:
  float lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace affgan::nn
