#include "affgan/nn/adam.hpp"

#include <cmath>

namespace affgan::nn {

void Adam::step(const std::vector<Param*>& params) {
  ++t_;
  const float bc1 = 1.0f - std::pow(beta1_, float(t_));
  const float bc2 = 1.0f - std::pow(beta2_, float(t_));
  for (Param* p : params) {
    p->adam_m = beta1_ * p->adam_m + (1.0f - beta1_) * p->grad;
    p->adam_v =
        beta2_ * p->adam_v.array() + (1.0f - beta2_) * p->grad.array().square();
    p->value.array() -=
        lr_ * (p->adam_m.array() / bc1) /
        ((p->adam_v.array() / bc2).sqrt() + eps_);
  }
}

}  // namespace affgan::nn
