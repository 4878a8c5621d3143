#include "affgan/nn/spectral.hpp"

#include <cmath>

namespace affgan::nn {

namespace {
constexpr float kSigmaFloor = 1e-12f;

void normalize_inplace(Eigen::VectorXf& v) {
  float n = v.norm();
  if (n > kSigmaFloor) {
    v /= n;
  } else {
    v.setZero();
    if (v.size() > 0) v[0] = 1.0f;
  }
}
}  // namespace

float spectral_sigma(const Eigen::MatrixXf& w, int iters, PowerIterState& state) {
  if (state.u.size() != w.rows()) {
    state.u = Eigen::VectorXf::Constant(w.rows(), 1.0f / std::sqrt(float(w.rows())));
  }
  Eigen::VectorXf v(w.cols());
  for (int i = 0; i < iters; ++i) {
    v.noalias() = w.transpose() * state.u;
    normalize_inplace(v);
    state.u.noalias() = w * v;
    normalize_inplace(state.u);
  }
  v.noalias() = w.transpose() * state.u;
  normalize_inplace(v);
  float sigma = state.u.dot(w * v);
  return sigma < kSigmaFloor ? kSigmaFloor : sigma;
}

Eigen::MatrixXf spectral_normalize(const Eigen::MatrixXf& w, int iters,
                                   PowerIterState& state) {
  float sigma = spectral_sigma(w, iters, state);
  return w / sigma;
}

}  // namespace affgan::nn
