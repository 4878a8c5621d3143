#pragma once

#include <Eigen/Core>

namespace affgan::nn {

/// Power-iteration state. `u` persists across steps so one iteration per
/// training step converges over time.
struct PowerIterState {
  Eigen::VectorXf u;
};

/// Runs `iters` power-iteration rounds on W (updating state.u) and returns
/// the spectral-norm estimate u^T W v. With iters == 0 the estimate is
/// computed from the stored u without updating it. The result is floored
/// at 1e-12 so an all-zero matrix divides cleanly.
float spectral_sigma(const Eigen::MatrixXf& w, int iters, PowerIterState& state);

/// W / sigma-hat under the same convention.
Eigen::MatrixXf spectral_normalize(const Eigen::MatrixXf& w, int iters,
                                   PowerIterState& state);

}  // namespace affgan::nn
