#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "affgan/nn/bundle.hpp"
#include "affgan/nn/net.hpp"

namespace affgan::metrics {

/// Maps a batch of float RGB images, NCHW in [-1, 1], to feature rows.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual int feature_dim() const = 0;
  virtual Eigen::MatrixXd extract(const nn::Tensor& images) const = 0;
};

/// Deterministic dependency-free extractor: bilinear 8x8 downsample per
/// channel, flatten, fixed seeded Gaussian projection to 64 dims.
class StubExtractor : public FeatureExtractor {
 public:
  StubExtractor();
  std::string name() const override { return "stub64"; }
  int feature_dim() const override { return kDim; }
  Eigen::MatrixXd extract(const nn::Tensor& images) const override;

  static constexpr int kDim = 64;

 private:
  Eigen::MatrixXf projection_;  // kDim x 192
};

/// Runs the forward pass of a network stored in a weights bundle. The
/// bundle needs "arch", "name" and "feature_dim" metadata; images are
/// resized to "input_size" when present.
class BundleExtractor : public FeatureExtractor {
 public:
  explicit BundleExtractor(const std::string& bundle_path);
  std::string name() const override { return name_; }
  int feature_dim() const override { return feature_dim_; }
  Eigen::MatrixXd extract(const nn::Tensor& images) const override;

 private:
  std::string name_;
  int feature_dim_ = 0;
  int input_size_ = 0;
  mutable nn::Net net_;
};

/// Validates shape/range conventions, then runs the extractor in chunks.
Eigen::MatrixXd extract_features(const nn::Tensor& images,
                                 const FeatureExtractor& extractor,
                                 int chunk = 64);

struct FeatureStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  int64_t n = 0;
};

/// Sample mean and covariance (n-1 normalization; needs n >= 2).
FeatureStats fit_gaussian(const Eigen::MatrixXd& features);

/// Principal square root of a symmetric PSD matrix. Slightly negative
/// eigenvalues from roundoff are clamped to zero; an asymmetric input is
/// rejected.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

/// Frechet distance between two Gaussians. When the cross term goes
/// noticeably non-PSD both covariances get a small diagonal ridge and the
/// term is recomputed; the result is clamped at zero.
double fid(const FeatureStats& real, const FeatureStats& fake);

/// Unbiased polynomial-kernel MMD^2 with k(x,y) = (x.y/d + 1)^3.
/// Both sets need at least 2 rows and matching dimension.
double kid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake);

/// exp(mean_i KL(p_i || mean_j p_j)) over rows of class probabilities.
/// Rows must be nonnegative and sum to 1 within 1e-6.
double inception_score(const Eigen::MatrixXd& probs);

}  // namespace affgan::metrics
