#include "affgan/metrics/metrics.hpp"

#include <cmath>
#include <iostream>

#include "affgan/core/error.hpp"
#include "affgan/core/rng.hpp"

namespace affgan::metrics {

namespace {

void resize_plane_bilinear(const float* src, int sh, int sw, float* dst,
                           int dh, int dw) {
  const float sy = float(sh) / float(dh);
  const float sx = float(sw) / float(dw);
  for (int y = 0; y < dh; ++y) {
    float fy = (float(y) + 0.5f) * sy - 0.5f;
    if (fy < 0.0f) fy = 0.0f;
    int y0 = int(fy);
    if (y0 > sh - 1) y0 = sh - 1;
    int y1 = y0 + 1 < sh ? y0 + 1 : sh - 1;
    const float wy = fy - float(y0);
    for (int x = 0; x < dw; ++x) {
      float fx = (float(x) + 0.5f) * sx - 0.5f;
      if (fx < 0.0f) fx = 0.0f;
      int x0 = int(fx);
      if (x0 > sw - 1) x0 = sw - 1;
      int x1 = x0 + 1 < sw ? x0 + 1 : sw - 1;
      const float wx = fx - float(x0);
      const float top = src[y0 * sw + x0] * (1.0f - wx) + src[y0 * sw + x1] * wx;
      const float bot = src[y1 * sw + x0] * (1.0f - wx) + src[y1 * sw + x1] * wx;
      dst[y * dw + x] = top * (1.0f - wy) + bot * wy;
    }
  }
}

nn::Tensor resize_batch(const nn::Tensor& images, int size) {
  const int n = images.dim(0), c = images.dim(1);
  const int h = images.dim(2), w = images.dim(3);
  if (h == size && w == size) return images;
  nn::Tensor out({n, c, size, size});
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      const float* src = images.data() + (int64_t(s) * c + ch) * h * w;
      float* dst = out.data() + (int64_t(s) * c + ch) * size * size;
      resize_plane_bilinear(src, h, w, dst, size, size);
    }
  }
  return out;
}

void check_image_batch(const nn::Tensor& images) {
  if (images.ndim() != 4 || images.dim(1) != 3) {
    throw ValidationError("feature extraction expects (N, 3, H, W) images");
  }
  if (images.dim(0) < 1) {
    throw ValidationError("feature extraction needs at least one image");
  }
  const auto a = images.array();
  const float lo = a.minCoeff(), hi = a.maxCoeff();
  if (lo < -1.001f || hi > 1.001f) {
    throw ValidationError(msg("image values outside [-1, 1]: range [", lo,
                              ", ", hi, "]"));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Extractors

StubExtractor::StubExtractor() {
  Rng rng = Rng::stream(416, "stub-extractor");
  projection_.resize(kDim, 192);
  const float scale = 1.0f / std::sqrt(192.0f);
  for (Eigen::Index i = 0; i < projection_.size(); ++i) {
    projection_.data()[i] = rng.normalf(0.0f, 1.0f) * scale;
  }
}

Eigen::MatrixXd StubExtractor::extract(const nn::Tensor& images) const {
  if (images.ndim() != 4 || images.dim(1) != 3) {
    throw ValidationError("stub extractor expects (N, 3, H, W) images");
  }
  const nn::Tensor small = resize_batch(images, 8);
  const int n = images.dim(0);
  Eigen::MatrixXd out(n, kDim);
  Eigen::VectorXf flat(192);
  for (int s = 0; s < n; ++s) {
    std::copy(small.data() + int64_t(s) * 192, small.data() + int64_t(s + 1) * 192,
              flat.data());
    out.row(s) = (projection_ * flat).cast<double>();
  }
  return out;
}

BundleExtractor::BundleExtractor(const std::string& bundle_path) {
  nn::Bundle b = nn::read_bundle(bundle_path);
  name_ = b.require_meta("name");
  feature_dim_ = std::stoi(b.require_meta("feature_dim"));
  input_size_ = std::stoi(b.require_meta("input_size"));
  net_ = nn::net_from_architecture(b.require_meta("arch"), 0);
  nn::bundle_get_params(b, "", net_.params(), false);
}

Eigen::MatrixXd BundleExtractor::extract(const nn::Tensor& images) const {
  nn::Tensor in = resize_batch(images, input_size_);
  nn::Tensor feats = net_.forward(in, nn::Mode::Eval);
  if (feats.ndim() != 2 || feats.dim(1) != feature_dim_) {
    throw IntegrityError(msg("extractor '", name_, "' produced dim ",
                             feats.ndim() == 2 ? feats.dim(1) : -1,
                             ", expected ", feature_dim_));
  }
  const int n = feats.dim(0);
  Eigen::MatrixXd out(n, feature_dim_);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < feature_dim_; ++j) {
      out(s, j) = double(feats[int64_t(s) * feature_dim_ + j]);
    }
  }
  return out;
}

Eigen::MatrixXd extract_features(const nn::Tensor& images,
                                 const FeatureExtractor& extractor, int chunk) {
  check_image_batch(images);
  const int n = images.dim(0), c = images.dim(1);
  const int h = images.dim(2), w = images.dim(3);
  const int64_t block = int64_t(c) * h * w;
  Eigen::MatrixXd out(n, extractor.feature_dim());
  for (int start = 0; start < n; start += chunk) {
    const int len = std::min(chunk, n - start);
    nn::Tensor part({len, c, h, w});
    std::copy(images.data() + start * block, images.data() + (start + len) * block,
              part.data());
    out.middleRows(start, len) = extractor.extract(part);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

FeatureStats fit_gaussian(const Eigen::MatrixXd& features) {
  const int64_t n = features.rows();
  if (n < 2) {
    throw ValidationError(msg("covariance needs at least 2 samples, got ", n));
  }
  FeatureStats st;
  st.n = n;
  st.mu = features.colwise().mean();
  Eigen::MatrixXd centered = features.rowwise() - st.mu.transpose();
  st.sigma = (centered.transpose() * centered) / double(n - 1);
  return st;
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw ValidationError("matrix square root expects a symmetric matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

/// Tr sqrt(sqrt(Sr) Sg sqrt(Sr)), plus the smallest eigenvalue seen.
double cross_trace(const Eigen::MatrixXd& sr, const Eigen::MatrixXd& sg,
                   double* min_eig) {
  Eigen::MatrixXd a = matrix_sqrt_psd(sr);
  Eigen::MatrixXd c = a * sg * a;
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  *min_eig = es.eigenvalues().minCoeff();
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

double fid(const FeatureStats& real, const FeatureStats& fake) {
  if (real.mu.size() != fake.mu.size()) {
    throw ValidationError("feature dimensions differ between the two sides");
  }
  Eigen::MatrixXd sr = real.sigma;
  Eigen::MatrixXd sg = fake.sigma;
  double min_eig = 0.0;
  double cross = cross_trace(sr, sg, &min_eig);
  if (min_eig < -1e-6) {
    const double ridge = 1e-6;
    sr.diagonal().array() += ridge;
    sg.diagonal().array() += ridge;
    cross = cross_trace(sr, sg, &min_eig);
  }
  const double value = (real.mu - fake.mu).squaredNorm() + sr.trace() +
                       sg.trace() - 2.0 * cross;
  if (value < -1e-3) {
    std::cerr << "warning: FID " << value
              << " clamped to 0; covariance estimates are ill-conditioned\n";
  }
  return value < 0.0 ? 0.0 : value;
}

double kid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake) {
  if (real.cols() != fake.cols()) {
    throw ValidationError("feature dimensions differ between the two sides");
  }
  const int64_t m = real.rows(), n = fake.rows();
  if (m < 2 || n < 2) {
    throw ValidationError("KID needs at least 2 samples on each side");
  }
  const double d = double(real.cols());
  auto kernel = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (((x * y.transpose()) / d).array() + 1.0).cube().matrix();
  };
  Eigen::MatrixXd kxx = kernel(real, real);
  Eigen::MatrixXd kyy = kernel(fake, fake);
  Eigen::MatrixXd kxy = kernel(real, fake);
  const double term_x = (kxx.sum() - kxx.trace()) / (double(m) * double(m - 1));
  const double term_y = (kyy.sum() - kyy.trace()) / (double(n) * double(n - 1));
  const double term_xy = 2.0 * kxy.sum() / (double(m) * double(n));
  return term_x + term_y - term_xy;
}

double inception_score(const Eigen::MatrixXd& probs) {
  const int64_t n = probs.rows(), k = probs.cols();
  if (n < 1 || k < 1) throw ValidationError("empty probability matrix");
  for (int64_t i = 0; i < n; ++i) {
    if (probs.row(i).minCoeff() < -1e-9) {
      throw ValidationError(msg("negative probability in row ", i));
    }
    if (std::abs(probs.row(i).sum() - 1.0) > 1e-6) {
      throw ValidationError(msg("row ", i, " sums to ", probs.row(i).sum(),
                                ", not 1"));
    }
  }
  Eigen::VectorXd marginal = probs.colwise().mean();
  double kl_sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < k; ++j) {
      const double p = probs(i, j);
      if (p > 0.0) kl_sum += p * (std::log(p) - std::log(marginal[j]));
    }
  }
  return std::exp(kl_sum / double(n));
}

}  // namespace affgan::metrics
