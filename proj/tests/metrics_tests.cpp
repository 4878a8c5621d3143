#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "affgan/core/error.hpp"
#include "affgan/core/rng.hpp"
#include "affgan/metrics/metrics.hpp"
#include "affgan/nn/bundle.hpp"
#include "affgan/nn/net.hpp"

using namespace affgan;
using namespace affgan::metrics;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("affgan_metrics_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

Eigen::MatrixXd random_psd(int d, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return a * a.transpose() / double(d);
}

Eigen::MatrixXd random_rows(int n, int d, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

nn::Tensor random_images(int n, int size, uint64_t seed) {
  nn::Tensor t({n, 3, size, size});
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) {
    t[i] = float(rng.uniform() * 2.0 - 1.0);
  }
  return t;
}

/// KID recomputed term by term with plain loops.
double kid_brute_force(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const int64_t m = x.rows(), n = y.rows();
  const double d = double(x.cols());
  auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double z = a.dot(b) / d + 1.0;
    return z * z * z;
  };
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < m; ++j)
      if (i != j) sx += k(x.row(i), x.row(j));
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j)
      if (i != j) sy += k(y.row(i), y.row(j));
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) sxy += k(x.row(i), y.row(j));
  return sx / (double(m) * double(m - 1)) + sy / (double(n) * double(n - 1)) -
         2.0 * sxy / (double(m) * double(n));
}

/// Tr sqrt(S1 S2) from the eigenvalues of the (nonsymmetric) product. For
/// PSD factors the product has real nonnegative spectrum, so this is an
/// independent route to the FID cross term.
double cross_trace_oracle(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(s1 * s2);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    sum += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
  }
  return sum;
}

}  // namespace

TEST_CASE("matrix_sqrt_psd: reconstruction across sizes") {
  for (int d : {2, 8, 64, 256}) {
    Eigen::MatrixXd m = random_psd(d, 100 + uint64_t(d));
    Eigen::MatrixXd s = matrix_sqrt_psd(m);
    CHECK((s - s.transpose()).norm() <= 1e-9 * s.norm());
    CHECK((s * s - m).norm() / m.norm() <= 1e-6);
  }
}

TEST_CASE("matrix_sqrt_psd: hand cases and rejection") {
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(5, 5);
  CHECK((matrix_sqrt_psd(eye) - eye).norm() <= 1e-12);

  Eigen::MatrixXd diag = Eigen::Vector3d(4.0, 9.0, 0.25).asDiagonal();
  Eigen::MatrixXd root = matrix_sqrt_psd(diag);
  CHECK(root(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(root(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(root(2, 2) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(matrix_sqrt_psd(Eigen::MatrixXd::Zero(4, 4)).norm() == 0.0);

  Eigen::MatrixXd skew(2, 2);
  skew << 1.0, 2.0, -2.0, 1.0;
  CHECK_THROWS_AS(matrix_sqrt_psd(skew), ValidationError);
}

TEST_CASE("fit_gaussian: tiny hand case and guard") {
  Eigen::MatrixXd f(2, 2);
  f << 0.0, 0.0, 2.0, 2.0;
  FeatureStats st = fit_gaussian(f);
  CHECK(st.n == 2);
  CHECK(st.mu(0) == 1.0);
  CHECK(st.mu(1) == 1.0);
  CHECK(st.sigma(0, 0) == 2.0);
  CHECK(st.sigma(0, 1) == 2.0);
  CHECK(st.sigma(1, 1) == 2.0);
  CHECK_THROWS_AS(fit_gaussian(f.topRows(1)), ValidationError);
}

TEST_CASE("fid: identical stats give zero") {
  FeatureStats a;
  a.mu = random_rows(1, 16, 3).row(0);
  a.sigma = random_psd(16, 4);
  a.n = 100;
  CHECK(fid(a, a) <= 1e-6);
}

TEST_CASE("fid: identity covariance reduces to the mean shift") {
  const int d = 10;
  FeatureStats a, b;
  a.mu = Eigen::VectorXd::Zero(d);
  b.mu = Eigen::VectorXd::Zero(d);
  b.mu(0) = 1.0;
  a.sigma = Eigen::MatrixXd::Identity(d, d);
  b.sigma = a.sigma;
  CHECK(std::abs(fid(a, b) - 1.0) <= 1e-6);
  b.mu(0) = 2.0;
  CHECK(std::abs(fid(a, b) - 4.0) <= 1e-6);
}

TEST_CASE("fid: diagonal covariances match the separable closed form") {
  const int d = 8;
  Rng rng(7);
  Eigen::VectorXd va(d), vb(d);
  FeatureStats a, b;
  a.mu.resize(d);
  b.mu.resize(d);
  for (int i = 0; i < d; ++i) {
    va(i) = 0.2 + rng.uniform() * 3.0;
    vb(i) = 0.2 + rng.uniform() * 3.0;
    a.mu(i) = rng.normal();
    b.mu(i) = rng.normal();
  }
  a.sigma = va.asDiagonal();
  b.sigma = vb.asDiagonal();
  double expect = (a.mu - b.mu).squaredNorm();
  for (int i = 0; i < d; ++i) {
    const double diff = std::sqrt(va(i)) - std::sqrt(vb(i));
    expect += diff * diff;
  }
  CHECK(std::abs(fid(a, b) - expect) <= 1e-6);
}

TEST_CASE("fid: random gaussians match the product-spectrum oracle") {
  const int d = 8;
  for (uint64_t trial = 0; trial < 5; ++trial) {
    FeatureStats a, b;
    a.mu = random_rows(1, d, 20 + trial).row(0);
    b.mu = random_rows(1, d, 30 + trial).row(0);
    a.sigma = random_psd(d, 40 + trial);
    b.sigma = random_psd(d, 50 + trial);
    const double oracle = (a.mu - b.mu).squaredNorm() + a.sigma.trace() +
                          b.sigma.trace() -
                          2.0 * cross_trace_oracle(a.sigma, b.sigma);
    CHECK(std::abs(fid(a, b) - oracle) <= 1e-6);
  }
}

TEST_CASE("fid: symmetric, finite on rank-deficient stats, guards dims") {
  // 5 samples in 16 dims: singular covariance on both sides
  FeatureStats a = fit_gaussian(random_rows(5, 16, 60));
  FeatureStats b = fit_gaussian(random_rows(5, 16, 61));
  const double ab = fid(a, b);
  const double ba = fid(b, a);
  CHECK(std::isfinite(ab));
  CHECK(ab >= 0.0);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-9));

  FeatureStats c = fit_gaussian(random_rows(5, 8, 62));
  CHECK_THROWS_AS(fid(a, c), ValidationError);
}

TEST_CASE("kid: exact match with the brute-force double sum") {
  // small integer features keep every intermediate value exact, so the
  // vectorized estimator and the loop must agree bit for bit
  Eigen::MatrixXd x(3, 2), y(4, 2);
  x << 0, 1, 2, 0, 1, 1;
  y << 1, 0, 0, 2, 2, 2, 0, 0;
  CHECK(kid(x, y) == kid_brute_force(x, y));

  Eigen::MatrixXd xr = random_rows(17, 8, 70);
  Eigen::MatrixXd yr = random_rows(23, 8, 71);
  const double fast = kid(xr, yr);
  const double slow = kid_brute_force(xr, yr);
  CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
}

TEST_CASE("kid: unbiased around zero for identical distributions") {
  const int pool = 200, half = 100, d = 8, reps = 100;
  Eigen::MatrixXd all = random_rows(pool, d, 80);
  Rng rng(81);
  std::vector<int> idx(pool);
  std::vector<double> vals(reps);
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < pool; ++i) idx[size_t(i)] = i;
    rng.shuffle(idx);
    Eigen::MatrixXd xa(half, d), xb(half, d);
    for (int i = 0; i < half; ++i) {
      xa.row(i) = all.row(idx[size_t(i)]);
      xb.row(i) = all.row(idx[size_t(half + i)]);
    }
    vals[size_t(r)] = kid(xa, xb);
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= (reps - 1);
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("kid: input guards") {
  Eigen::MatrixXd x = random_rows(4, 8, 90);
  Eigen::MatrixXd y = random_rows(4, 6, 91);
  CHECK_THROWS_AS(kid(x, y), ValidationError);
  CHECK_THROWS_AS(kid(x.topRows(1), x), ValidationError);
}

TEST_CASE("inception_score: hand values") {
  Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(6, 4, 0.25);
  CHECK(inception_score(uniform) == doctest::Approx(1.0).epsilon(1e-12));

  // balanced one-hot rows: every KL term is log k
  const int k = 4;
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(2 * k, k);
  for (int i = 0; i < 2 * k; ++i) onehot(i, i % k) = 1.0;
  CHECK(inception_score(onehot) == doctest::Approx(double(k)).epsilon(1e-12));

  // a single row always scores 1: KL against itself vanishes
  Eigen::MatrixXd one(1, 3);
  one << 0.7, 0.2, 0.1;
  CHECK(inception_score(one) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd two(2, 2);
  two << 0.8, 0.2, 0.4, 0.6;
  const double m0 = 0.6, m1 = 0.4;
  const double kl1 = 0.8 * std::log(0.8 / m0) + 0.2 * std::log(0.2 / m1);
  const double kl2 = 0.4 * std::log(0.4 / m0) + 0.6 * std::log(0.6 / m1);
  CHECK(inception_score(two) ==
        doctest::Approx(std::exp(0.5 * (kl1 + kl2))).epsilon(1e-12));
}

TEST_CASE("inception_score: rejects malformed rows") {
  Eigen::MatrixXd bad_sum(2, 2);
  bad_sum << 0.5, 0.4, 0.5, 0.5;
  CHECK_THROWS_AS(inception_score(bad_sum), ValidationError);

  Eigen::MatrixXd negative(1, 2);
  negative << 1.2, -0.2;
  CHECK_THROWS_AS(inception_score(negative), ValidationError);
}

TEST_CASE("stub extractor: deterministic projection") {
  StubExtractor a, b;
  CHECK(a.name() == "stub64");
  CHECK(a.feature_dim() == 64);
  nn::Tensor imgs = random_images(5, 16, 200);
  Eigen::MatrixXd fa = a.extract(imgs);
  Eigen::MatrixXd fb = b.extract(imgs);
  CHECK(fa.rows() == 5);
  CHECK(fa.cols() == 64);
  CHECK((fa - fb).norm() == 0.0);

  Eigen::MatrixXd fc = a.extract(random_images(5, 16, 201));
  CHECK((fa - fc).norm() > 0.0);

  // input size is free; the stub resamples to its own grid
  Eigen::MatrixXd f32 = a.extract(random_images(2, 32, 202));
  CHECK(f32.rows() == 2);

  nn::Tensor gray({2, 1, 16, 16});
  CHECK_THROWS_AS(a.extract(gray), ValidationError);
}

TEST_CASE("extract_features: chunking is invisible and guards hold") {
  StubExtractor ex;
  nn::Tensor imgs = random_images(7, 16, 210);
  Eigen::MatrixXd whole = extract_features(imgs, ex, 64);
  Eigen::MatrixXd parts = extract_features(imgs, ex, 3);
  CHECK((whole - parts).norm() == 0.0);

  nn::Tensor flat({4, 12});
  CHECK_THROWS_AS(extract_features(flat, ex), ValidationError);
  nn::Tensor gray({2, 1, 16, 16});
  CHECK_THROWS_AS(extract_features(gray, ex), ValidationError);

  nn::Tensor hot = random_images(2, 16, 211);
  hot[0] = 1.5f;
  CHECK_THROWS_AS(extract_features(hot, ex), ValidationError);
}

TEST_CASE("bundle extractor: replays the stored network") {
  auto dir = temp_dir("bundle");
  Rng init = Rng::stream(5, "tiny-extractor");
  nn::Net net;
  net.add<nn::Conv2d>(3, 4, 4, 2, 1, true, false, init);
  net.add<nn::LeakyReLU>(0.2f);
  net.add<nn::GlobalAvgPool>();

  nn::Bundle b;
  b.set_meta("arch", net.architecture());
  b.set_meta("name", "tiny4");
  b.set_meta("feature_dim", "4");
  b.set_meta("input_size", "16");
  nn::bundle_put_params(b, "", net.params(), false);
  const std::string path = (dir / "tiny4.afnb").string();
  nn::write_bundle(path, b);

  BundleExtractor ex(path);
  CHECK(ex.name() == "tiny4");
  CHECK(ex.feature_dim() == 4);

  nn::Tensor imgs = random_images(3, 16, 220);
  Eigen::MatrixXd got = ex.extract(imgs);
  nn::Tensor want = net.forward(imgs, nn::Mode::Eval);
  REQUIRE(got.rows() == 3);
  for (int s = 0; s < 3; ++s) {
    for (int j = 0; j < 4; ++j) {
      CHECK(got(s, j) == double(want[int64_t(s) * 4 + j]));
    }
  }

  // other input sizes come in through the resampler
  Eigen::MatrixXd up = ex.extract(random_images(2, 32, 221));
  CHECK(up.rows() == 2);
  CHECK(up.cols() == 4);

  // metadata is mandatory
  nn::Bundle incomplete;
  incomplete.set_meta("arch", net.architecture());
  incomplete.set_meta("name", "tiny4");
  incomplete.set_meta("input_size", "16");
  nn::bundle_put_params(incomplete, "", net.params(), false);
  const std::string bad = (dir / "bad.afnb").string();
  nn::write_bundle(bad, incomplete);
  CHECK_THROWS_AS(BundleExtractor{bad}, IntegrityError);

  std::filesystem::remove_all(dir);
}
