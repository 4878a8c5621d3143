#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "affgan/core/error.hpp"
#include "affgan/core/rng.hpp"
#include "affgan/gan/zoo.hpp"

using namespace affgan;
using namespace affgan::gan;
using nn::Mode;
using nn::Tensor;

namespace {

ModelSpec small_spec(Family f, DiscVariant v, int num_classes = 0) {
  ModelSpec s;
  s.family = f;
  s.disc_variant = v;
  s.latent_dim = 16;
  s.image_size = 32;
  s.base_width = 8;
  s.num_classes = num_classes;
  return s;
}

Tensor random_latent(int n, int dim, uint64_t seed) {
  Tensor z({n, dim});
  Rng rng(seed);
  for (int64_t i = 0; i < z.numel(); ++i) z[i] = rng.normalf(0.0f, 1.0f);
  return z;
}

Tensor random_batch(int n, int c, int s, uint64_t seed) {
  Tensor x({n, c, s, s});
  Rng rng(seed);
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = rng.normalf(0.0f, 0.5f);
  return x;
}

}  // namespace

TEST_CASE("model ids and string round trips") {
  CHECK(small_spec(Family::DCGAN, DiscVariant::BatchNorm).model_id() == "dcgan_bn");
  CHECK(small_spec(Family::WGAN_GP, DiscVariant::SpectralNorm).model_id() == "wgan_gp_sn");
  CHECK(small_spec(Family::PAGAN, DiscVariant::Dropout).model_id() == "pagan_dropout");
  for (Family f : {Family::DCGAN, Family::CGAN, Family::ACGAN, Family::PAGAN, Family::WGAN_GP}) {
    CHECK(family_from_string(to_string(f)) == f);
  }
  for (DiscVariant v : {DiscVariant::BatchNorm, DiscVariant::Dropout, DiscVariant::SpectralNorm}) {
    CHECK(variant_from_string(to_string(v)) == v);
  }
  CHECK(family_from_string("wgan-gp") == Family::WGAN_GP);
  CHECK(variant_from_string("batchnorm") == DiscVariant::BatchNorm);
  CHECK_THROWS_AS(family_from_string("gan2000"), ValidationError);
  CHECK_THROWS_AS(variant_from_string("layer_norm"), ValidationError);
}

TEST_CASE("spec validation catches inconsistent settings") {
  ModelSpec s = small_spec(Family::DCGAN, DiscVariant::BatchNorm);
  s.validate();
  CHECK(s.depth() == 3);  // 32 -> 16 -> 8 -> 4
  s.image_size = 64;
  CHECK(s.depth() == 4);

  ModelSpec bad = small_spec(Family::DCGAN, DiscVariant::BatchNorm);
  bad.image_size = 48;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.image_size = 16;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  ModelSpec cond = small_spec(Family::CGAN, DiscVariant::BatchNorm);
  CHECK_THROWS_AS(cond.validate(), ValidationError);  // needs classes
  cond.num_classes = 13;
  cond.validate();

  ModelSpec uncond = small_spec(Family::DCGAN, DiscVariant::BatchNorm, 13);
  CHECK_THROWS_AS(uncond.validate(), ValidationError);  // classes forbidden

  ModelSpec pg = small_spec(Family::PAGAN, DiscVariant::BatchNorm);
  pg.pagan_max_level = 3;
  CHECK_THROWS_AS(pg.validate(), ValidationError);
}

TEST_CASE("generator: output geometry and tanh range for every family") {
  for (Family f : {Family::DCGAN, Family::CGAN, Family::ACGAN, Family::PAGAN, Family::WGAN_GP}) {
    const bool cond = f == Family::CGAN || f == Family::ACGAN;
    ModelSpec spec = small_spec(f, DiscVariant::BatchNorm, cond ? 5 : 0);
    GeneratorNet g(spec, 416);
    Tensor z = random_latent(3, 16, 1);
    std::vector<int> labels = cond ? std::vector<int>{0, 3, 4} : std::vector<int>{};
    Tensor img = g.forward(z, labels, Mode::Train);
    REQUIRE(img.ndim() == 4);
    CHECK(img.dim(0) == 3);
    CHECK(img.dim(1) == 3);
    CHECK(img.dim(2) == 32);
    CHECK(img.dim(3) == 32);
    for (int64_t i = 0; i < img.numel(); ++i) {
      CHECK(img[i] >= -1.0f);
      CHECK(img[i] <= 1.0f);
    }
    CHECK((g.label_embedding() != nullptr) == cond);
  }
}

TEST_CASE("generator: latent and label validation") {
  GeneratorNet g(small_spec(Family::DCGAN, DiscVariant::BatchNorm), 416);
  CHECK_THROWS_AS(g.forward(random_latent(2, 8, 1), {}, Mode::Train), ValidationError);
  CHECK_THROWS_AS(g.forward(random_latent(2, 16, 1), {0, 1}, Mode::Train), ValidationError);

  GeneratorNet cg(small_spec(Family::CGAN, DiscVariant::BatchNorm, 4), 416);
  CHECK_THROWS_AS(cg.forward(random_latent(2, 16, 1), {0}, Mode::Train), ValidationError);
}

TEST_CASE("conditional generator: labels change the output") {
  ModelSpec spec = small_spec(Family::CGAN, DiscVariant::BatchNorm, 6);
  GeneratorNet g(spec, 416);
  Tensor z = random_latent(2, 16, 7);
  Tensor a = g.forward(z, {1, 1}, Mode::Eval);
  Tensor b = g.forward(z, {1, 2}, Mode::Eval);
  // first sample shares z and label, second differs only in label
  double same = 0.0, diff = 0.0;
  const int64_t block = a.numel() / 2;
  for (int64_t i = 0; i < block; ++i) same += std::abs(double(a[i]) - double(b[i]));
  for (int64_t i = block; i < a.numel(); ++i) diff += std::abs(double(a[i]) - double(b[i]));
  CHECK(same == 0.0);
  CHECK(diff > 0.0);
}

TEST_CASE("discriminator: head shapes per family") {
  const int n = 4;
  for (Family f : {Family::DCGAN, Family::PAGAN, Family::WGAN_GP}) {
    DiscriminatorNet d(small_spec(f, DiscVariant::BatchNorm), 0, 416);
    DiscOutput out = d.forward(random_batch(n, 3, 32, 2), {}, Mode::Train);
    CHECK(out.score.dim(0) == n);
    CHECK(out.score.dim(1) == 1);
    CHECK(out.class_logits.numel() == 0);
  }

  DiscriminatorNet cd(small_spec(Family::CGAN, DiscVariant::BatchNorm, 5), 0, 416);
  DiscOutput cout = cd.forward(random_batch(n, 3, 32, 3), {0, 1, 2, 3}, Mode::Train);
  CHECK(cout.score.dim(0) == n);
  CHECK(cd.label_embedding() != nullptr);

  DiscriminatorNet ad(small_spec(Family::ACGAN, DiscVariant::BatchNorm, 5), 0, 416);
  DiscOutput aout = ad.forward(random_batch(n, 3, 32, 4), {}, Mode::Train);
  CHECK(aout.class_logits.dim(0) == n);
  CHECK(aout.class_logits.dim(1) == 5);
}

TEST_CASE("discriminator: probabilities for BCE families, raw critic for wgan") {
  Tensor x = random_batch(6, 3, 32, 5);
  DiscriminatorNet bce(small_spec(Family::DCGAN, DiscVariant::BatchNorm), 0, 416);
  DiscOutput b = bce.forward(x, {}, Mode::Train);
  CHECK(bce.squashes_output());
  for (int i = 0; i < 6; ++i) {
    CHECK(b.score[i] > 0.0f);
    CHECK(b.score[i] < 1.0f);
    const double sig = 1.0 / (1.0 + std::exp(-double(b.logits[i])));
    CHECK(double(b.score[i]) == doctest::Approx(sig).epsilon(1e-5));
  }

  DiscriminatorNet critic(small_spec(Family::WGAN_GP, DiscVariant::SpectralNorm), 0, 416);
  DiscOutput c = critic.forward(x, {}, Mode::Train);
  CHECK_FALSE(critic.squashes_output());
  for (int i = 0; i < 6; ++i) CHECK(c.score[i] == c.logits[i]);
}

TEST_CASE("discriminator variants wire the right layers") {
  using nn::BatchNorm2d;
  using nn::Conv2d;
  using nn::Dropout;

  DiscriminatorNet bn(small_spec(Family::DCGAN, DiscVariant::BatchNorm), 0, 416);
  CHECK(bn.trunk().contains<BatchNorm2d>());
  CHECK_FALSE(bn.trunk().contains<Dropout>());
  CHECK_FALSE(bn.trunk().find_first<Conv2d>()->has_spectral_norm());

  DiscriminatorNet drop(small_spec(Family::DCGAN, DiscVariant::Dropout), 0, 416);
  CHECK(drop.trunk().contains<Dropout>());

  DiscriminatorNet sn(small_spec(Family::DCGAN, DiscVariant::SpectralNorm), 0, 416);
  CHECK(sn.trunk().find_first<Conv2d>()->has_spectral_norm());
  CHECK_FALSE(sn.trunk().contains<BatchNorm2d>());

  // per-sample gradient penalty forbids batch coupling: the critic never
  // carries batchnorm, whatever the variant says
  DiscriminatorNet wgan(small_spec(Family::WGAN_GP, DiscVariant::BatchNorm), 0, 416);
  CHECK_FALSE(wgan.trunk().contains<BatchNorm2d>());
}

TEST_CASE("generator parameter count matches the closed-form sum") {
  // default topology: 100 -> 512x4x4 -> ... -> 3x64x64, width 64
  ModelSpec spec;  // defaults: latent 100, size 64, width 64
  GeneratorNet g(spec, 416);
  // independent sum over the block structure
  int64_t expect = 0;
  const int depth = spec.depth();
  int c = spec.base_width << (depth - 1);
  expect += int64_t(spec.latent_dim) * c * 16;  // stem convT, no bias
  expect += 2 * c;                              // bn
  for (int i = 1; i < depth; ++i) {
    expect += int64_t(c) * (c / 2) * 16;
    c /= 2;
    expect += 2 * c;
  }
  expect += int64_t(c) * spec.channels * 16 + spec.channels;  // output convT + bias
  CHECK(g.parameter_count() == expect);
  CHECK(g.parameter_count() == 3576707);
}

TEST_CASE("pagan noise channels: seeded, +-1, content preserved") {
  Tensor x = random_batch(2, 3, 32, 9);
  Tensor a = pagan_augment_input(x, 2, 77);
  Tensor b = pagan_augment_input(x, 2, 77);
  Tensor c = pagan_augment_input(x, 2, 78);
  REQUIRE(a.dim(1) == 5);
  const int64_t plane = 32 * 32;
  for (int s = 0; s < 2; ++s) {
    // original channels copied verbatim
    for (int64_t i = 0; i < 3 * plane; ++i) {
      CHECK(a[int64_t(s) * 5 * plane + i] == x[int64_t(s) * 3 * plane + i]);
    }
    // noise is +-1, reproducible, seed-sensitive
    bool differs = false;
    for (int64_t i = 3 * plane; i < 5 * plane; ++i) {
      const float v = a[int64_t(s) * 5 * plane + i];
      CHECK((v == 1.0f || v == -1.0f));
      CHECK(a[int64_t(s) * 5 * plane + i] == b[int64_t(s) * 5 * plane + i]);
      differs |= a[int64_t(s) * 5 * plane + i] != c[int64_t(s) * 5 * plane + i];
    }
    CHECK(differs);
  }
  // level 0 passes the batch through untouched
  Tensor same = pagan_augment_input(x, 0, 1);
  CHECK(same.dim(1) == 3);
}

TEST_CASE("slice_channels strips pagan noise from gradients") {
  Tensor t = random_batch(2, 5, 32, 11);
  Tensor s = slice_channels(t, 3);
  CHECK(s.dim(1) == 3);
  const int64_t plane = 32 * 32;
  for (int smp = 0; smp < 2; ++smp) {
    for (int64_t i = 0; i < 3 * plane; ++i) {
      CHECK(s[int64_t(smp) * 3 * plane + i] == t[int64_t(smp) * 5 * plane + i]);
    }
  }
}

TEST_CASE("pagan growth preserves weights and optimizer state") {
  ModelSpec spec = small_spec(Family::PAGAN, DiscVariant::Dropout);
  DiscriminatorNet d(spec, 0, 416);
  auto* first = d.trunk().find_first<nn::Conv2d>();
  REQUIRE(first != nullptr);
  std::vector<nn::Param*> ps;
  first->collect_params(ps);
  const Eigen::MatrixXf before = ps[0]->value;
  ps[0]->adam_m.setConstant(0.125f);  // distinctive moment payload

  Rng grow_rng = Rng::stream(416, "pagan-grow", 1);
  d.grow_pagan_level(1, grow_rng);
  CHECK(d.pagan_level() == 1);
  CHECK(first->in_channels() == 4);

  const Eigen::MatrixXf& after = ps[0]->value;
  REQUIRE(after.rows() == before.rows() + 16);  // one channel of 4x4 taps
  CHECK((after.topRows(before.rows()) - before).norm() == 0.0f);
  CHECK(ps[0]->adam_m.topRows(before.rows()).isConstant(0.125f));
  CHECK(ps[0]->adam_m.bottomRows(16).isZero());

  // forward now expects the extra channel
  Tensor x4 = pagan_augment_input(random_batch(2, 3, 32, 13), 1, 5);
  DiscOutput out = d.forward(x4, {}, Mode::Eval);
  CHECK(out.score.dim(0) == 2);

  // shrink or exceeding max is refused
  Rng r2 = Rng::stream(1, "x", 0);
  CHECK_THROWS_AS(d.grow_pagan_level(0, r2), ValidationError);
  CHECK_THROWS_AS(d.grow_pagan_level(3, r2), ValidationError);

  DiscriminatorNet plain(small_spec(Family::DCGAN, DiscVariant::BatchNorm), 0, 416);
  CHECK_THROWS_AS(plain.grow_pagan_level(1, r2), ValidationError);
}

TEST_CASE("discriminator rejects wrong input geometry") {
  DiscriminatorNet d(small_spec(Family::DCGAN, DiscVariant::BatchNorm), 0, 416);
  CHECK_THROWS_AS(d.forward(random_batch(2, 4, 32, 1), {}, Mode::Train), ValidationError);
  CHECK_THROWS_AS(d.forward(random_batch(2, 3, 16, 1), {}, Mode::Train), ValidationError);
  CHECK_THROWS_AS(d.forward(random_batch(2, 3, 32, 1), {0, 1}, Mode::Train), ValidationError);
  // non-pagan families refuse a nonzero starting level
  CHECK_THROWS_AS(DiscriminatorNet(small_spec(Family::DCGAN, DiscVariant::BatchNorm), 1, 416),
                  ValidationError);
}

TEST_CASE("generator backward reaches the label embedding") {
  ModelSpec spec = small_spec(Family::CGAN, DiscVariant::BatchNorm, 4);
  GeneratorNet g(spec, 416);
  Tensor z = random_latent(2, 16, 5);
  Tensor img = g.forward(z, {1, 3}, Mode::Train);
  g.zero_grad();
  Tensor dy(img.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dy[i] = 1e-2f;
  g.backward(dy);
  nn::Param& table = g.label_embedding()->table();
  CHECK(table.grad.col(1).norm() > 0.0f);
  CHECK(table.grad.col(3).norm() > 0.0f);
  CHECK(table.grad.col(0).norm() == 0.0f);
  CHECK(table.grad.col(2).norm() == 0.0f);
}

TEST_CASE("same seed builds identical networks") {
  ModelSpec spec = small_spec(Family::DCGAN, DiscVariant::SpectralNorm);
  GeneratorNet g1(spec, 416), g2(spec, 416);
  GeneratorNet g3(spec, 417);
  auto p1 = g1.params(), p2 = g2.params(), p3 = g3.params();
  REQUIRE(p1.size() == p2.size());
  bool all_equal = true, any_diff_seed = false;
  for (size_t i = 0; i < p1.size(); ++i) {
    all_equal &= (p1[i]->value - p2[i]->value).norm() == 0.0f;
    any_diff_seed |= (p1[i]->value - p3[i]->value).norm() != 0.0f;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}
