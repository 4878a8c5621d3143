#include "affgan/gan/zoo.hpp"

#include <cmath>
#include <cstring>

#include "affgan/core/error.hpp"

namespace affgan::gan {

using nn::BatchNorm2d;
using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::Dropout;
using nn::Embedding;
using nn::LeakyReLU;
using nn::Param;
using nn::ReLU;
using nn::Tanh;

std::string to_string(Family f) {
  switch (f) {
    case Family::DCGAN: return "dcgan";
    case Family::CGAN: return "cgan";
    case Family::ACGAN: return "acgan";
    case Family::PAGAN: return "pagan";
    case Family::WGAN_GP: return "wgan_gp";
  }
  return "?";
}

std::string to_string(DiscVariant v) {
  switch (v) {
    case DiscVariant::BatchNorm: return "bn";
    case DiscVariant::Dropout: return "dropout";
    case DiscVariant::SpectralNorm: return "sn";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "dcgan") return Family::DCGAN;
  if (s == "cgan") return Family::CGAN;
  if (s == "acgan") return Family::ACGAN;
  if (s == "pagan") return Family::PAGAN;
  if (s == "wgan_gp" || s == "wgan-gp") return Family::WGAN_GP;
  throw ValidationError(msg("unknown model family '", s, "'"));
}

DiscVariant variant_from_string(const std::string& s) {
  if (s == "bn" || s == "batchnorm") return DiscVariant::BatchNorm;
  if (s == "dropout") return DiscVariant::Dropout;
  if (s == "sn" || s == "spectralnorm") return DiscVariant::SpectralNorm;
  throw ValidationError(msg("unknown discriminator variant '", s, "'"));
}

std::string ModelSpec::model_id() const {
  return to_string(family) + "_" + to_string(disc_variant);
}

int ModelSpec::depth() const {
  int d = 0;
  for (int s = image_size; s > 4; s /= 2) ++d;
  return d;
}

void ModelSpec::validate() const {
  if (latent_dim <= 0) throw ValidationError("latent_dim must be positive");
  if (channels <= 0) throw ValidationError("channels must be positive");
  if (base_width <= 0) throw ValidationError("base_width must be positive");
  if (image_size < 32 || (image_size & (image_size - 1)) != 0) {
    throw ValidationError(msg("image_size must be a power of two >= 32, got ",
                              image_size));
  }
  if (conditional()) {
    if (num_classes < 2) {
      throw ValidationError(msg(to_string(family),
                                " needs num_classes >= 2, got ", num_classes));
    }
  } else if (num_classes != 0) {
    throw ValidationError(msg(to_string(family),
                              " is unconditional; num_classes must be 0"));
  }
  if (pagan_max_level < 0 || pagan_max_level > 2) {
    throw ValidationError(msg("pagan_max_level must be in [0, 2], got ",
                              pagan_max_level));
  }
}

// ---------------------------------------------------------------------------
// Generator

GeneratorNet::GeneratorNet(const ModelSpec& spec, uint64_t init_seed)
    : spec_(spec) {
  spec_.validate();
  Rng init = Rng::stream(init_seed, "init-g");
  const int depth = spec_.depth();
  const int in_dim =
      spec_.latent_dim + (spec_.conditional() ? kGenLabelEmbedDim : 0);
  int c = spec_.base_width << (depth - 1);
  trunk_.add<ConvTranspose2d>(in_dim, c, 4, 1, 0, false, init);
  trunk_.add<BatchNorm2d>(c, init);
  trunk_.add<ReLU>();
  for (int i = 1; i < depth; ++i) {
    trunk_.add<ConvTranspose2d>(c, c / 2, 4, 2, 1, false, init);
    c /= 2;
    trunk_.add<BatchNorm2d>(c, init);
    trunk_.add<ReLU>();
  }
  trunk_.add<ConvTranspose2d>(c, spec_.channels, 4, 2, 1, true, init);
  trunk_.add<Tanh>();
  if (spec_.conditional()) {
    embed_ = std::make_unique<Embedding>(spec_.num_classes, kGenLabelEmbedDim,
                                         "g_embed", init);
  }
}

Tensor GeneratorNet::forward(const Tensor& z, const std::vector<int>& labels,
                             Mode mode, Rng* rng) {
  if (z.ndim() != 2 || z.dim(1) != spec_.latent_dim) {
    throw ValidationError(msg("generator expects (N, ", spec_.latent_dim,
                              ") latent input"));
  }
  const int n = z.dim(0);
  Tensor in;
  if (spec_.conditional()) {
    if (int(labels.size()) != n) {
      throw ValidationError(msg("conditional generator needs ", n,
                                " labels, got ", labels.size()));
    }
    last_labels_ = labels;
    Tensor e = embed_->forward(labels);
    const int d = spec_.latent_dim + kGenLabelEmbedDim;
    in = Tensor({n, d, 1, 1});
    for (int s = 0; s < n; ++s) {
      std::memcpy(in.data() + int64_t(s) * d, z.data() + int64_t(s) * spec_.latent_dim,
                  size_t(spec_.latent_dim) * 4);
      std::memcpy(in.data() + int64_t(s) * d + spec_.latent_dim,
                  e.data() + int64_t(s) * kGenLabelEmbedDim,
                  size_t(kGenLabelEmbedDim) * 4);
    }
  } else {
    if (!labels.empty()) {
      throw ValidationError("unconditional generator takes no labels");
    }
    in = z.reshaped({n, spec_.latent_dim, 1, 1});
  }
  return trunk_.forward(in, mode, rng);
}

void GeneratorNet::backward(const Tensor& d_out) {
  Tensor d_in = trunk_.backward(d_out, true);
  if (spec_.conditional()) {
    const int n = d_in.dim(0);
    const int d = spec_.latent_dim + kGenLabelEmbedDim;
    Tensor d_embed({n, kGenLabelEmbedDim});
    for (int s = 0; s < n; ++s) {
      std::memcpy(d_embed.data() + int64_t(s) * kGenLabelEmbedDim,
                  d_in.data() + int64_t(s) * d + spec_.latent_dim,
                  size_t(kGenLabelEmbedDim) * 4);
    }
    embed_->backward(last_labels_, d_embed);
  }
}

void GeneratorNet::zero_grad() {
  for (Param* p : params()) p->grad.setZero();
}

std::vector<Param*> GeneratorNet::params() {
  std::vector<Param*> out = trunk_.params();
  if (embed_) out.push_back(&embed_->table());
  return out;
}

int64_t GeneratorNet::parameter_count() {
  int64_t n = 0;
  for (Param* p : params()) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Discriminator

int DiscriminatorNet::head_channels() const {
  return spec_.family == Family::ACGAN ? 1 + spec_.num_classes : 1;
}

DiscriminatorNet::DiscriminatorNet(const ModelSpec& spec, int pagan_level,
                                   uint64_t init_seed)
    : spec_(spec), pagan_level_(pagan_level) {
  spec_.validate();
  if (pagan_level_ < 0 || pagan_level_ > spec_.pagan_max_level) {
    throw ValidationError(msg("pagan_level ", pagan_level_,
                              " outside [0, ", spec_.pagan_max_level, "]"));
  }
  if (spec_.family != Family::PAGAN && pagan_level_ != 0) {
    throw ValidationError("only PAGAN uses noise input channels");
  }
  Rng init = Rng::stream(init_seed, "init-d");
  const int depth = spec_.depth();
  const bool sn = spec_.disc_variant == DiscVariant::SpectralNorm;
  // Batch statistics leak across samples, which breaks the per-sample
  // gradient penalty; the critic therefore never normalizes.
  const bool bn = !sn && spec_.family != Family::WGAN_GP;
  const bool dropout = spec_.disc_variant == DiscVariant::Dropout;

  int in_c = spec_.channels + pagan_level_;
  if (spec_.family == Family::CGAN) in_c += 1;
  int c = spec_.base_width;
  trunk_.add<Conv2d>(in_c, c, 4, 2, 1, false, sn, init);
  trunk_.add<LeakyReLU>(0.2f);
  if (dropout) trunk_.add<Dropout>(0.3f);
  for (int i = 1; i < depth; ++i) {
    trunk_.add<Conv2d>(c, c * 2, 4, 2, 1, false, sn, init);
    c *= 2;
    if (bn) trunk_.add<BatchNorm2d>(c, init);
    trunk_.add<LeakyReLU>(0.2f);
    if (dropout) trunk_.add<Dropout>(0.3f);
  }
  trunk_.add<Conv2d>(c, head_channels(), 4, 1, 0, true, sn, init);
  if (spec_.family == Family::CGAN) {
    embed_ = std::make_unique<Embedding>(
        spec_.num_classes, spec_.image_size * spec_.image_size, "d_embed",
        init);
  }
}

DiscOutput DiscriminatorNet::forward(const Tensor& x,
                                     const std::vector<int>& labels, Mode mode,
                                     Rng* rng) {
  const int expect_c = spec_.channels + pagan_level_;
  if (x.ndim() != 4 || x.dim(1) != expect_c || x.dim(2) != spec_.image_size ||
      x.dim(3) != spec_.image_size) {
    throw ValidationError(msg("discriminator expects (N, ", expect_c, ", ",
                              spec_.image_size, ", ", spec_.image_size,
                              ") input"));
  }
  const int n = x.dim(0);
  last_n_ = n;
  Tensor in;
  if (spec_.family == Family::CGAN) {
    if (int(labels.size()) != n) {
      throw ValidationError(msg("conditional discriminator needs ", n,
                                " labels, got ", labels.size()));
    }
    last_labels_ = labels;
    Tensor plane = embed_->forward(labels);
    const int s2 = spec_.image_size * spec_.image_size;
    const int64_t in_block = int64_t(expect_c) * s2;
    in = Tensor({n, expect_c + 1, spec_.image_size, spec_.image_size});
    for (int s = 0; s < n; ++s) {
      std::memcpy(in.data() + int64_t(s) * (in_block + s2),
                  x.data() + int64_t(s) * in_block, size_t(in_block) * 4);
      std::memcpy(in.data() + int64_t(s) * (in_block + s2) + in_block,
                  plane.data() + int64_t(s) * s2, size_t(s2) * 4);
    }
  } else {
    if (!labels.empty() && spec_.family != Family::ACGAN) {
      throw ValidationError("this discriminator takes no labels");
    }
    in = x;
  }
  Tensor raw = trunk_.forward(in, mode, rng);
  const int hc = head_channels();
  DiscOutput out;
  out.logits = Tensor({n, 1});
  for (int s = 0; s < n; ++s) out.logits[s] = raw[int64_t(s) * hc];
  out.score = Tensor({n, 1});
  if (squashes_output()) {
    for (int s = 0; s < n; ++s) {
      out.score[s] = 1.0f / (1.0f + std::exp(-out.logits[s]));
    }
  } else {
    out.score = out.logits;
  }
  if (spec_.family == Family::ACGAN) {
    out.class_logits = Tensor({n, spec_.num_classes});
    for (int s = 0; s < n; ++s) {
      std::memcpy(out.class_logits.data() + int64_t(s) * spec_.num_classes,
                  raw.data() + int64_t(s) * hc + 1,
                  size_t(spec_.num_classes) * 4);
    }
  }
  return out;
}

Tensor DiscriminatorNet::backward(const Tensor& d_logits, const Tensor& d_class,
                                  bool accumulate_params) {
  const int n = last_n_;
  const int hc = head_channels();
  Tensor d_raw({n, hc, 1, 1});
  for (int s = 0; s < n; ++s) {
    d_raw[int64_t(s) * hc] = d_logits[s];
    if (spec_.family == Family::ACGAN && d_class.numel() > 0) {
      std::memcpy(d_raw.data() + int64_t(s) * hc + 1,
                  d_class.data() + int64_t(s) * spec_.num_classes,
                  size_t(spec_.num_classes) * 4);
    }
  }
  Tensor d_in = trunk_.backward(d_raw, accumulate_params);
  if (spec_.family == Family::CGAN) {
    const int s2 = spec_.image_size * spec_.image_size;
    const int xc = spec_.channels + pagan_level_;
    const int64_t x_block = int64_t(xc) * s2;
    if (accumulate_params) {
      Tensor d_plane({n, s2});
      for (int s = 0; s < n; ++s) {
        std::memcpy(d_plane.data() + int64_t(s) * s2,
                    d_in.data() + int64_t(s) * (x_block + s2) + x_block,
                    size_t(s2) * 4);
      }
      embed_->backward(last_labels_, d_plane);
    }
    Tensor d_x({n, xc, spec_.image_size, spec_.image_size});
    for (int s = 0; s < n; ++s) {
      std::memcpy(d_x.data() + int64_t(s) * x_block,
                  d_in.data() + int64_t(s) * (x_block + s2),
                  size_t(x_block) * 4);
    }
    return d_x;
  }
  return d_in;
}

Tensor DiscriminatorNet::penalty_forward(const Tensor& v) {
  if (spec_.family != Family::WGAN_GP) {
    throw ValidationError("gradient penalty only applies to the WGAN_GP critic");
  }
  return trunk_.penalty_forward(v);
}

void DiscriminatorNet::zero_grad() {
  for (Param* p : params()) p->grad.setZero();
}

std::vector<Param*> DiscriminatorNet::params() {
  std::vector<Param*> out = trunk_.params();
  if (embed_) out.push_back(&embed_->table());
  return out;
}

int64_t DiscriminatorNet::parameter_count() {
  int64_t n = 0;
  for (Param* p : params()) n += p->value.size();
  return n;
}

void DiscriminatorNet::grow_pagan_level(int new_level, Rng& init) {
  if (spec_.family != Family::PAGAN) {
    throw ValidationError("only PAGAN grows noise input channels");
  }
  if (new_level < pagan_level_ || new_level > spec_.pagan_max_level) {
    throw ValidationError(msg("cannot grow pagan level ", pagan_level_, " -> ",
                              new_level, " (max ", spec_.pagan_max_level, ")"));
  }
  if (new_level == pagan_level_) return;
  auto* first = trunk_.find_first<Conv2d>();
  first->grow_input_channels(new_level - pagan_level_, init);
  pagan_level_ = new_level;
}

// ---------------------------------------------------------------------------

Tensor pagan_augment_input(const Tensor& batch, int level, uint64_t seed) {
  if (level == 0) return batch;
  const int n = batch.dim(0), c = batch.dim(1), h = batch.dim(2),
            w = batch.dim(3);
  Rng rng = Rng::stream(seed, "pagan-noise");
  Tensor out({n, c + level, h, w});
  const int64_t plane = int64_t(h) * w;
  for (int s = 0; s < n; ++s) {
    std::memcpy(out.data() + int64_t(s) * (c + level) * plane,
                batch.data() + int64_t(s) * c * plane, size_t(c * plane) * 4);
    float* noise = out.data() + (int64_t(s) * (c + level) + c) * plane;
    for (int64_t i = 0; i < level * plane; ++i) noise[i] = rng.sign();
  }
  return out;
}

Tensor slice_channels(const Tensor& t, int count) {
  const int n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
  if (count == c) return t;
  Tensor out({n, count, h, w});
  const int64_t plane = int64_t(h) * w;
  for (int s = 0; s < n; ++s) {
    std::memcpy(out.data() + int64_t(s) * count * plane,
                t.data() + int64_t(s) * c * plane, size_t(count * plane) * 4);
  }
  return out;
}

}  // namespace affgan::gan
