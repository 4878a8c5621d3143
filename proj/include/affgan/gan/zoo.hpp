#pragma once

#include <memory>
#include <string>
#include <vector>

#include "affgan/nn/net.hpp"

namespace affgan::gan {

using nn::Mode;
using nn::Tensor;

enum class Family { DCGAN, CGAN, ACGAN, PAGAN, WGAN_GP };
enum class DiscVariant { BatchNorm, Dropout, SpectralNorm };

std::string to_string(Family f);
std::string to_string(DiscVariant v);
Family family_from_string(const std::string& s);
DiscVariant variant_from_string(const std::string& s);

struct ModelSpec {
  Family family = Family::DCGAN;
  DiscVariant disc_variant = DiscVariant::BatchNorm;
  int latent_dim = 100;
  int image_size = 64;
  int channels = 3;
  int num_classes = 0;
  int pagan_max_level = 2;
  int base_width = 64;

  bool conditional() const {
    return family == Family::CGAN || family == Family::ACGAN;
  }
  /// e.g. "dcgan_bn"
  std::string model_id() const;
  void validate() const;
  /// Number of strided halving/doubling blocks between 4x4 and image_size.
  int depth() const;
};

/// Dimension of the label embedding concatenated to the generator latent.
constexpr int kGenLabelEmbedDim = 32;

/// DCGAN-style transposed-conv generator. Conditional families receive a
/// learned label embedding concatenated to the latent vector.
class GeneratorNet {
 public:
  GeneratorNet(const ModelSpec& spec, uint64_t init_seed);

  /// z is (N, latent_dim); labels must be sized N for conditional
  /// families and empty otherwise. Output is (N, channels, S, S) in
  /// [-1, 1].
  Tensor forward(const Tensor& z, const std::vector<int>& labels, Mode mode,
                 Rng* rng = nullptr);
  /// Backpropagates d(loss)/d(output); accumulates parameter gradients.
  void backward(const Tensor& d_out);
  void zero_grad();
  std::vector<nn::Param*> params();
  int64_t parameter_count();
  const ModelSpec& spec() const { return spec_; }
  nn::Net& trunk() { return trunk_; }
  nn::Embedding* label_embedding() { return embed_.get(); }

 private:
  ModelSpec spec_;
  nn::Net trunk_;
  std::unique_ptr<nn::Embedding> embed_;
  std::vector<int> last_labels_;
};

struct DiscOutput {
  /// (N, 1): probability for BCE families, raw critic value for WGAN_GP.
  Tensor score;
  /// (N, 1): pre-sigmoid realness logits (equals score for WGAN_GP).
  Tensor logits;
  /// (N, num_classes): ACGAN auxiliary head, empty otherwise.
  Tensor class_logits;
};

class DiscriminatorNet {
 public:
  DiscriminatorNet(const ModelSpec& spec, int pagan_level, uint64_t init_seed);

  /// x is (N, C + pagan_level, S, S); the caller appends PAGAN noise
  /// channels beforehand. labels drive the CGAN label plane.
  DiscOutput forward(const Tensor& x, const std::vector<int>& labels,
                     Mode mode, Rng* rng = nullptr);
  /// d_logits is (N, 1); d_class (N, num_classes) or empty. Returns the
  /// gradient with respect to the x passed to forward.
  Tensor backward(const Tensor& d_logits, const Tensor& d_class,
                  bool accumulate_params = true);
  /// Tangent pass for the gradient penalty (WGAN_GP only).
  Tensor penalty_forward(const Tensor& v);
  void set_penalty_ctx(bool on) { trunk_.set_penalty_ctx(on); }
  void zero_grad();
  std::vector<nn::Param*> params();
  int64_t parameter_count();

  int pagan_level() const { return pagan_level_; }
  /// Adds input channels for the new noise level; existing weights and
  /// optimizer state are preserved.
  void grow_pagan_level(int new_level, Rng& init);
  /// True for families whose score passes through a sigmoid.
  bool squashes_output() const { return spec_.family != Family::WGAN_GP; }

  const ModelSpec& spec() const { return spec_; }
  nn::Net& trunk() { return trunk_; }
  nn::Embedding* label_embedding() { return embed_.get(); }

 private:
  int head_channels() const;

  ModelSpec spec_;
  int pagan_level_;
  nn::Net trunk_;
  std::unique_ptr<nn::Embedding> embed_;  // CGAN label plane, dim = S*S
  std::vector<int> last_labels_;
  int last_n_ = 0;
};

/// Appends `level` channels of uniform +-1 noise to the batch. The noise
/// depends only on (seed, position), so the same seed reproduces it.
Tensor pagan_augment_input(const Tensor& batch, int level, uint64_t seed);

/// First `count` channels of each sample, e.g. to strip PAGAN noise
/// channels from an input gradient.
Tensor slice_channels(const Tensor& t, int count);

}  // namespace affgan::gan
