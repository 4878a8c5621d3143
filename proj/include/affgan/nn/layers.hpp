#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "affgan/core/rng.hpp"
#include "affgan/nn/spectral.hpp"
#include "affgan/nn/tensor.hpp"

namespace affgan::nn {

enum class Mode { Train, Eval };

/// A learnable parameter plus its gradient and Adam moments. Layers own the
/// storage; the optimizer and serializers reach it through pointers.
struct Param {
  std::string name;
  Eigen::MatrixXf value;
  Eigen::MatrixXf grad;
  Eigen::MatrixXf adam_m;
  Eigen::MatrixXf adam_v;

  void init_grad() {
    grad.setZero(value.rows(), value.cols());
    adam_m.setZero(value.rows(), value.cols());
    adam_v.setZero(value.rows(), value.cols());
  }
};

/// Base layer. backward() consumes the context saved by the immediately
/// preceding forward() and optionally accumulates parameter gradients.
///
/// penalty_forward() is the linearized (Jacobian-vector) pass used by the
/// gradient-penalty term: it propagates a tangent through the frozen
/// activation pattern of the last forward and, where `penalty_ctx` was
/// armed before that forward/backward pair, accumulates the penalty's
/// parameter gradients from the tangent and the saved backward deltas.
/// Only layers that are piecewise-linear in their input support it.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, Mode mode, Rng* rng) = 0;
  virtual Tensor backward(const Tensor& dy, bool accumulate_params) = 0;
  virtual Tensor penalty_forward(const Tensor& v);
  virtual void collect_params(std::vector<Param*>& out) {}
  virtual void set_penalty_ctx(bool on) { penalty_ctx_ = on; }
  /// One-token architecture description, e.g. "conv 3 64 4 2 1".
  virtual std::string describe() const = 0;

 protected:
  bool penalty_ctx_ = false;
};

/// Geometry shared by im2col / col2im. Patches are enumerated over the
/// output grid; the column matrix is (out_h*out_w) x (in_c*k*k),
/// column-major, with patch columns ordered channel-major then ky, kx.
struct ConvGeom {
  int in_c, in_h, in_w;
  int out_h, out_w;
  int k, stride, pad;
  int patches() const { return out_h * out_w; }
  int cols() const { return in_c * k * k; }
};

void im2col(const float* src, const ConvGeom& g, float* col);
/// Scatter-adds the column matrix back onto the (in_c, in_h, in_w) plane.
void col2im(const float* col, const ConvGeom& g, float* dst);

class Conv2d : public Layer {
 public:
  Conv2d(int in_c, int out_c, int k, int stride, int pad, bool bias,
         bool spectral_norm, Rng& init);
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  Tensor penalty_forward(const Tensor& v) override;
  void collect_params(std::vector<Param*>& out) override;
  std::string describe() const override;

  /// Appends `extra` input channels with freshly initialized weights.
  /// Existing weights, gradients and optimizer moments keep their values.
  void grow_input_channels(int extra, Rng& init);

  int in_channels() const { return in_c_; }
  bool has_spectral_norm() const { return spectral_; }

 private:
  ConvGeom geom_for(int h, int w) const;
  const Eigen::MatrixXf& effective_weight(Mode mode);

  int in_c_, out_c_, k_, stride_, pad_;
  bool bias_, spectral_;
  Param w_;  // (in_c*k*k) x out_c
  Param b_;  // out_c x 1
  PowerIterState sn_state_;
  Eigen::MatrixXf w_bar_;
  float sigma_ = 1.0f;
  Tensor x_saved_;
  Tensor delta_saved_;
  ConvGeom last_geom_{};

 public:
  PowerIterState& sn_state() { return sn_state_; }
};

class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(int in_c, int out_c, int k, int stride, int pad, bool bias,
                  Rng& init);
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  void collect_params(std::vector<Param*>& out) override;
  std::string describe() const override;

 private:
  /// Geometry of the mirror convolution (out plane -> in plane).
  ConvGeom geom_for(int in_h, int in_w) const;

  int in_c_, out_c_, k_, stride_, pad_;
  bool bias_;
  Param w_;  // (out_c*k*k) x in_c
  Param b_;  // out_c x 1
  Tensor x_saved_;
};

class BatchNorm2d : public Layer {
 public:
  explicit BatchNorm2d(int channels, Rng& init, float momentum = 0.1f,
                       float eps = 1e-5f);
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  void collect_params(std::vector<Param*>& out) override;
  std::string describe() const override;

  Eigen::VectorXf& running_mean() { return running_mean_; }
  Eigen::VectorXf& running_var() { return running_var_; }

 private:
  int channels_;
  float momentum_, eps_;
  Param gamma_, beta_;
  Eigen::VectorXf running_mean_, running_var_;
  Tensor x_hat_saved_;
  Eigen::VectorXf batch_mean_, batch_inv_std_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(float slope) : slope_(slope) {}
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  Tensor penalty_forward(const Tensor& v) override;
  std::string describe() const override;

 private:
  float slope_;
  std::vector<float> mask_;
};

class ReLU : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  Tensor penalty_forward(const Tensor& v) override;
  std::string describe() const override { return "relu"; }

 private:
  std::vector<float> mask_;
};

class Tanh : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  std::string describe() const override { return "tanh"; }

 private:
  Tensor y_saved_;
};

/// Inverted dropout: scaling happens at train time, eval is identity.
class Dropout : public Layer {
 public:
  explicit Dropout(float p) : p_(p) {}
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  Tensor penalty_forward(const Tensor& v) override;
  std::string describe() const override;

 private:
  float p_;
  bool identity_ = true;
  std::vector<float> mask_;
};

class Linear : public Layer {
 public:
  Linear(int in_dim, int out_dim, bool bias, Rng& init);
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  Tensor penalty_forward(const Tensor& v) override;
  void collect_params(std::vector<Param*>& out) override;
  std::string describe() const override;

  Param& weight() { return w_; }
  Param& bias_param() { return b_; }

 private:
  int in_dim_, out_dim_;
  bool bias_;
  Param w_;  // out_dim x in_dim
  Param b_;  // out_dim x 1
  Tensor x_saved_;
  Tensor delta_saved_;
};

/// (N, C, H, W) -> (N, C*H*W). Pure reshape; buffers are already
/// sample-major.
class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  Tensor penalty_forward(const Tensor& v) override;
  std::string describe() const override { return "flatten"; }

 private:
  std::vector<int> in_shape_;
};

/// (N, C, H, W) -> (N, C) channel means.
class GlobalAvgPool : public Layer {
 public:
  Tensor forward(const Tensor& x, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& dy, bool accumulate_params) override;
  Tensor penalty_forward(const Tensor& v) override;
  std::string describe() const override { return "gap"; }

 private:
  std::vector<int> in_shape_;
};

/// Lookup table used for conditional label inputs. Not part of the
/// sequential stack; the model wrappers drive it directly.
class Embedding {
 public:
  Embedding(int num, int dim, std::string name, Rng& init);
  /// Returns an (n, dim) tensor of the selected rows.
  Tensor forward(const std::vector<int>& ids) const;
  void backward(const std::vector<int>& ids, const Tensor& d_out);
  Param& table() { return table_; }
  int dim() const { return dim_; }
  int num() const { return num_; }

 private:
  int num_, dim_;
  Param table_;  // dim x num, one column per id
};

/// Draws from N(0, 0.02); the usual DCGAN weight initialization.
void dcgan_init(Eigen::MatrixXf& m, Rng& rng);

}  // namespace affgan::nn
