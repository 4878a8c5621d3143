#include "affgan/nn/layers.hpp"

#include <cmath>

#include "affgan/core/error.hpp"

namespace affgan::nn {

Tensor Layer::penalty_forward(const Tensor&) {
  throw ValidationError(msg("layer '", describe(),
                            "' does not support the gradient-penalty pass"));
}

void im2col(const float* src, const ConvGeom& g, float* col) {
  const int p_total = g.patches();
  int j = 0;
  for (int c = 0; c < g.in_c; ++c) {
    const float* plane = src + int64_t(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx, ++j) {
        float* out = col + int64_t(j) * p_total;
        int p = 0;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) {
            for (int ox = 0; ox < g.out_w; ++ox, ++p) out[p] = 0.0f;
            continue;
          }
          const float* row = plane + int64_t(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox, ++p) {
            const int ix = ox * g.stride - g.pad + kx;
            out[p] = (ix < 0 || ix >= g.in_w) ? 0.0f : row[ix];
          }
        }
      }
    }
  }
}

void col2im(const float* col, const ConvGeom& g, float* dst) {
  const int p_total = g.patches();
  int j = 0;
  for (int c = 0; c < g.in_c; ++c) {
    float* plane = dst + int64_t(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx, ++j) {
        const float* in = col + int64_t(j) * p_total;
        int p = 0;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) {
            p += g.out_w;
            continue;
          }
          float* row = plane + int64_t(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox, ++p) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) row[ix] += in[p];
          }
        }
      }
    }
  }
}

void dcgan_init(Eigen::MatrixXf& m, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.normalf(0.0f, 0.02f);
  }
}

namespace {

int conv_out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

void check_4d(const Tensor& x, int channels, const char* who) {
  if (x.ndim() != 4 || x.dim(1) != channels) {
    throw ValidationError(msg(who, ": expected (N, ", channels,
                              ", H, W) input, got rank ", x.ndim(), " tensor"));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_c, int out_c, int k, int stride, int pad, bool bias,
               bool spectral_norm, Rng& init)
    : in_c_(in_c),
      out_c_(out_c),
      k_(k),
      stride_(stride),
      pad_(pad),
      bias_(bias),
      spectral_(spectral_norm) {
  w_.name = "w";
  w_.value.resize(in_c * k * k, out_c);
  dcgan_init(w_.value, init);
  w_.init_grad();
  if (bias_) {
    b_.name = "b";
    b_.value = Eigen::MatrixXf::Zero(out_c, 1);
    b_.init_grad();
  }
}

ConvGeom Conv2d::geom_for(int h, int w) const {
  ConvGeom g;
  g.in_c = in_c_;
  g.in_h = h;
  g.in_w = w;
  g.out_h = conv_out_extent(h, k_, stride_, pad_);
  g.out_w = conv_out_extent(w, k_, stride_, pad_);
  g.k = k_;
  g.stride = stride_;
  g.pad = pad_;
  return g;
}

const Eigen::MatrixXf& Conv2d::effective_weight(Mode mode) {
  if (!spectral_) return w_.value;
  sigma_ = spectral_sigma(w_.value, mode == Mode::Train ? 1 : 0, sn_state_);
  w_bar_ = w_.value / sigma_;
  return w_bar_;
}

Tensor Conv2d::forward(const Tensor& x, Mode mode, Rng*) {
  check_4d(x, in_c_, "Conv2d");
  const int n = x.dim(0);
  last_geom_ = geom_for(x.dim(2), x.dim(3));
  const ConvGeom& g = last_geom_;
  const int p = g.patches();
  if (g.out_h <= 0 || g.out_w <= 0) {
    throw ValidationError(msg("Conv2d: input ", x.dim(2), "x", x.dim(3),
                              " too small for kernel ", k_));
  }
  x_saved_ = x;
  const Eigen::MatrixXf& w = effective_weight(mode);
  Tensor y({n, out_c_, g.out_h, g.out_w});
  Eigen::MatrixXf col(p, g.cols());
  const int64_t in_stride = int64_t(in_c_) * g.in_h * g.in_w;
  const int64_t out_stride = int64_t(out_c_) * p;
  for (int s = 0; s < n; ++s) {
    im2col(x.data() + s * in_stride, g, col.data());
    Eigen::Map<Eigen::MatrixXf> ys(y.data() + s * out_stride, p, out_c_);
    ys.noalias() = col * w;
    if (bias_) ys.rowwise() += b_.value.col(0).transpose();
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy, bool accumulate_params) {
  const ConvGeom& g = last_geom_;
  const int n = x_saved_.dim(0);
  const int p = g.patches();
  const Eigen::MatrixXf& w = spectral_ ? w_bar_ : w_.value;
  Tensor dx(x_saved_.shape());
  Eigen::MatrixXf col(p, g.cols());
  Eigen::MatrixXf dcol(p, g.cols());
  const int64_t in_stride = int64_t(in_c_) * g.in_h * g.in_w;
  const int64_t out_stride = int64_t(out_c_) * p;
  const float wscale = spectral_ ? 1.0f / sigma_ : 1.0f;
  for (int s = 0; s < n; ++s) {
    Eigen::Map<const Eigen::MatrixXf> dys(dy.data() + s * out_stride, p, out_c_);
    if (accumulate_params) {
      im2col(x_saved_.data() + s * in_stride, g, col.data());
      w_.grad.noalias() += wscale * (col.transpose() * dys);
      if (bias_) b_.grad.col(0) += dys.colwise().sum().transpose();
    }
    dcol.noalias() = dys * w.transpose();
    col2im(dcol.data(), g, dx.data() + s * in_stride);
  }
  if (penalty_ctx_) delta_saved_ = dy;
  return dx;
}

Tensor Conv2d::penalty_forward(const Tensor& v) {
  const ConvGeom& g = last_geom_;
  const int n = v.dim(0);
  const int p = g.patches();
  const Eigen::MatrixXf& w = spectral_ ? w_bar_ : w_.value;
  const float wscale = spectral_ ? 1.0f / sigma_ : 1.0f;
  Tensor out({n, out_c_, g.out_h, g.out_w});
  Eigen::MatrixXf col(p, g.cols());
  const int64_t in_stride = int64_t(in_c_) * g.in_h * g.in_w;
  const int64_t out_stride = int64_t(out_c_) * p;
  for (int s = 0; s < n; ++s) {
    im2col(v.data() + s * in_stride, g, col.data());
    Eigen::Map<const Eigen::MatrixXf> delta(delta_saved_.data() + s * out_stride,
                                            p, out_c_);
    w_.grad.noalias() += wscale * (col.transpose() * delta);
    Eigen::Map<Eigen::MatrixXf> os(out.data() + s * out_stride, p, out_c_);
    os.noalias() = col * w;
  }
  return out;
}

void Conv2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_);
  if (bias_) out.push_back(&b_);
}

std::string Conv2d::describe() const {
  return msg("conv ", in_c_, " ", out_c_, " ", k_, " ", stride_, " ", pad_, " ",
             bias_ ? 1 : 0, " ", spectral_ ? 1 : 0);
}

void Conv2d::grow_input_channels(int extra, Rng& init) {
  if (extra <= 0) return;
  const int old_rows = in_c_ * k_ * k_;
  const int new_rows = (in_c_ + extra) * k_ * k_;
  w_.value.conservativeResize(new_rows, out_c_);
  Eigen::MatrixXf fresh(new_rows - old_rows, out_c_);
  dcgan_init(fresh, init);
  w_.value.bottomRows(new_rows - old_rows) = fresh;
  w_.grad.conservativeResize(new_rows, out_c_);
  w_.grad.bottomRows(new_rows - old_rows).setZero();
  w_.adam_m.conservativeResize(new_rows, out_c_);
  w_.adam_m.bottomRows(new_rows - old_rows).setZero();
  w_.adam_v.conservativeResize(new_rows, out_c_);
  w_.adam_v.bottomRows(new_rows - old_rows).setZero();
  in_c_ += extra;
  sn_state_.u.resize(0);
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_c, int out_c, int k, int stride,
                                 int pad, bool bias, Rng& init)
    : in_c_(in_c),
      out_c_(out_c),
      k_(k),
      stride_(stride),
      pad_(pad),
      bias_(bias) {
  w_.name = "w";
  w_.value.resize(out_c * k * k, in_c);
  dcgan_init(w_.value, init);
  w_.init_grad();
  if (bias_) {
    b_.name = "b";
    b_.value = Eigen::MatrixXf::Zero(out_c, 1);
    b_.init_grad();
  }
}

ConvGeom ConvTranspose2d::geom_for(int in_h, int in_w) const {
  ConvGeom g;
  g.in_c = out_c_;
  g.in_h = (in_h - 1) * stride_ - 2 * pad_ + k_;
  g.in_w = (in_w - 1) * stride_ - 2 * pad_ + k_;
  g.out_h = in_h;
  g.out_w = in_w;
  g.k = k_;
  g.stride = stride_;
  g.pad = pad_;
  return g;
}

Tensor ConvTranspose2d::forward(const Tensor& x, Mode, Rng*) {
  check_4d(x, in_c_, "ConvTranspose2d");
  const int n = x.dim(0);
  const ConvGeom g = geom_for(x.dim(2), x.dim(3));
  if (g.in_h <= 0 || g.in_w <= 0) {
    throw ValidationError(msg("ConvTranspose2d: degenerate output extent ",
                              g.in_h, "x", g.in_w));
  }
  x_saved_ = x;
  const int p_in = x.dim(2) * x.dim(3);
  Tensor y({n, out_c_, g.in_h, g.in_w});
  Eigen::MatrixXf dcol(p_in, g.cols());
  const int64_t in_stride = int64_t(in_c_) * p_in;
  const int64_t out_plane = int64_t(g.in_h) * g.in_w;
  const int64_t out_stride = int64_t(out_c_) * out_plane;
  for (int s = 0; s < n; ++s) {
    Eigen::Map<const Eigen::MatrixXf> xs(x.data() + s * in_stride, p_in, in_c_);
    dcol.noalias() = xs * w_.value.transpose();
    float* dst = y.data() + s * out_stride;
    col2im(dcol.data(), g, dst);
    if (bias_) {
      for (int c = 0; c < out_c_; ++c) {
        Eigen::Map<Eigen::ArrayXf>(dst + c * out_plane, out_plane) +=
            b_.value(c, 0);
      }
    }
  }
  return y;
}

Tensor ConvTranspose2d::backward(const Tensor& dy, bool accumulate_params) {
  const int n = x_saved_.dim(0);
  const ConvGeom g = geom_for(x_saved_.dim(2), x_saved_.dim(3));
  const int p_in = x_saved_.dim(2) * x_saved_.dim(3);
  Tensor dx(x_saved_.shape());
  Eigen::MatrixXf col(p_in, g.cols());
  const int64_t in_stride = int64_t(in_c_) * p_in;
  const int64_t out_plane = int64_t(g.in_h) * g.in_w;
  const int64_t out_stride = int64_t(out_c_) * out_plane;
  for (int s = 0; s < n; ++s) {
    im2col(dy.data() + s * out_stride, g, col.data());
    Eigen::Map<Eigen::MatrixXf> dxs(dx.data() + s * in_stride, p_in, in_c_);
    dxs.noalias() = col * w_.value;
    if (accumulate_params) {
      Eigen::Map<const Eigen::MatrixXf> xs(x_saved_.data() + s * in_stride,
                                           p_in, in_c_);
      w_.grad.noalias() += col.transpose() * xs;
      if (bias_) {
        const float* src = dy.data() + s * out_stride;
        for (int c = 0; c < out_c_; ++c) {
          b_.grad(c, 0) +=
              Eigen::Map<const Eigen::ArrayXf>(src + c * out_plane, out_plane)
                  .sum();
        }
      }
    }
  }
  return dx;
}

void ConvTranspose2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_);
  if (bias_) out.push_back(&b_);
}

std::string ConvTranspose2d::describe() const {
  return msg("convt ", in_c_, " ", out_c_, " ", k_, " ", stride_, " ", pad_,
             " ", bias_ ? 1 : 0);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, Rng& init, float momentum, float eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_.name = "gamma";
  gamma_.value.resize(channels, 1);
  for (int c = 0; c < channels; ++c) gamma_.value(c, 0) = init.normalf(1.0f, 0.02f);
  gamma_.init_grad();
  beta_.name = "beta";
  beta_.value = Eigen::MatrixXf::Zero(channels, 1);
  beta_.init_grad();
  running_mean_ = Eigen::VectorXf::Zero(channels);
  running_var_ = Eigen::VectorXf::Ones(channels);
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode, Rng*) {
  check_4d(x, channels_, "BatchNorm2d");
  const int n = x.dim(0);
  const int64_t plane = int64_t(x.dim(2)) * x.dim(3);
  const int64_t m = int64_t(n) * plane;
  Tensor y(x.shape());
  if (mode == Mode::Eval) {
    for (int s = 0; s < n; ++s) {
      for (int c = 0; c < channels_; ++c) {
        const int64_t off = (int64_t(s) * channels_ + c) * plane;
        const float inv = 1.0f / std::sqrt(running_var_[c] + eps_);
        Eigen::Map<Eigen::ArrayXf>(y.data() + off, plane) =
            (Eigen::Map<const Eigen::ArrayXf>(x.data() + off, plane) -
             running_mean_[c]) *
                inv * gamma_.value(c, 0) +
            beta_.value(c, 0);
      }
    }
    return y;
  }
  batch_mean_.resize(channels_);
  batch_inv_std_.resize(channels_);
  x_hat_saved_ = Tensor(x.shape());
  for (int c = 0; c < channels_; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < n; ++s) {
      const int64_t off = (int64_t(s) * channels_ + c) * plane;
      Eigen::Map<const Eigen::ArrayXf> xa(x.data() + off, plane);
      sum += xa.cast<double>().sum();
      sq += xa.cast<double>().square().sum();
    }
    const double mean = sum / double(m);
    const double var = sq / double(m) - mean * mean;
    batch_mean_[c] = float(mean);
    batch_inv_std_[c] = float(1.0 / std::sqrt(var + eps_));
    const double unbiased = m > 1 ? var * double(m) / double(m - 1) : var;
    running_mean_[c] =
        (1.0f - momentum_) * running_mean_[c] + momentum_ * float(mean);
    running_var_[c] =
        (1.0f - momentum_) * running_var_[c] + momentum_ * float(unbiased);
    for (int s = 0; s < n; ++s) {
      const int64_t off = (int64_t(s) * channels_ + c) * plane;
      Eigen::Map<const Eigen::ArrayXf> xa(x.data() + off, plane);
      Eigen::Map<Eigen::ArrayXf> xh(x_hat_saved_.data() + off, plane);
      xh = (xa - batch_mean_[c]) * batch_inv_std_[c];
      Eigen::Map<Eigen::ArrayXf>(y.data() + off, plane) =
          xh * gamma_.value(c, 0) + beta_.value(c, 0);
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy, bool accumulate_params) {
  const int n = dy.dim(0);
  const int64_t plane = int64_t(dy.dim(2)) * dy.dim(3);
  const int64_t m = int64_t(n) * plane;
  Tensor dx(dy.shape());
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int s = 0; s < n; ++s) {
      const int64_t off = (int64_t(s) * channels_ + c) * plane;
      Eigen::Map<const Eigen::ArrayXf> d(dy.data() + off, plane);
      Eigen::Map<const Eigen::ArrayXf> xh(x_hat_saved_.data() + off, plane);
      sum_dy += d.cast<double>().sum();
      sum_dy_xh += (d * xh).cast<double>().sum();
    }
    if (accumulate_params) {
      gamma_.grad(c, 0) += float(sum_dy_xh);
      beta_.grad(c, 0) += float(sum_dy);
    }
    const float scale = gamma_.value(c, 0) * batch_inv_std_[c] / float(m);
    const float mean_dy = float(sum_dy / double(m));
    const float mean_dy_xh = float(sum_dy_xh / double(m));
    for (int s = 0; s < n; ++s) {
      const int64_t off = (int64_t(s) * channels_ + c) * plane;
      Eigen::Map<const Eigen::ArrayXf> d(dy.data() + off, plane);
      Eigen::Map<const Eigen::ArrayXf> xh(x_hat_saved_.data() + off, plane);
      Eigen::Map<Eigen::ArrayXf>(dx.data() + off, plane) =
          scale * float(m) * (d - mean_dy - xh * mean_dy_xh);
    }
  }
  return dx;
}

void BatchNorm2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

std::string BatchNorm2d::describe() const { return msg("bn ", channels_); }

// ---------------------------------------------------------------------------
// Activations

Tensor LeakyReLU::forward(const Tensor& x, Mode, Rng*) {
  mask_.resize(size_t(x.numel()));
  Tensor y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const float f = x[i] > 0.0f ? 1.0f : slope_;
    mask_[size_t(i)] = f;
    y[i] = x[i] * f;
  }
  return y;
}

Tensor LeakyReLU::backward(const Tensor& dy, bool) {
  Tensor dx(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * mask_[size_t(i)];
  return dx;
}

Tensor LeakyReLU::penalty_forward(const Tensor& v) {
  Tensor out(v.shape());
  for (int64_t i = 0; i < v.numel(); ++i) out[i] = v[i] * mask_[size_t(i)];
  return out;
}

std::string LeakyReLU::describe() const { return msg("lrelu ", slope_); }

Tensor ReLU::forward(const Tensor& x, Mode, Rng*) {
  mask_.resize(size_t(x.numel()));
  Tensor y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const float f = x[i] > 0.0f ? 1.0f : 0.0f;
    mask_[size_t(i)] = f;
    y[i] = x[i] * f;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy, bool) {
  Tensor dx(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * mask_[size_t(i)];
  return dx;
}

Tensor ReLU::penalty_forward(const Tensor& v) {
  Tensor out(v.shape());
  for (int64_t i = 0; i < v.numel(); ++i) out[i] = v[i] * mask_[size_t(i)];
  return out;
}

Tensor Tanh::forward(const Tensor& x, Mode, Rng*) {
  Tensor y(x.shape());
  y.array() = x.array().tanh();
  y_saved_ = y;
  return y;
}

Tensor Tanh::backward(const Tensor& dy, bool) {
  Tensor dx(dy.shape());
  dx.array() = dy.array() * (1.0f - y_saved_.array().square());
  return dx;
}

// ---------------------------------------------------------------------------
// Dropout

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng* rng) {
  if (mode == Mode::Eval || p_ <= 0.0f) {
    identity_ = true;
    return x;
  }
  if (rng == nullptr) {
    throw ValidationError("Dropout: training forward needs an RNG");
  }
  identity_ = false;
  mask_.resize(size_t(x.numel()));
  const float keep_scale = 1.0f / (1.0f - p_);
  Tensor y(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const float f = rng->uniform() < double(p_) ? 0.0f : keep_scale;
    mask_[size_t(i)] = f;
    y[i] = x[i] * f;
  }
  return y;
}

Tensor Dropout::backward(const Tensor& dy, bool) {
  if (identity_) return dy;
  Tensor dx(dy.shape());
  for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * mask_[size_t(i)];
  return dx;
}

Tensor Dropout::penalty_forward(const Tensor& v) {
  if (identity_) return v;
  Tensor out(v.shape());
  for (int64_t i = 0; i < v.numel(); ++i) out[i] = v[i] * mask_[size_t(i)];
  return out;
}

std::string Dropout::describe() const { return msg("dropout ", p_); }

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_dim, int out_dim, bool bias, Rng& init)
    : in_dim_(in_dim), out_dim_(out_dim), bias_(bias) {
  w_.name = "w";
  w_.value.resize(out_dim, in_dim);
  dcgan_init(w_.value, init);
  w_.init_grad();
  if (bias_) {
    b_.name = "b";
    b_.value = Eigen::MatrixXf::Zero(out_dim, 1);
    b_.init_grad();
  }
}

Tensor Linear::forward(const Tensor& x, Mode, Rng*) {
  if (x.ndim() != 2 || x.dim(1) != in_dim_) {
    throw ValidationError(msg("Linear: expected (N, ", in_dim_, ") input"));
  }
  const int n = x.dim(0);
  x_saved_ = x;
  Tensor y({n, out_dim_});
  auto ym = y.mat(out_dim_, n);
  ym.noalias() = w_.value * x.mat(in_dim_, n);
  if (bias_) ym.colwise() += b_.value.col(0);
  return y;
}

Tensor Linear::backward(const Tensor& dy, bool accumulate_params) {
  const int n = dy.dim(0);
  auto dym = dy.mat(out_dim_, n);
  if (accumulate_params) {
    w_.grad.noalias() += dym * x_saved_.mat(in_dim_, n).transpose();
    if (bias_) b_.grad.col(0) += dym.rowwise().sum();
  }
  Tensor dx({n, in_dim_});
  dx.mat(in_dim_, n).noalias() = w_.value.transpose() * dym;
  if (penalty_ctx_) delta_saved_ = dy;
  return dx;
}

Tensor Linear::penalty_forward(const Tensor& v) {
  const int n = v.dim(0);
  auto deltam = delta_saved_.mat(out_dim_, n);
  w_.grad.noalias() += deltam * v.mat(in_dim_, n).transpose();
  Tensor out({n, out_dim_});
  out.mat(out_dim_, n).noalias() = w_.value * v.mat(in_dim_, n);
  return out;
}

void Linear::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_);
  if (bias_) out.push_back(&b_);
}

std::string Linear::describe() const {
  return msg("linear ", in_dim_, " ", out_dim_, " ", bias_ ? 1 : 0);
}

// ---------------------------------------------------------------------------
// Shape ops

Tensor Flatten::forward(const Tensor& x, Mode, Rng*) {
  in_shape_ = x.shape();
  int64_t d = 1;
  for (int i = 1; i < x.ndim(); ++i) d *= x.dim(i);
  return x.reshaped({x.dim(0), int(d)});
}

Tensor Flatten::backward(const Tensor& dy, bool) { return dy.reshaped(in_shape_); }

Tensor Flatten::penalty_forward(const Tensor& v) {
  return v.reshaped({v.dim(0), int(v.numel() / v.dim(0))});
}

Tensor GlobalAvgPool::forward(const Tensor& x, Mode, Rng*) {
  in_shape_ = x.shape();
  const int n = x.dim(0), c = x.dim(1);
  const int64_t plane = int64_t(x.dim(2)) * x.dim(3);
  Tensor y({n, c});
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      y[int64_t(s) * c + ch] =
          Eigen::Map<const Eigen::ArrayXf>(
              x.data() + (int64_t(s) * c + ch) * plane, plane)
              .mean();
    }
  }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy, bool) {
  const int n = in_shape_[0], c = in_shape_[1];
  const int64_t plane = int64_t(in_shape_[2]) * in_shape_[3];
  Tensor dx(in_shape_);
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      Eigen::Map<Eigen::ArrayXf>(dx.data() + (int64_t(s) * c + ch) * plane,
                                 plane)
          .setConstant(dy[int64_t(s) * c + ch] / float(plane));
    }
  }
  return dx;
}

Tensor GlobalAvgPool::penalty_forward(const Tensor& v) {
  return forward(v, Mode::Eval, nullptr);
}

// ---------------------------------------------------------------------------
// Embedding

Embedding::Embedding(int num, int dim, std::string name, Rng& init)
    : num_(num), dim_(dim) {
  table_.name = std::move(name);
  table_.value.resize(dim, num);
  dcgan_init(table_.value, init);
  table_.init_grad();
}

Tensor Embedding::forward(const std::vector<int>& ids) const {
  Tensor out({int(ids.size()), dim_});
  auto om = out.mat(dim_, int(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= num_) {
      throw ValidationError(msg("Embedding: id ", ids[i], " out of range [0, ",
                                num_, ")"));
    }
    om.col(Eigen::Index(i)) = table_.value.col(ids[i]);
  }
  return out;
}

void Embedding::backward(const std::vector<int>& ids, const Tensor& d_out) {
  auto dm = d_out.mat(dim_, int(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    table_.grad.col(ids[i]) += dm.col(Eigen::Index(i));
  }
}

}  // namespace affgan::nn
