#include "affgan/train/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "affgan/core/csv.hpp"
#include "affgan/core/error.hpp"
#include "affgan/core/image.hpp"
#include "affgan/nn/bundle.hpp"

namespace fs = std::filesystem;

namespace affgan::train {

using gan::DiscOutput;
using gan::Family;
using gan::ModelSpec;
using nn::Mode;
using nn::Tensor;

void TrainConfig::validate() const {
  if (epochs <= 0) throw ValidationError("epochs must be positive");
  if (batch_size <= 0) throw ValidationError("batch_size must be positive");
  if (lr_g <= 0.0f || lr_d <= 0.0f) {
    throw ValidationError("learning rates must be positive");
  }
  if (!(real_label > 0.5f && real_label <= 1.0f)) {
    throw ValidationError(msg("real_label must lie in (0.5, 1], got ",
                              real_label));
  }
  if (gp_lambda < 0.0f) throw ValidationError("gp_lambda must be >= 0");
  if (critic_steps < 1) throw ValidationError("critic_steps must be >= 1");
  if (eval_every_epochs < 1) {
    throw ValidationError("eval_every_epochs must be >= 1");
  }
  if (metric_batch < 2) throw ValidationError("metric_batch must be >= 2");
  if (pagan_stall_window < 1) {
    throw ValidationError("pagan_stall_window must be >= 1");
  }
  if (pagan_stall_epsilon < 0.0) {
    throw ValidationError("pagan_stall_epsilon must be >= 0");
  }
}

float effective_real_label(const ModelSpec& spec, const TrainConfig& cfg) {
  return spec.family == Family::PAGAN ? 1.0f : cfg.real_label;
}

namespace {

const std::vector<int> kNoLabels;

double softplus(double x) {
  return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor sample_z(int n, int dim, Rng& rng) {
  Tensor z({n, dim});
  for (int64_t i = 0; i < z.numel(); ++i) z[i] = rng.normalf(0.0f, 1.0f);
  return z;
}

std::vector<int> sample_labels(int n, int num_classes, Rng& rng) {
  std::vector<int> out(static_cast<size_t>(n));
  for (int& l : out) l = int(rng.below(uint64_t(num_classes)));
  return out;
}

std::string pad4(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double bce_with_logits(const Tensor& logits, float target) {
  double sum = 0.0;
  for (int64_t i = 0; i < logits.numel(); ++i) {
    const double l = double(logits[i]);
    sum += (1.0 - double(target)) * l + softplus(-l);
  }
  return sum / double(logits.numel());
}

double softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int>& labels,
                             Tensor* d_logits) {
  const int n = logits.dim(0), k = logits.dim(1);
  if (int(labels.size()) != n) {
    throw ValidationError(msg("got ", labels.size(), " labels for ", n,
                              " logit rows"));
  }
  if (d_logits != nullptr) *d_logits = Tensor({n, k});
  double loss = 0.0;
  std::vector<double> p(static_cast<size_t>(k));
  for (int i = 0; i < n; ++i) {
    if (labels[size_t(i)] < 0 || labels[size_t(i)] >= k) {
      throw ValidationError(msg("label ", labels[size_t(i)],
                                " out of range [0, ", k, ")"));
    }
    const float* row = logits.data() + int64_t(i) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, double(row[j]));
    double denom = 0.0;
    for (int j = 0; j < k; ++j) {
      p[size_t(j)] = std::exp(double(row[j]) - mx);
      denom += p[size_t(j)];
    }
    loss += std::log(denom) + mx - double(row[labels[size_t(i)]]);
    if (d_logits != nullptr) {
      for (int j = 0; j < k; ++j) {
        double g = p[size_t(j)] / denom;
        if (j == labels[size_t(i)]) g -= 1.0;
        (*d_logits)[int64_t(i) * k + j] = float(g / double(n));
      }
    }
  }
  return loss / double(n);
}

GanModel::GanModel(const ModelSpec& s, const TrainConfig& cfg, uint64_t seed,
                   int pagan_level)
    : spec(s) {
  g = std::make_unique<gan::GeneratorNet>(spec, seed);
  d = std::make_unique<gan::DiscriminatorNet>(spec, pagan_level, seed);
  opt_g = std::make_unique<nn::Adam>(cfg.lr_g, cfg.beta1, cfg.beta2);
  opt_d = std::make_unique<nn::Adam>(cfg.lr_d, cfg.beta1, cfg.beta2);
}

StepResult gan_step(GanModel& m, const Tensor& real,
                    const std::vector<int>& labels, const TrainConfig& cfg,
                    Rng& rng, uint64_t pagan_noise_seed) {
  const ModelSpec& spec = m.spec;
  if (spec.family == Family::WGAN_GP) {
    throw ValidationError("use wgan_gp_step for the WGAN_GP family");
  }
  const int n = real.dim(0);
  const bool cgan = spec.family == Family::CGAN;
  const bool acgan = spec.family == Family::ACGAN;
  const bool pagan = spec.family == Family::PAGAN;
  const int level = m.d->pagan_level();
  if (spec.conditional() && int(labels.size()) != n) {
    throw ValidationError("conditional training needs one label per image");
  }
  const float real_t = effective_real_label(spec, cfg);

  Tensor z = sample_z(n, spec.latent_dim, rng);
  std::vector<int> fake_labels;
  if (spec.conditional()) fake_labels = sample_labels(n, spec.num_classes, rng);
  Tensor fake = m.g->forward(z, fake_labels, Mode::Train, &rng);

  StepResult res;
  m.d->zero_grad();
  {
    Tensor x = pagan ? gan::pagan_augment_input(real, level, pagan_noise_seed)
                     : real;
    DiscOutput out = m.d->forward(x, cgan ? labels : kNoLabels, Mode::Train, &rng);
    res.loss_d += bce_with_logits(out.logits, real_t);
    Tensor dlog({n, 1});
    for (int i = 0; i < n; ++i) {
      dlog[i] = float((sigmoid(out.logits[i]) - real_t) / n);
    }
    Tensor dcls;
    if (acgan) {
      res.loss_d += softmax_cross_entropy(out.class_logits, labels, &dcls);
    }
    m.d->backward(dlog, dcls, true);
  }
  {
    Tensor x = pagan
                   ? gan::pagan_augment_input(fake, level, pagan_noise_seed + 1)
                   : fake;
    DiscOutput out =
        m.d->forward(x, cgan ? fake_labels : kNoLabels, Mode::Train, &rng);
    res.loss_d += bce_with_logits(out.logits, 0.0f);
    Tensor dlog({n, 1});
    for (int i = 0; i < n; ++i) dlog[i] = float(sigmoid(out.logits[i]) / n);
    Tensor dcls;
    if (acgan) {
      res.loss_d += softmax_cross_entropy(out.class_logits, fake_labels, &dcls);
    }
    m.d->backward(dlog, dcls, true);
  }
  m.opt_d->step(m.d->params());

  // Non-saturating generator update against the refreshed discriminator.
  m.g->zero_grad();
  Tensor x = pagan ? gan::pagan_augment_input(fake, level, pagan_noise_seed + 2)
                   : fake;
  DiscOutput out =
      m.d->forward(x, cgan ? fake_labels : kNoLabels, Mode::Train, &rng);
  res.loss_g = bce_with_logits(out.logits, 1.0f);
  Tensor dlog({n, 1});
  for (int i = 0; i < n; ++i) {
    dlog[i] = float((sigmoid(out.logits[i]) - 1.0) / n);
  }
  Tensor dcls;
  if (acgan) {
    res.loss_g += softmax_cross_entropy(out.class_logits, fake_labels, &dcls);
  }
  Tensor dx = m.d->backward(dlog, dcls, false);
  Tensor dfake = pagan ? gan::slice_channels(dx, spec.channels) : dx;
  m.g->backward(dfake);
  m.opt_g->step(m.g->params());
  return res;
}

StepResult wgan_gp_step(GanModel& m, const Tensor& real, const TrainConfig& cfg,
                        Rng& rng) {
  const ModelSpec& spec = m.spec;
  if (spec.family != Family::WGAN_GP) {
    throw ValidationError("wgan_gp_step only trains the WGAN_GP family");
  }
  const int n = real.dim(0);
  const int64_t block = real.numel() / n;
  StepResult res;
  for (int t = 0; t < cfg.critic_steps; ++t) {
    Tensor z = sample_z(n, spec.latent_dim, rng);
    Tensor fake = m.g->forward(z, kNoLabels, Mode::Train, &rng);
    m.d->zero_grad();

    DiscOutput out_r = m.d->forward(real, kNoLabels, Mode::Train, &rng);
    double mean_r = 0.0;
    for (int i = 0; i < n; ++i) mean_r += out_r.logits[i];
    mean_r /= n;
    Tensor seed_r({n, 1});
    seed_r.array() = -1.0f / float(n);
    m.d->backward(seed_r, Tensor(), true);

    DiscOutput out_f = m.d->forward(fake, kNoLabels, Mode::Train, &rng);
    double mean_f = 0.0;
    for (int i = 0; i < n; ++i) mean_f += out_f.logits[i];
    mean_f /= n;
    Tensor seed_f({n, 1});
    seed_f.array() = 1.0f / float(n);
    m.d->backward(seed_f, Tensor(), true);

    Tensor xhat(real.shape());
    for (int i = 0; i < n; ++i) {
      const float eps = float(rng.uniform());
      Eigen::Map<Eigen::ArrayXf> h(xhat.data() + i * block, block);
      Eigen::Map<const Eigen::ArrayXf> r(real.data() + i * block, block);
      Eigen::Map<const Eigen::ArrayXf> f(fake.data() + i * block, block);
      h = eps * r + (1.0f - eps) * f;
    }
    m.d->set_penalty_ctx(true);
    m.d->forward(xhat, kNoLabels, Mode::Train, &rng);
    Tensor ones({n, 1});
    ones.array() = 1.0f;
    Tensor gx = m.d->backward(ones, Tensor(), false);
    double gp = 0.0;
    Tensor u(gx.shape());
    for (int i = 0; i < n; ++i) {
      Eigen::Map<const Eigen::ArrayXf> gi(gx.data() + i * block, block);
      const double norm = std::sqrt(gi.cast<double>().square().sum());
      gp += (norm - 1.0) * (norm - 1.0);
      const double coef = 2.0 * double(cfg.gp_lambda) / double(n) *
                          (norm - 1.0) / std::max(norm, 1e-12);
      Eigen::Map<Eigen::ArrayXf>(u.data() + i * block, block) =
          float(coef) * gi;
    }
    gp /= double(n);
    m.d->penalty_forward(u);
    m.d->set_penalty_ctx(false);
    m.opt_d->step(m.d->params());
    res.loss_d = mean_f - mean_r + double(cfg.gp_lambda) * gp;
    res.gp = gp;
  }

  Tensor z = sample_z(n, spec.latent_dim, rng);
  Tensor fake = m.g->forward(z, kNoLabels, Mode::Train, &rng);
  DiscOutput out = m.d->forward(fake, kNoLabels, Mode::Train, &rng);
  double mean_f = 0.0;
  for (int i = 0; i < n; ++i) mean_f += out.logits[i];
  res.loss_g = -mean_f / n;
  Tensor seed_g({n, 1});
  seed_g.array() = -1.0f / float(n);
  Tensor dx = m.d->backward(seed_g, Tensor(), false);
  m.g->zero_grad();
  m.g->backward(dx);
  m.opt_g->step(m.g->params());
  return res;
}

int PaganScheduler::observe(double kid_value) {
  history_.push_back(kid_value);
  ++since_change_;
  const size_t w = size_t(window_);
  if (level_ < max_level_ && since_change_ >= window_ &&
      history_.size() >= 2 * w) {
    const size_t end = history_.size();
    double prev_best = history_[end - 2 * w];
    for (size_t i = end - 2 * w; i < end - w; ++i) {
      prev_best = std::min(prev_best, history_[i]);
    }
    double recent_best = history_[end - w];
    for (size_t i = end - w; i < end; ++i) {
      recent_best = std::min(recent_best, history_[i]);
    }
    const double improvement =
        (prev_best - recent_best) / std::max(std::abs(prev_best), 1e-12);
    if (improvement <= eps_) {
      ++level_;
      since_change_ = 0;
    }
  }
  return level_;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void spec_to_meta(nn::Bundle& b, const ModelSpec& spec) {
  b.set_meta("family", gan::to_string(spec.family));
  b.set_meta("disc_variant", gan::to_string(spec.disc_variant));
  b.set_meta("latent_dim", std::to_string(spec.latent_dim));
  b.set_meta("image_size", std::to_string(spec.image_size));
  b.set_meta("channels", std::to_string(spec.channels));
  b.set_meta("num_classes", std::to_string(spec.num_classes));
  b.set_meta("pagan_max_level", std::to_string(spec.pagan_max_level));
  b.set_meta("base_width", std::to_string(spec.base_width));
}

ModelSpec spec_from_meta(const nn::Bundle& b) {
  ModelSpec spec;
  spec.family = gan::family_from_string(b.require_meta("family"));
  spec.disc_variant = gan::variant_from_string(b.require_meta("disc_variant"));
  spec.latent_dim = std::stoi(b.require_meta("latent_dim"));
  spec.image_size = std::stoi(b.require_meta("image_size"));
  spec.channels = std::stoi(b.require_meta("channels"));
  spec.num_classes = std::stoi(b.require_meta("num_classes"));
  spec.pagan_max_level = std::stoi(b.require_meta("pagan_max_level"));
  spec.base_width = std::stoi(b.require_meta("base_width"));
  return spec;
}

void check_spec_match(const ModelSpec& stored, const ModelSpec& expected,
                      const std::string& path) {
  auto fail = [&](const char* field) {
    throw IntegrityError(msg("checkpoint ", path,
                             " was produced by a different model spec (",
                             field, " differs)"));
  };
  if (stored.family != expected.family) fail("family");
  if (stored.disc_variant != expected.disc_variant) fail("disc_variant");
  if (stored.latent_dim != expected.latent_dim) fail("latent_dim");
  if (stored.image_size != expected.image_size) fail("image_size");
  if (stored.channels != expected.channels) fail("channels");
  if (stored.num_classes != expected.num_classes) fail("num_classes");
  if (stored.pagan_max_level != expected.pagan_max_level) {
    fail("pagan_max_level");
  }
  if (stored.base_width != expected.base_width) fail("base_width");
}

void put_net_state(nn::Bundle& b, const std::string& prefix, nn::Net& net) {
  for (size_t i = 0; i < net.size(); ++i) {
    if (auto* bn = dynamic_cast<nn::BatchNorm2d*>(&net.layer(i))) {
      const std::string base = prefix + "l" + std::to_string(i);
      b.add_tensor(base + ".rmean", {int(bn->running_mean().size()), 1},
                   bn->running_mean().data(), bn->running_mean().size());
      b.add_tensor(base + ".rvar", {int(bn->running_var().size()), 1},
                   bn->running_var().data(), bn->running_var().size());
    } else if (auto* cv = dynamic_cast<nn::Conv2d*>(&net.layer(i))) {
      if (cv->has_spectral_norm()) {
        const Eigen::VectorXf& u = cv->sn_state().u;
        b.add_tensor(prefix + "l" + std::to_string(i) + ".sn_u",
                     {int(u.size()), 1}, u.data(), u.size());
      }
    }
  }
}

void get_net_state(const nn::Bundle& b, const std::string& prefix,
                   nn::Net& net) {
  for (size_t i = 0; i < net.size(); ++i) {
    if (auto* bn = dynamic_cast<nn::BatchNorm2d*>(&net.layer(i))) {
      const std::string base = prefix + "l" + std::to_string(i);
      for (const char* which : {".rmean", ".rvar"}) {
        const nn::BundleTensor* t = b.find_tensor(base + which);
        if (t == nullptr) {
          throw IntegrityError(msg("checkpoint lacks tensor '", base, which,
                                   "'"));
        }
        Eigen::VectorXf& dst = std::strcmp(which, ".rmean") == 0
                                   ? bn->running_mean()
                                   : bn->running_var();
        if (int64_t(t->data.size()) != dst.size()) {
          throw IntegrityError(msg("tensor '", base, which,
                                   "' has wrong extent"));
        }
        std::copy(t->data.begin(), t->data.end(), dst.data());
      }
    } else if (auto* cv = dynamic_cast<nn::Conv2d*>(&net.layer(i))) {
      if (cv->has_spectral_norm()) {
        const nn::BundleTensor* t =
            b.find_tensor(prefix + "l" + std::to_string(i) + ".sn_u");
        if (t != nullptr && !t->data.empty()) {
          cv->sn_state().u.resize(int64_t(t->data.size()));
          std::copy(t->data.begin(), t->data.end(), cv->sn_state().u.data());
        }
      }
    }
  }
}

std::string serialize_trajectory(const std::vector<EvalPoint>& traj) {
  std::string s;
  for (const EvalPoint& p : traj) {
    s += std::to_string(p.epoch) + ":" + fmt17(p.fid_value) + ":" +
         fmt17(p.kid_value) + ";";
  }
  return s;
}

std::vector<EvalPoint> parse_trajectory(const std::string& s) {
  std::vector<EvalPoint> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    EvalPoint p;
    if (std::sscanf(item.c_str(), "%d:%lf:%lf", &p.epoch, &p.fid_value,
                    &p.kid_value) != 3) {
      throw IntegrityError(msg("malformed trajectory entry '", item, "'"));
    }
    out.push_back(p);
  }
  return out;
}

std::string serialize_trace(const std::vector<std::pair<int, int>>& trace) {
  std::string s;
  for (const auto& [epoch, level] : trace) {
    s += std::to_string(epoch) + ":" + std::to_string(level) + ";";
  }
  return s;
}

std::vector<std::pair<int, int>> parse_trace(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    int epoch = 0, level = 0;
    if (std::sscanf(item.c_str(), "%d:%d", &epoch, &level) != 2) {
      throw IntegrityError(msg("malformed level-trace entry '", item, "'"));
    }
    out.emplace_back(epoch, level);
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, GanModel& m, int epoch,
                     const std::vector<EvalPoint>& trajectory,
                     const std::vector<std::pair<int, int>>& pagan_trace) {
  nn::Bundle b;
  b.set_meta("kind", "checkpoint");
  spec_to_meta(b, m.spec);
  b.set_meta("epoch", std::to_string(epoch));
  b.set_meta("pagan_level", std::to_string(m.d->pagan_level()));
  b.set_meta("opt_g_t", std::to_string(m.opt_g->t()));
  b.set_meta("opt_d_t", std::to_string(m.opt_d->t()));
  b.set_meta("trajectory", serialize_trajectory(trajectory));
  b.set_meta("pagan_trace", serialize_trace(pagan_trace));
  nn::bundle_put_params(b, "g.", m.g->params(), true);
  nn::bundle_put_params(b, "d.", m.d->params(), true);
  put_net_state(b, "g.", m.g->trunk());
  put_net_state(b, "d.", m.d->trunk());
  nn::write_bundle(path, b);
}

Checkpoint load_checkpoint(const std::string& path, const ModelSpec& expected,
                           const TrainConfig& cfg) {
  nn::Bundle b = nn::read_bundle(path);
  if (b.require_meta("kind") != "checkpoint") {
    throw IntegrityError(msg(path, " is not a training checkpoint"));
  }
  check_spec_match(spec_from_meta(b), expected, path);
  Checkpoint ck;
  ck.epoch = std::stoi(b.require_meta("epoch"));
  const int level = std::stoi(b.require_meta("pagan_level"));
  ck.model = std::make_unique<GanModel>(expected, cfg, 0, level);
  nn::bundle_get_params(b, "g.", ck.model->g->params(), true);
  nn::bundle_get_params(b, "d.", ck.model->d->params(), true);
  get_net_state(b, "g.", ck.model->g->trunk());
  get_net_state(b, "d.", ck.model->d->trunk());
  ck.model->opt_g->set_t(std::stoll(b.require_meta("opt_g_t")));
  ck.model->opt_d->set_t(std::stoll(b.require_meta("opt_d_t")));
  ck.trajectory = parse_trajectory(b.require_meta("trajectory"));
  ck.pagan_trace = parse_trace(b.require_meta("pagan_trace"));
  return ck;
}

// ---------------------------------------------------------------------------
// Full run

namespace {

Tensor generate_batch(GanModel& m, int count, int chunk, Rng& rng) {
  const ModelSpec& spec = m.spec;
  const int64_t block =
      int64_t(spec.channels) * spec.image_size * spec.image_size;
  Tensor out({count, spec.channels, spec.image_size, spec.image_size});
  for (int start = 0; start < count; start += chunk) {
    const int len = std::min(chunk, count - start);
    Tensor z = sample_z(len, spec.latent_dim, rng);
    std::vector<int> labels;
    if (spec.conditional()) labels = sample_labels(len, spec.num_classes, rng);
    Tensor f = m.g->forward(z, labels, Mode::Eval);
    std::copy(f.data(), f.data() + int64_t(len) * block,
              out.data() + int64_t(start) * block);
  }
  return out;
}

EvalPoint run_eval(GanModel& m, const data::ImageSet& dataset,
                   const TrainConfig& cfg,
                   const metrics::FeatureExtractor& extractor, int epoch) {
  const int mb = cfg.metric_batch;
  Rng zrng = Rng::stream(cfg.seed, "eval-z", uint64_t(epoch));
  Tensor fakes = generate_batch(m, mb, cfg.batch_size, zrng);

  Rng rrng = Rng::stream(cfg.seed, "eval-real", uint64_t(epoch));
  const int n = dataset.count();
  const int64_t block = dataset.images.numel() / n;
  Tensor reals({mb, dataset.images.dim(1), dataset.images.dim(2),
                dataset.images.dim(3)});
  for (int i = 0; i < mb; ++i) {
    const int64_t idx = int64_t(rrng.below(uint64_t(n)));
    std::copy(dataset.images.data() + idx * block,
              dataset.images.data() + (idx + 1) * block,
              reals.data() + int64_t(i) * block);
  }
  Eigen::MatrixXd fr = metrics::extract_features(reals, extractor);
  Eigen::MatrixXd ff = metrics::extract_features(fakes, extractor);
  EvalPoint p;
  p.epoch = epoch;
  p.fid_value = metrics::fid(metrics::fit_gaussian(fr), metrics::fit_gaussian(ff));
  p.kid_value = metrics::kid(fr, ff);
  return p;
}

std::string find_latest_checkpoint(const std::string& dir) {
  std::string best;
  int best_epoch = -1;
  if (!fs::is_directory(dir)) return best;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    int epoch = 0;
    if (std::sscanf(name.c_str(), "ckpt_epoch_%d.afnb", &epoch) == 1 &&
        epoch > best_epoch) {
      best_epoch = epoch;
      best = e.path().string();
    }
  }
  return best;
}

void write_losses(const std::string& path, const std::vector<csv::Row>& rows) {
  csv::Table t;
  t.header = {"epoch", "step", "loss_d", "loss_g", "gp", "pagan_level"};
  t.rows = rows;
  csv::write_file(path, t);
}

void write_trajectory(const std::string& path,
                      const std::vector<EvalPoint>& traj) {
  csv::Table t;
  t.header = {"epoch", "fid", "kid"};
  for (const EvalPoint& p : traj) {
    t.rows.push_back({std::to_string(p.epoch), fmt6(p.fid_value),
                      fmt6(p.kid_value)});
  }
  csv::write_file(path, t);
}

void write_run_manifest(const std::string& path, const ModelSpec& spec,
                        const data::ImageSet& dataset, const TrainConfig& cfg,
                        int resumed_from) {
  nlohmann::json j;
  j["model"] = spec.model_id();
  j["dataset"] = {{"id", dataset.id},
                  {"content_hash", dataset.content_hash},
                  {"count", dataset.count()}};
  j["spec"] = {{"family", gan::to_string(spec.family)},
               {"disc_variant", gan::to_string(spec.disc_variant)},
               {"latent_dim", spec.latent_dim},
               {"image_size", spec.image_size},
               {"channels", spec.channels},
               {"num_classes", spec.num_classes},
               {"pagan_max_level", spec.pagan_max_level},
               {"base_width", spec.base_width}};
  j["config"] = {{"epochs", cfg.epochs},
                 {"batch_size", cfg.batch_size},
                 {"lr_g", cfg.lr_g},
                 {"lr_d", cfg.lr_d},
                 {"beta1", cfg.beta1},
                 {"beta2", cfg.beta2},
                 {"real_label", cfg.real_label},
                 {"gp_lambda", cfg.gp_lambda},
                 {"critic_steps", cfg.critic_steps},
                 {"eval_every_epochs", cfg.eval_every_epochs},
                 {"metric_batch", cfg.metric_batch},
                 {"pagan_stall_window", cfg.pagan_stall_window},
                 {"pagan_stall_epsilon", cfg.pagan_stall_epsilon},
                 {"seed", cfg.seed}};
  j["resumed_from_epoch"] = resumed_from;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(msg("cannot write ", path));
  out << j.dump(2) << "\n";
}

}  // namespace

void save_sample_grid(const std::string& path, GanModel& m, uint64_t seed) {
  const ModelSpec& spec = m.spec;
  Rng zrng = Rng::stream(seed, "grid-z");
  const int count = 64, cols = 8;
  Tensor z = sample_z(count, spec.latent_dim, zrng);
  std::vector<int> labels;
  if (spec.conditional()) {
    labels.resize(count);
    for (int i = 0; i < count; ++i) labels[size_t(i)] = i % spec.num_classes;
  }
  Tensor imgs({count, spec.channels, spec.image_size, spec.image_size});
  const int64_t block =
      int64_t(spec.channels) * spec.image_size * spec.image_size;
  for (int start = 0; start < count; start += 32) {
    const int len = std::min(32, count - start);
    Tensor zc({len, spec.latent_dim});
    std::copy(z.data() + int64_t(start) * spec.latent_dim,
              z.data() + int64_t(start + len) * spec.latent_dim, zc.data());
    std::vector<int> lc;
    if (!labels.empty()) {
      lc.assign(labels.begin() + start, labels.begin() + start + len);
    }
    Tensor f = m.g->forward(zc, lc, Mode::Eval);
    std::copy(f.data(), f.data() + int64_t(len) * block,
              imgs.data() + int64_t(start) * block);
  }
  const int s = spec.image_size;
  const int64_t plane = int64_t(s) * s;
  Image canvas(cols * s, cols * s, 3);
  for (int i = 0; i < count; ++i) {
    const int ty = (i / cols) * s, tx = (i % cols) * s;
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        for (int c = 0; c < 3; ++c) {
          const int src_c = spec.channels == 1 ? 0 : c;
          const float v = imgs[i * block + src_c * plane + y * s + x];
          long byte = std::lround((double(v) + 1.0) * 127.5);
          byte = std::clamp(byte, 0L, 255L);
          canvas.at(ty + y, tx + x, c) = uint8_t(byte);
        }
      }
    }
  }
  save_png(path, canvas);
}

RunResult train(const ModelSpec& spec, const data::ImageSet& dataset,
                const TrainConfig& cfg,
                const metrics::FeatureExtractor& extractor,
                const std::string& out_dir, bool resume) {
  spec.validate();
  cfg.validate();
  const int n = dataset.count();
  if (n < cfg.batch_size) {
    throw ValidationError(msg("dataset has ", n,
                              " images, fewer than one batch of ",
                              cfg.batch_size));
  }
  if (dataset.images.dim(1) != spec.channels ||
      dataset.images.dim(2) != spec.image_size) {
    throw ValidationError("dataset tensor does not match the model spec");
  }
  if (spec.conditional() &&
      spec.num_classes != int(dataset.categories.size())) {
    throw ValidationError(msg("spec has num_classes=", spec.num_classes,
                              " but the dataset defines ",
                              dataset.categories.size(), " categories"));
  }
  fs::create_directories(out_dir + "/checkpoints");
  fs::create_directories(out_dir + "/samples");

  std::unique_ptr<GanModel> model;
  std::vector<EvalPoint> trajectory;
  std::vector<std::pair<int, int>> pagan_trace;
  int start_epoch = 0;
  if (resume) {
    const std::string latest = find_latest_checkpoint(out_dir + "/checkpoints");
    if (!latest.empty()) {
      Checkpoint ck = load_checkpoint(latest, spec, cfg);
      model = std::move(ck.model);
      trajectory = std::move(ck.trajectory);
      pagan_trace = std::move(ck.pagan_trace);
      start_epoch = ck.epoch;
    }
  }
  if (!model) {
    model = std::make_unique<GanModel>(spec, cfg, cfg.seed, 0);
  }

  PaganScheduler sched(cfg.pagan_stall_window, cfg.pagan_stall_epsilon,
                       spec.family == Family::PAGAN ? spec.pagan_max_level : 0);
  for (const EvalPoint& p : trajectory) sched.observe(p.kid_value);

  const std::string losses_path = out_dir + "/losses.csv";
  std::vector<csv::Row> loss_rows;
  if (start_epoch > 0 && fs::exists(losses_path)) {
    csv::Table t = csv::read_file(losses_path);
    for (auto& row : t.rows) {
      if (!row.empty() && std::stoi(row[0]) <= start_epoch) {
        loss_rows.push_back(std::move(row));
      }
    }
  }

  const int steps = n / cfg.batch_size;
  const int64_t block = dataset.images.numel() / n;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng = Rng::stream(cfg.seed, "shuffle", uint64_t(epoch));
    shuffle_rng.shuffle(perm);
    Rng step_rng = Rng::stream(cfg.seed, "step", uint64_t(epoch));

    for (int s = 0; s < steps; ++s) {
      Tensor batch({cfg.batch_size, spec.channels, spec.image_size,
                    spec.image_size});
      std::vector<int> labels(static_cast<size_t>(cfg.batch_size));
      for (int j = 0; j < cfg.batch_size; ++j) {
        const int idx = perm[size_t(s) * cfg.batch_size + j];
        std::copy(dataset.images.data() + int64_t(idx) * block,
                  dataset.images.data() + int64_t(idx + 1) * block,
                  batch.data() + int64_t(j) * block);
        labels[size_t(j)] = dataset.labels[size_t(idx)];
      }
      const uint64_t noise_seed =
          cfg.seed * 0x9E3779B97F4A7C15ULL +
          (uint64_t(epoch) * 0x100000ULL + uint64_t(s)) * 4ULL;
      StepResult st =
          spec.family == Family::WGAN_GP
              ? wgan_gp_step(*model, batch, cfg, step_rng)
              : gan_step(*model, batch, labels, cfg, step_rng, noise_seed);
      if (!std::isfinite(st.loss_d) || !std::isfinite(st.loss_g) ||
          !std::isfinite(st.gp)) {
        throw DivergenceError(msg("training diverged at epoch ", epoch,
                                  ", step ", s, ": loss_d=", st.loss_d,
                                  " loss_g=", st.loss_g, " gp=", st.gp));
      }
      loss_rows.push_back({std::to_string(epoch), std::to_string(s),
                           fmt6(st.loss_d), fmt6(st.loss_g), fmt6(st.gp),
                           std::to_string(model->d->pagan_level())});
    }
    write_losses(losses_path, loss_rows);

    const bool eval_now =
        (epoch % cfg.eval_every_epochs == 0) || epoch == cfg.epochs;
    if (eval_now) {
      EvalPoint p = run_eval(*model, dataset, cfg, extractor, epoch);
      trajectory.push_back(p);
      if (spec.family == Family::PAGAN) {
        const int lvl = sched.observe(p.kid_value);
        if (lvl > model->d->pagan_level()) {
          Rng grow_rng = Rng::stream(cfg.seed, "pagan-grow", uint64_t(epoch));
          model->d->grow_pagan_level(lvl, grow_rng);
          pagan_trace.emplace_back(epoch, lvl);
        }
      }
      write_trajectory(out_dir + "/trajectory.csv", trajectory);
      save_sample_grid(out_dir + "/samples/epoch_" + pad4(epoch) + ".png",
                       *model, cfg.seed);
      const std::string ck_path =
          out_dir + "/checkpoints/ckpt_epoch_" + pad4(epoch) + ".afnb";
      save_checkpoint(ck_path, *model, epoch, trajectory, pagan_trace);
    }
  }

  RunResult rr;
  rr.model_id = spec.model_id();
  rr.dataset_id = dataset.id;
  rr.trajectory = trajectory;
  rr.pagan_trace = pagan_trace;
  rr.epochs_run = cfg.epochs - start_epoch;
  rr.final_checkpoint = find_latest_checkpoint(out_dir + "/checkpoints");
  rr.best_fid = std::numeric_limits<double>::infinity();
  rr.best_kid = std::numeric_limits<double>::infinity();
  for (const EvalPoint& p : trajectory) {
    rr.best_fid = std::min(rr.best_fid, p.fid_value);
    rr.best_kid = std::min(rr.best_kid, p.kid_value);
  }
  rr.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  write_run_manifest(out_dir + "/run_manifest.json", spec, dataset, cfg,
                     start_epoch);
  return rr;
}

}  // namespace affgan::train
