#pragma once

#include <memory>
#include <string>
#include <vector>

#include "affgan/data/imageset.hpp"
#include "affgan/gan/zoo.hpp"
#include "affgan/metrics/metrics.hpp"
#include "affgan/nn/adam.hpp"

namespace affgan::train {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 64;
  float lr_g = 5e-4f;
  float lr_d = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  float real_label = 0.9f;
  float gp_lambda = 10.0f;
  int critic_steps = 5;
  int eval_every_epochs = 5;
  int metric_batch = 200;
  int pagan_stall_window = 3;
  double pagan_stall_epsilon = 0.02;
  uint64_t seed = 416;

  void validate() const;
};

/// PAGAN trains against the plain real target; other BCE families use the
/// smoothed one.
float effective_real_label(const gan::ModelSpec& spec, const TrainConfig& cfg);

/// mean over the batch of BCE(sigmoid(logit), target), computed from
/// logits for stability.
double bce_with_logits(const nn::Tensor& logits, float target);

/// Mean cross entropy of softmax(logits) against integer labels. When
/// d_logits is non-null it receives (softmax - onehot) / N.
double softmax_cross_entropy(const nn::Tensor& logits,
                             const std::vector<int>& labels,
                             nn::Tensor* d_logits);

/// Generator/discriminator pair with their optimizers.
struct GanModel {
  gan::ModelSpec spec;
  std::unique_ptr<gan::GeneratorNet> g;
  std::unique_ptr<gan::DiscriminatorNet> d;
  std::unique_ptr<nn::Adam> opt_g;
  std::unique_ptr<nn::Adam> opt_d;

  GanModel(const gan::ModelSpec& spec, const TrainConfig& cfg, uint64_t seed,
           int pagan_level = 0);
};

struct StepResult {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double gp = 0.0;
};

/// One adversarial update for the BCE families (DCGAN, CGAN, ACGAN,
/// PAGAN): discriminator on real+fake with label smoothing, then the
/// non-saturating generator update.
StepResult gan_step(GanModel& m, const nn::Tensor& real,
                    const std::vector<int>& labels, const TrainConfig& cfg,
                    Rng& rng, uint64_t pagan_noise_seed);

/// critic_steps Wasserstein critic updates with the exact gradient-penalty
/// double-backward, then one generator update on -mean D(G(z)).
StepResult wgan_gp_step(GanModel& m, const nn::Tensor& real,
                        const TrainConfig& cfg, Rng& rng);

/// KID-driven noise schedule: the level rises when the best KID of the
/// last `window` evaluations no longer improves on the best of the
/// `window` before them by more than `eps` (relative), capped at
/// max_level. After a rise, `window` further evaluations must accrue.
class PaganScheduler {
 public:
  PaganScheduler(int window, double eps, int max_level)
      : window_(window), eps_(eps), max_level_(max_level) {}

  /// Feeds one evaluation; returns the level to train at from now on.
  int observe(double kid_value);
  int level() const { return level_; }

 private:
  int window_;
  double eps_;
  int max_level_;
  int level_ = 0;
  int since_change_ = 0;
  std::vector<double> history_;
};

struct EvalPoint {
  int epoch;
  double fid_value;
  double kid_value;
};

struct RunResult {
  std::string model_id;
  std::string dataset_id;
  std::vector<EvalPoint> trajectory;
  double best_fid = 0.0;
  double best_kid = 0.0;
  std::vector<std::pair<int, int>> pagan_trace;  // (epoch, level after eval)
  std::string final_checkpoint;
  int epochs_run = 0;
  double wall_seconds = 0.0;
};

/// Full training run. Writes losses.csv, trajectory.csv, checkpoints/,
/// samples/ and run_manifest.json under out_dir. With resume=true the run
/// continues from the newest checkpoint in out_dir (bit-identical to an
/// uninterrupted run); without checkpoints it starts fresh.
RunResult train(const gan::ModelSpec& spec, const data::ImageSet& dataset,
                const TrainConfig& cfg,
                const metrics::FeatureExtractor& extractor,
                const std::string& out_dir, bool resume = false);

/// Model + optimizer snapshot in the weights-bundle container.
void save_checkpoint(const std::string& path, GanModel& m, int epoch,
                     const std::vector<EvalPoint>& trajectory,
                     const std::vector<std::pair<int, int>>& pagan_trace);

struct Checkpoint {
  int epoch = 0;
  std::unique_ptr<GanModel> model;
  std::vector<EvalPoint> trajectory;
  std::vector<std::pair<int, int>> pagan_trace;
};

/// Restores a checkpoint; the stored spec must match `expected` exactly.
Checkpoint load_checkpoint(const std::string& path,
                           const gan::ModelSpec& expected,
                           const TrainConfig& cfg);

/// Renders an 8x8 grid of generator samples drawn from the fixed grid
/// stream, identical at every call for a given seed.
void save_sample_grid(const std::string& path, GanModel& m, uint64_t seed);

}  // namespace affgan::train
