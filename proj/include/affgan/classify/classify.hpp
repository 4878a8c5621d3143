#pragma once

#include <memory>
#include <string>
#include <vector>

#include "affgan/data/affective.hpp"
#include "affgan/data/imageset.hpp"
#include "affgan/nn/adam.hpp"
#include "affgan/nn/net.hpp"

namespace affgan::classify {

enum class FreezeMode { HeadOnly, FullFineTune };

FreezeMode freeze_mode_from_string(const std::string& s);
std::string to_string(FreezeMode m);

struct BackboneSpec {
  std::string name;
  std::string weights_path;
  FreezeMode freeze_mode = FreezeMode::FullFineTune;
};

/// "resnet18", "resnet152", "vgg19" or "efficientnet_b7" mapped onto
/// "<dir>/<name>.afnb", full fine-tuning.
BackboneSpec backbone_preset(const std::string& name,
                             const std::string& weights_dir);

/// Pretrained trunk from a weights bundle plus a fresh linear head. The
/// head starts at zero, so an untrained classifier scores exact chance on
/// balanced data (argmax ties resolve to the lowest class index).
class Classifier {
 public:
  Classifier(const BackboneSpec& spec, int num_classes);

  nn::Tensor logits(const nn::Tensor& images, nn::Mode mode,
                    Rng* rng = nullptr);
  std::vector<int> predict(const nn::Tensor& images);

  const BackboneSpec& backbone() const { return spec_; }
  int num_classes() const { return num_classes_; }
  int input_size() const { return input_size_; }
  nn::Net& trunk() { return trunk_; }
  nn::Linear& head() { return *head_; }
  std::vector<nn::Param*> trainable_params();

 private:
  BackboneSpec spec_;
  int num_classes_;
  int input_size_;
  int feature_dim_;
  nn::Net trunk_;
  std::unique_ptr<nn::Linear> head_;
};

struct FineTuneConfig {
  int epochs = 10;
  int batch_size = 32;
  float lr = 1e-4f;
  double train_fraction = 0.8;
  uint64_t seed = 416;
};

struct EpochAccuracy {
  int epoch;
  double train_accuracy;
  double val_accuracy;
};

struct ClassifierResult {
  std::string backbone;
  std::string dataset_id;
  std::vector<EpochAccuracy> per_epoch;
  double best_val_accuracy = 0.0;
  int best_epoch = 0;
  std::vector<std::string> warnings;
};

/// Splits the dataset with the shared stratified logic, then fine-tunes
/// on category labels with cross entropy and Adam.
ClassifierResult fine_tune(Classifier& clf, const data::AffectiveDataset& ds,
                           const FineTuneConfig& cfg,
                           const std::string& dataset_id);

/// Top-1 accuracy on an image set.
double evaluate(Classifier& clf, const data::ImageSet& set);

}  // namespace affgan::classify
