#include "affgan/classify/classify.hpp"

#include <algorithm>
#include <numeric>

#include "affgan/core/error.hpp"
#include "affgan/nn/bundle.hpp"
#include "affgan/train/train.hpp"

namespace affgan::classify {

using nn::Mode;
using nn::Tensor;

FreezeMode freeze_mode_from_string(const std::string& s) {
  if (s == "head" || s == "head_only") return FreezeMode::HeadOnly;
  if (s == "full" || s == "full_fine_tune") return FreezeMode::FullFineTune;
  throw ValidationError(msg("unknown freeze mode '", s, "'"));
}

std::string to_string(FreezeMode m) {
  return m == FreezeMode::HeadOnly ? "head" : "full";
}

BackboneSpec backbone_preset(const std::string& name,
                             const std::string& weights_dir) {
  static const char* known[] = {"resnet18", "resnet152", "vgg19",
                                "efficientnet_b7"};
  if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
        return name == k;
      }) == std::end(known)) {
    throw ValidationError(msg("unknown backbone preset '", name, "'"));
  }
  BackboneSpec spec;
  spec.name = name;
  spec.weights_path = weights_dir + "/" + name + ".afnb";
  spec.freeze_mode = FreezeMode::FullFineTune;
  return spec;
}

Classifier::Classifier(const BackboneSpec& spec, int num_classes)
    : spec_(spec), num_classes_(num_classes) {
  if (num_classes < 2) {
    throw ValidationError("classifier needs at least 2 classes");
  }
  nn::Bundle b = nn::read_bundle(spec.weights_path);
  input_size_ = std::stoi(b.require_meta("input_size"));
  feature_dim_ = std::stoi(b.require_meta("feature_dim"));
  trunk_ = nn::net_from_architecture(b.require_meta("arch"), 0);
  nn::bundle_get_params(b, "", trunk_.params(), false);
  Rng head_init(0);
  head_ = std::make_unique<nn::Linear>(feature_dim_, num_classes, true,
                                       head_init);
  head_->weight().value.setZero();
}

std::vector<nn::Param*> Classifier::trainable_params() {
  std::vector<nn::Param*> out;
  head_->collect_params(out);
  if (spec_.freeze_mode == FreezeMode::FullFineTune) {
    for (nn::Param* p : trunk_.params()) out.push_back(p);
  }
  return out;
}

Tensor Classifier::logits(const Tensor& images, Mode mode, Rng* rng) {
  if (images.ndim() != 4 || images.dim(2) != input_size_ ||
      images.dim(3) != input_size_) {
    throw ValidationError(msg("classifier expects ", input_size_, "x",
                              input_size_, " inputs"));
  }
  Tensor feats = trunk_.forward(images, mode, rng);
  return head_->forward(feats, mode, rng);
}

std::vector<int> Classifier::predict(const Tensor& images) {
  Tensor lg = logits(images, Mode::Eval);
  const int n = lg.dim(0), k = lg.dim(1);
  std::vector<int> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = 0;
    for (int j = 1; j < k; ++j) {
      if (lg[int64_t(i) * k + j] > lg[int64_t(i) * k + best]) best = j;
    }
    out[size_t(i)] = best;
  }
  return out;
}

namespace {

Tensor gather_batch(const data::ImageSet& set, const std::vector<int>& order,
                    size_t start, int len, std::vector<int>* labels) {
  const int64_t block = set.images.numel() / set.count();
  Tensor out({len, set.images.dim(1), set.images.dim(2), set.images.dim(3)});
  labels->resize(size_t(len));
  for (int j = 0; j < len; ++j) {
    const int idx = order[start + size_t(j)];
    std::copy(set.images.data() + idx * block,
              set.images.data() + (idx + 1) * block,
              out.data() + int64_t(j) * block);
    (*labels)[size_t(j)] = set.labels[size_t(idx)];
  }
  return out;
}

}  // namespace

double evaluate(Classifier& clf, const data::ImageSet& set) {
  if (set.count() == 0) throw ValidationError("empty evaluation set");
  const int64_t block = set.images.numel() / set.count();
  int correct = 0;
  const int chunk = 64;
  for (int start = 0; start < set.count(); start += chunk) {
    const int len = std::min(chunk, set.count() - start);
    Tensor part({len, set.images.dim(1), set.images.dim(2), set.images.dim(3)});
    std::copy(set.images.data() + start * block,
              set.images.data() + (start + len) * block, part.data());
    std::vector<int> pred = clf.predict(part);
    for (int j = 0; j < len; ++j) {
      if (pred[size_t(j)] == set.labels[size_t(start + j)]) ++correct;
    }
  }
  return double(correct) / double(set.count());
}

ClassifierResult fine_tune(Classifier& clf, const data::AffectiveDataset& ds,
                           const FineTuneConfig& cfg,
                           const std::string& dataset_id) {
  if (cfg.epochs <= 0 || cfg.batch_size <= 0 || cfg.lr <= 0.0f) {
    throw ValidationError("fine-tune config needs positive epochs/batch/lr");
  }
  ClassifierResult res;
  res.backbone = clf.backbone().name;
  res.dataset_id = dataset_id;

  data::SplitResult sp = data::split(ds, cfg.train_fraction, cfg.seed);
  res.warnings = sp.warnings;
  data::ImageSet train_set =
      data::load_image_set(sp.train, clf.input_size(), dataset_id + "-train");
  data::ImageSet val_set =
      data::load_image_set(sp.val, clf.input_size(), dataset_id + "-val");

  const std::vector<std::string> cats = ds.category_map.all_categories();
  std::vector<size_t> present(cats.size(), 0);
  for (int l : train_set.labels) present[size_t(l)]++;
  for (size_t c = 0; c < cats.size(); ++c) {
    if (present[c] == 0) {
      res.warnings.push_back(msg("category '", cats[c],
                                 "' has no training samples"));
    }
  }

  nn::Adam opt(cfg.lr, 0.9f, 0.999f);
  const std::vector<nn::Param*> params = clf.trainable_params();
  const bool full = clf.backbone().freeze_mode == FreezeMode::FullFineTune;

  std::vector<int> order(static_cast<size_t>(train_set.count()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng::stream(cfg.seed, "cls-shuffle", uint64_t(epoch));
    shuffle_rng.shuffle(order);
    Rng step_rng = Rng::stream(cfg.seed, "cls-step", uint64_t(epoch));
    int64_t correct = 0, seen = 0;
    for (size_t start = 0; start < order.size();
         start += size_t(cfg.batch_size)) {
      const int len =
          int(std::min(order.size() - start, size_t(cfg.batch_size)));
      std::vector<int> labels;
      Tensor batch = gather_batch(train_set, order, start, len, &labels);
      Tensor lg = clf.logits(batch, Mode::Train, &step_rng);
      Tensor dlg;
      train::softmax_cross_entropy(lg, labels, &dlg);
      for (int j = 0; j < len; ++j) {
        int best = 0;
        for (int k = 1; k < clf.num_classes(); ++k) {
          if (lg[int64_t(j) * clf.num_classes() + k] >
              lg[int64_t(j) * clf.num_classes() + best]) {
            best = k;
          }
        }
        if (best == labels[size_t(j)]) ++correct;
      }
      seen += len;
      for (nn::Param* p : params) p->grad.setZero();
      Tensor dfeats = clf.head().backward(dlg, true);
      if (full) clf.trunk().backward(dfeats, true);
      opt.step(params);
    }
    EpochAccuracy ea;
    ea.epoch = epoch;
    ea.train_accuracy = double(correct) / double(seen);
    ea.val_accuracy = evaluate(clf, val_set);
    res.per_epoch.push_back(ea);
    if (res.per_epoch.size() == 1 || ea.val_accuracy > res.best_val_accuracy) {
      res.best_val_accuracy = ea.val_accuracy;
      res.best_epoch = epoch;
    }
  }
  return res;
}

}  // namespace affgan::classify
