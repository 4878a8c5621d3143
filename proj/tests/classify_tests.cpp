#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "affgan/classify/classify.hpp"
#include "affgan/core/error.hpp"
#include "affgan/core/rng.hpp"
#include "affgan/data/fixture.hpp"
#include "affgan/nn/bundle.hpp"

using namespace affgan;
using namespace affgan::classify;
using nn::Mode;
using nn::Tensor;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() /
           ("affgan_classify_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string write_backbone(const std::filesystem::path& dir, int input_size) {
  Rng init = Rng::stream(77, "backbone-init");
  nn::Net net;
  net.add<nn::Conv2d>(3, 8, 4, 2, 1, true, false, init);
  net.add<nn::LeakyReLU>(0.2f);
  net.add<nn::GlobalAvgPool>();
  nn::Bundle b;
  b.set_meta("arch", net.architecture());
  b.set_meta("name", "tinynet");
  b.set_meta("feature_dim", "8");
  b.set_meta("input_size", std::to_string(input_size));
  nn::bundle_put_params(b, "", net.params(), false);
  const std::string path = (dir / "tinynet.afnb").string();
  nn::write_bundle(path, b);
  return path;
}

BackboneSpec tiny_backbone(const std::filesystem::path& dir,
                           FreezeMode mode = FreezeMode::FullFineTune,
                           int input_size = 16) {
  BackboneSpec spec;
  spec.name = "tinynet";
  spec.weights_path = write_backbone(dir, input_size);
  spec.freeze_mode = mode;
  return spec;
}

data::ImageSet balanced_set(int per_class, int size, uint64_t seed) {
  const auto cats = data::CategoryMap::defaults().all_categories();
  const int k = int(cats.size());
  data::ImageSet set;
  set.id = "balanced";
  set.categories = cats;
  set.images = Tensor({per_class * k, 3, size, size});
  Rng rng(seed);
  for (int64_t i = 0; i < set.images.numel(); ++i) {
    set.images[i] = float(rng.uniform(-1.0, 1.0));
  }
  set.labels.resize(size_t(per_class) * size_t(k));
  for (size_t i = 0; i < set.labels.size(); ++i) set.labels[i] = int(i) % k;
  return set;
}

data::AffectiveDataset separable_fixture(const std::filesystem::path& dir,
                                         int n, uint64_t seed) {
  data::FixtureOptions opts;
  opts.image_size = 16;
  opts.style = data::FixtureOptions::Style::Separable13;
  const std::string manifest = data::synth_fixture(n, seed, dir.string(), opts);
  return data::build_dataset({manifest}, data::default_scales(),
                             data::CategoryMap::defaults());
}

}  // namespace

TEST_CASE("freeze modes: parse and print") {
  CHECK(freeze_mode_from_string("head") == FreezeMode::HeadOnly);
  CHECK(freeze_mode_from_string("head_only") == FreezeMode::HeadOnly);
  CHECK(freeze_mode_from_string("full") == FreezeMode::FullFineTune);
  CHECK(freeze_mode_from_string("full_fine_tune") == FreezeMode::FullFineTune);
  CHECK(to_string(FreezeMode::HeadOnly) == "head");
  CHECK(to_string(FreezeMode::FullFineTune) == "full");
  CHECK_THROWS_AS(freeze_mode_from_string("partial"), ValidationError);
}

TEST_CASE("backbone presets map onto bundle paths") {
  for (const char* name :
       {"resnet18", "resnet152", "vgg19", "efficientnet_b7"}) {
    BackboneSpec spec = backbone_preset(name, "/opt/weights");
    CHECK(spec.name == name);
    CHECK(spec.weights_path == std::string("/opt/weights/") + name + ".afnb");
    CHECK(spec.freeze_mode == FreezeMode::FullFineTune);
  }
  CHECK_THROWS_AS(backbone_preset("alexnet", "/opt/weights"), ValidationError);
}

TEST_CASE("untrained head scores exact chance on balanced data") {
  auto dir = temp_dir("chance");
  Classifier clf(tiny_backbone(dir), 13);
  CHECK(clf.num_classes() == 13);
  CHECK(clf.input_size() == 16);

  data::ImageSet set = balanced_set(5, 16, 30);
  // zero weights, zero bias: every logit is 0 and ties resolve downward
  std::vector<int> pred = clf.predict(set.images);
  for (int p : pred) CHECK(p == 0);
  CHECK(evaluate(clf, set) == 1.0 / 13.0);

  std::filesystem::remove_all(dir);
}

TEST_CASE("classifier guards") {
  auto dir = temp_dir("guards");
  BackboneSpec bb = tiny_backbone(dir);
  CHECK_THROWS_AS(Classifier(bb, 1), ValidationError);

  Classifier clf(bb, 4);
  Tensor wrong({2, 3, 32, 32});
  CHECK_THROWS_AS(clf.logits(wrong, Mode::Eval), ValidationError);
  Tensor ok({2, 3, 16, 16});
  Tensor lg = clf.logits(ok, Mode::Eval);
  CHECK(lg.dim(0) == 2);
  CHECK(lg.dim(1) == 4);

  data::ImageSet empty;
  CHECK_THROWS_AS(evaluate(clf, empty), ValidationError);

  std::filesystem::remove_all(dir);
}

TEST_CASE("freeze mode decides what the optimizer may touch") {
  auto dir = temp_dir("freeze");
  Classifier head_only(tiny_backbone(dir, FreezeMode::HeadOnly), 13);
  Classifier full(tiny_backbone(dir, FreezeMode::FullFineTune), 13);
  const size_t trunk_params = full.trunk().params().size();
  CHECK(head_only.trainable_params().size() == 2);
  CHECK(full.trainable_params().size() == 2 + trunk_params);

  // a head-only fine-tune leaves the trunk bitwise untouched
  data::AffectiveDataset ds = separable_fixture(dir / "fix", 130, 31);
  std::vector<Eigen::MatrixXf> before;
  for (nn::Param* p : head_only.trunk().params()) before.push_back(p->value);
  FineTuneConfig cfg;
  cfg.epochs = 1;
  cfg.lr = 1e-2f;
  fine_tune(head_only, ds, cfg, "fixture");
  auto after = head_only.trunk().params();
  for (size_t i = 0; i < after.size(); ++i) {
    CHECK((before[i] - after[i]->value).norm() == 0.0f);
  }
  CHECK(head_only.head().weight().value.norm() > 0.0f);

  std::filesystem::remove_all(dir);
}

TEST_CASE("fine_tune separates the color-cluster fixture") {
  auto dir = temp_dir("tune");
  data::AffectiveDataset ds = separable_fixture(dir / "fix", 130, 32);
  Classifier clf(tiny_backbone(dir), 13);
  FineTuneConfig cfg;
  cfg.epochs = 5;
  cfg.lr = 1e-2f;
  ClassifierResult res = fine_tune(clf, ds, cfg, "fixture");

  CHECK(res.backbone == "tinynet");
  CHECK(res.dataset_id == "fixture");
  REQUIRE(res.per_epoch.size() == 5);
  double best = 0.0;
  int best_epoch = 0;
  for (const EpochAccuracy& ea : res.per_epoch) {
    CHECK(ea.val_accuracy >= 0.0);
    CHECK(ea.val_accuracy <= 1.0);
    if (ea.val_accuracy > best) {
      best = ea.val_accuracy;
      best_epoch = ea.epoch;
    }
  }
  CHECK(res.best_val_accuracy == best);
  CHECK(res.best_epoch == best_epoch);
  CHECK(res.warnings.empty());
  CHECK(res.best_val_accuracy > 0.5);

  // evaluate agrees with a manual recount over predict()
  data::ImageSet whole = data::load_image_set(ds, clf.input_size(), "whole");
  std::vector<int> pred = clf.predict(whole.images);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == whole.labels[i]) ++correct;
  }
  CHECK(evaluate(clf, whole) == double(correct) / double(whole.count()));

  std::filesystem::remove_all(dir);
}

TEST_CASE("fine_tune flags categories without training samples") {
  auto dir = temp_dir("warn");
  data::AffectiveDataset ds = separable_fixture(dir / "fix", 130, 33);
  const std::string victim = "Tense";
  ds.records.erase(std::remove_if(ds.records.begin(), ds.records.end(),
                                  [&](const data::AffectiveRecord& r) {
                                    return r.category == victim;
                                  }),
                   ds.records.end());

  Classifier clf(tiny_backbone(dir), 13);
  FineTuneConfig cfg;
  cfg.epochs = 1;
  ClassifierResult res = fine_tune(clf, ds, cfg, "fixture");
  bool flagged = false;
  for (const std::string& w : res.warnings) {
    flagged |= w.find(victim) != std::string::npos;
  }
  CHECK(flagged);

  std::filesystem::remove_all(dir);
}
