#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "affgan/augment/augment.hpp"
#include "affgan/classify/classify.hpp"
#include "affgan/core/csv.hpp"
#include "affgan/core/error.hpp"
#include "affgan/core/iniconfig.hpp"
#include "affgan/data/affective.hpp"
#include "affgan/data/fixture.hpp"
#include "affgan/data/imageset.hpp"
#include "affgan/exp/grid.hpp"
#include "affgan/gan/zoo.hpp"
#include "affgan/metrics/metrics.hpp"
#include "affgan/train/train.hpp"

namespace fs = std::filesystem;
using namespace affgan;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 416;
  bool resume = false;
};

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

IniConfig load_config(const GlobalOpts& g) {
  if (g.config_path.empty()) return IniConfig{};
  return IniConfig::load(g.config_path);
}

train::TrainConfig train_config_from(const IniConfig& c, uint64_t seed) {
  train::TrainConfig t;
  t.epochs = int(c.get_int("train", "epochs", t.epochs));
  t.batch_size = int(c.get_int("train", "batch_size", t.batch_size));
  t.lr_g = float(c.get_real("train", "lr_g", t.lr_g));
  t.lr_d = float(c.get_real("train", "lr_d", t.lr_d));
  t.beta1 = float(c.get_real("train", "beta1", t.beta1));
  t.beta2 = float(c.get_real("train", "beta2", t.beta2));
  t.real_label = float(c.get_real("train", "real_label", t.real_label));
  t.gp_lambda = float(c.get_real("train", "gp_lambda", t.gp_lambda));
  t.critic_steps = int(c.get_int("train", "critic_steps", t.critic_steps));
  t.eval_every_epochs =
      int(c.get_int("train", "eval_every_epochs", t.eval_every_epochs));
  t.metric_batch = int(c.get_int("train", "metric_batch", t.metric_batch));
  t.pagan_stall_window =
      int(c.get_int("train", "pagan_stall_window", t.pagan_stall_window));
  t.pagan_stall_epsilon =
      c.get_real("train", "pagan_stall_epsilon", t.pagan_stall_epsilon);
  t.seed = seed;
  return t;
}

void put_train_config(IniConfig& c, const train::TrainConfig& t) {
  c.set("train", "epochs", std::to_string(t.epochs));
  c.set("train", "batch_size", std::to_string(t.batch_size));
  c.set("train", "lr_g", fmt_real(t.lr_g));
  c.set("train", "lr_d", fmt_real(t.lr_d));
  c.set("train", "beta1", fmt_real(t.beta1));
  c.set("train", "beta2", fmt_real(t.beta2));
  c.set("train", "real_label", fmt_real(t.real_label));
  c.set("train", "gp_lambda", fmt_real(t.gp_lambda));
  c.set("train", "critic_steps", std::to_string(t.critic_steps));
  c.set("train", "eval_every_epochs", std::to_string(t.eval_every_epochs));
  c.set("train", "metric_batch", std::to_string(t.metric_batch));
  c.set("train", "pagan_stall_window", std::to_string(t.pagan_stall_window));
  c.set("train", "pagan_stall_epsilon", fmt_real(t.pagan_stall_epsilon));
}

gan::ModelSpec model_spec_from(const IniConfig& c) {
  gan::ModelSpec s;
  s.family = gan::family_from_string(c.get_str("model", "family", "dcgan"));
  s.disc_variant =
      gan::variant_from_string(c.get_str("model", "variant", "bn"));
  s.latent_dim = int(c.get_int("model", "latent_dim", s.latent_dim));
  s.image_size = int(c.get_int("model", "image_size", s.image_size));
  s.channels = int(c.get_int("model", "channels", s.channels));
  s.pagan_max_level =
      int(c.get_int("model", "pagan_max_level", s.pagan_max_level));
  s.base_width = int(c.get_int("model", "base_width", s.base_width));
  return s;
}

void put_model_spec(IniConfig& c, const gan::ModelSpec& s) {
  c.set("model", "family", gan::to_string(s.family));
  c.set("model", "variant", gan::to_string(s.disc_variant));
  c.set("model", "latent_dim", std::to_string(s.latent_dim));
  c.set("model", "image_size", std::to_string(s.image_size));
  c.set("model", "channels", std::to_string(s.channels));
  c.set("model", "num_classes", std::to_string(s.num_classes));
  c.set("model", "pagan_max_level", std::to_string(s.pagan_max_level));
  c.set("model", "base_width", std::to_string(s.base_width));
}

std::unique_ptr<metrics::FeatureExtractor> make_extractor(const IniConfig& c) {
  const std::string which = c.get_str("metrics", "extractor", "stub");
  if (which == "stub") return std::make_unique<metrics::StubExtractor>();
  return std::make_unique<metrics::BundleExtractor>(which);
}

void echo_config(IniConfig c, const GlobalOpts& g) {
  if (!c.has("", "format_version")) c.set("", "format_version", "1");
  c.set("", "seed", std::to_string(g.seed));
  fs::create_directories(g.out_dir);
  c.save(g.out_dir + "/config_resolved.ini");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(msg("cannot write ", path));
  out << text;
}

std::pair<gan::Family, gan::DiscVariant> parse_model_token(
    const std::string& tok) {
  const auto pos = tok.rfind('_');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= tok.size()) {
    throw ValidationError(
        msg("bad model id '", tok, "', expected <family>_<variant>"));
  }
  return {gan::family_from_string(tok.substr(0, pos)),
          gan::variant_from_string(tok.substr(pos + 1))};
}

int cmd_dataset_build(const GlobalOpts& g,
                      const std::vector<std::string>& manifests,
                      bool no_check) {
  IniConfig c = load_config(g);
  const data::ScaleMap scales = data::scales_from_config(c);
  const data::CategoryMap map = data::category_map_from_config(c);
  data::BuildOptions opts;
  opts.check_files_exist = !no_check;
  const data::AffectiveDataset ds =
      data::build_dataset(manifests, scales, map, opts);

  fs::create_directories(g.out_dir);
  data::save_dataset_csv(g.out_dir + "/dataset.csv", ds);
  const std::string qrep = data::quadrant_report(ds);
  write_text(g.out_dir + "/quadrant_report.txt", qrep);
  write_text(g.out_dir + "/category_report.txt", data::category_report(ds));
  echo_config(c, g);

  std::cout << "built " << ds.size() << " records from " << manifests.size()
            << " manifest(s)\n"
            << qrep << "dataset: " << g.out_dir << "/dataset.csv\n";
  return 0;
}

int cmd_dataset_augment(const GlobalOpts& g, const std::string& dataset_csv) {
  IniConfig c = load_config(g);
  const data::CategoryMap map = data::category_map_from_config(c);
  const data::AffectiveDataset ds = data::load_dataset_csv(dataset_csv, map);

  fs::create_directories(g.out_dir);
  const aug::AugmentResult r =
      aug::augment_dataset(ds, g.out_dir + "/images");
  data::save_dataset_csv(g.out_dir + "/dataset.csv", r.dataset);
  echo_config(c, g);

  std::cout << "augmented " << ds.size() << " -> " << r.dataset.size()
            << " records (" << r.images_written << " variant images)\n"
            << "dataset: " << g.out_dir << "/dataset.csv\n";
  return 0;
}

int cmd_dataset_fixture(const GlobalOpts& g, int count,
                        const std::string& style, int image_size) {
  data::FixtureOptions opts;
  opts.image_size = image_size;
  if (style == "circumplex") {
    opts.style = data::FixtureOptions::Style::Circumplex;
  } else if (style == "separable13") {
    opts.style = data::FixtureOptions::Style::Separable13;
  } else {
    throw ValidationError(msg("unknown fixture style '", style,
                              "', expected circumplex or separable13"));
  }
  const std::string manifest =
      data::synth_fixture(count, g.seed, g.out_dir, opts);
  std::cout << "wrote " << count << " images, manifest: " << manifest << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& dataset_csv,
              const gan::ModelSpec& spec0, const train::TrainConfig& cfg) {
  IniConfig c = load_config(g);
  const data::CategoryMap map = data::category_map_from_config(c);
  gan::ModelSpec spec = spec0;
  spec.num_classes =
      spec.conditional() ? int(map.all_categories().size()) : 0;
  spec.validate();
  cfg.validate();

  const data::AffectiveDataset ds = data::load_dataset_csv(dataset_csv, map);
  const data::ImageSet set = data::load_image_set(
      ds, spec.image_size, fs::path(dataset_csv).stem().string());
  const auto extractor = make_extractor(c);

  put_model_spec(c, spec);
  put_train_config(c, cfg);
  c.set("metrics", "extractor", extractor->name());
  echo_config(c, g);

  const train::RunResult r =
      train::train(spec, set, cfg, *extractor, g.out_dir, g.resume);
  std::cout << r.model_id << " on " << r.dataset_id << ": " << r.epochs_run
            << " epochs in " << fmt_real(r.wall_seconds) << "s, best FID "
            << fmt_real(r.best_fid) << ", best KID " << fmt_real(r.best_kid)
            << "\nrun dir: " << g.out_dir << "\n";
  return 0;
}

int cmd_grid(const GlobalOpts& g, const std::vector<std::string>& datasets,
             std::vector<std::string> model_ids, int workers,
             const gan::ModelSpec& base_spec, const train::TrainConfig& cfg) {
  IniConfig c = load_config(g);
  const data::CategoryMap map = data::category_map_from_config(c);
  if (model_ids.empty()) model_ids = c.get_list("grid", "models");

  std::vector<std::pair<gan::Family, gan::DiscVariant>> roster;
  if (model_ids.empty()) {
    roster = exp::default_model_roster();
  } else {
    for (const std::string& tok : model_ids)
      roster.push_back(parse_model_token(tok));
  }
  const auto cells = exp::make_cells(roster, datasets, base_spec,
                                     int(map.all_categories().size()));

  if (!g.resume && fs::exists(g.out_dir + "/scores.csv")) {
    throw ValidationError(msg(g.out_dir,
                              " already holds a grid; pass --resume or pick "
                              "a fresh --out"));
  }
  const auto extractor = make_extractor(c);

  std::string roster_str;
  for (const auto& [f, v] : roster) {
    if (!roster_str.empty()) roster_str += ", ";
    roster_str += gan::to_string(f) + "_" + gan::to_string(v);
  }
  put_model_spec(c, base_spec);
  put_train_config(c, cfg);
  c.set("grid", "models", roster_str);
  c.set("grid", "workers", std::to_string(workers));
  c.set("metrics", "extractor", extractor->name());
  echo_config(c, g);

  const auto results =
      exp::run_grid(cells, cfg, map, *extractor, g.out_dir, workers, g.resume);
  int ok = 0;
  for (const auto& r : results) {
    if (r.ok()) {
      ++ok;
    } else {
      std::cout << r.model_id << " @ " << r.dataset_id << ": " << r.status
                << "\n";
    }
  }
  std::cout << ok << "/" << results.size() << " cells ok\nscores: "
            << g.out_dir << "/scores.csv\n";
  return 0;
}

int cmd_report(const GlobalOpts& g, const std::string& grid_dir) {
  exp::generate_report(grid_dir, g.out_dir);
  std::cout << "report written to " << g.out_dir << "\n";
  return 0;
}

int cmd_classify(const GlobalOpts& g, const std::string& dataset_csv,
                 const std::string& backbone, const std::string& weights,
                 const std::string& weights_dir, const std::string& freeze,
                 const classify::FineTuneConfig& cfg) {
  IniConfig c = load_config(g);
  const data::CategoryMap map = data::category_map_from_config(c);

  classify::BackboneSpec bs;
  if (!weights.empty()) {
    bs.name = backbone;
    bs.weights_path = weights;
  } else {
    bs = classify::backbone_preset(backbone, weights_dir);
  }
  const std::string freeze_resolved =
      freeze.empty() ? c.get_str("classify", "freeze", "") : freeze;
  if (!freeze_resolved.empty()) {
    bs.freeze_mode = classify::freeze_mode_from_string(freeze_resolved);
  }

  const data::AffectiveDataset ds = data::load_dataset_csv(dataset_csv, map);
  const std::string dataset_id = fs::path(dataset_csv).stem().string();
  classify::Classifier clf(bs, int(map.all_categories().size()));

  c.set("classify", "backbone", bs.name);
  c.set("classify", "weights", bs.weights_path);
  c.set("classify", "freeze", classify::to_string(bs.freeze_mode));
  c.set("classify", "epochs", std::to_string(cfg.epochs));
  c.set("classify", "batch_size", std::to_string(cfg.batch_size));
  c.set("classify", "lr", fmt_real(cfg.lr));
  c.set("classify", "train_fraction", fmt_real(cfg.train_fraction));
  echo_config(c, g);

  const classify::ClassifierResult res =
      classify::fine_tune(clf, ds, cfg, dataset_id);
  for (const std::string& w : res.warnings) std::cerr << "warning: " << w << "\n";

  csv::Table t;
  t.header = {"backbone", "dataset", "epoch", "train_acc", "val_acc"};
  for (const auto& e : res.per_epoch) {
    char ta[32], va[32];
    std::snprintf(ta, sizeof(ta), "%.6f", e.train_accuracy);
    std::snprintf(va, sizeof(va), "%.6f", e.val_accuracy);
    t.rows.push_back({res.backbone, res.dataset_id, std::to_string(e.epoch),
                      ta, va});
  }
  csv::write_file(g.out_dir + "/classify_results.csv", t);

  std::cout << res.backbone << " on " << res.dataset_id << ": best val acc "
            << fmt_real(res.best_val_accuracy) << " at epoch "
            << res.best_epoch << "\nresults: " << g.out_dir
            << "/classify_results.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affective image GAN ablation toolkit"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "sectioned key-value config file");
  app.add_option("--seed", g.seed, "global RNG seed")->capture_default_str();
  app.add_option("--out", g.out_dir, "output directory")
      ->capture_default_str();
  app.add_flag("--resume", g.resume, "continue from existing outputs");

  int rc = 0;

  auto* dataset = app.add_subcommand("dataset", "dataset pipeline");
  dataset->require_subcommand(1);

  std::vector<std::string> manifests;
  bool no_check = false;
  auto* build = dataset->add_subcommand(
      "build", "normalize and label manifest rows into a dataset CSV");
  build->add_option("--manifest", manifests,
                    "manifest CSV (image_path,source,valence_raw,arousal_raw)")
      ->required()
      ->delimiter(',');
  build->add_flag("--no-check-files", no_check,
                  "skip image existence checks");
  build->callback([&] { rc = cmd_dataset_build(g, manifests, no_check); });

  std::string aug_dataset_csv;
  auto* augment = dataset->add_subcommand(
      "augment", "expand a dataset eightfold with label-preserving variants");
  augment->add_option("--dataset", aug_dataset_csv, "dataset CSV")->required();
  augment->callback([&] { rc = cmd_dataset_augment(g, aug_dataset_csv); });

  int fx_count = 1000;
  std::string fx_style = "circumplex";
  int fx_size = 64;
  auto* fixture = dataset->add_subcommand(
      "fixture", "generate a synthetic affective image corpus");
  fixture->add_option("--count", fx_count, "number of images")
      ->capture_default_str();
  fixture->add_option("--style", fx_style, "circumplex or separable13")
      ->capture_default_str();
  fixture->add_option("--image-size", fx_size, "square image size")
      ->capture_default_str();
  fixture->callback(
      [&] { rc = cmd_dataset_fixture(g, fx_count, fx_style, fx_size); });

  auto* tr = app.add_subcommand("train", "train one GAN configuration");
  std::string tr_dataset;
  tr->add_option("--dataset", tr_dataset, "dataset CSV")->required();
  std::string tr_family, tr_variant;
  int tr_epochs = 0, tr_batch = 0, tr_eval_every = 0, tr_metric_batch = 0;
  int tr_critic = 0, tr_latent = 0, tr_size = 0, tr_width = 0;
  double tr_lr_g = 0, tr_lr_d = 0, tr_real_label = 0, tr_gp = 0;
  auto* o_family = tr->add_option("--family", tr_family,
                                  "dcgan, cgan, acgan, pagan or wgan_gp");
  auto* o_variant =
      tr->add_option("--variant", tr_variant, "bn, dropout or sn");
  auto* o_epochs = tr->add_option("--epochs", tr_epochs, "training epochs");
  auto* o_batch = tr->add_option("--batch-size", tr_batch, "batch size");
  auto* o_lr_g = tr->add_option("--lr-g", tr_lr_g, "generator Adam lr");
  auto* o_lr_d = tr->add_option("--lr-d", tr_lr_d, "discriminator Adam lr");
  auto* o_real_label =
      tr->add_option("--real-label", tr_real_label, "smoothed real target");
  auto* o_gp = tr->add_option("--gp-lambda", tr_gp, "gradient penalty weight");
  auto* o_critic =
      tr->add_option("--critic-steps", tr_critic, "critic updates per step");
  auto* o_eval_every =
      tr->add_option("--eval-every", tr_eval_every, "epochs between evals");
  auto* o_metric_batch = tr->add_option("--metric-batch", tr_metric_batch,
                                        "samples per FID/KID eval");
  auto* o_latent = tr->add_option("--latent-dim", tr_latent, "latent size");
  auto* o_size = tr->add_option("--image-size", tr_size, "square image size");
  auto* o_width =
      tr->add_option("--base-width", tr_width, "first conv width");
  tr->callback([&] {
    IniConfig c = load_config(g);
    gan::ModelSpec spec = model_spec_from(c);
    if (o_family->count()) spec.family = gan::family_from_string(tr_family);
    if (o_variant->count())
      spec.disc_variant = gan::variant_from_string(tr_variant);
    if (o_latent->count()) spec.latent_dim = tr_latent;
    if (o_size->count()) spec.image_size = tr_size;
    if (o_width->count()) spec.base_width = tr_width;
    train::TrainConfig cfg = train_config_from(c, g.seed);
    if (o_epochs->count()) cfg.epochs = tr_epochs;
    if (o_batch->count()) cfg.batch_size = tr_batch;
    if (o_lr_g->count()) cfg.lr_g = float(tr_lr_g);
    if (o_lr_d->count()) cfg.lr_d = float(tr_lr_d);
    if (o_real_label->count()) cfg.real_label = float(tr_real_label);
    if (o_gp->count()) cfg.gp_lambda = float(tr_gp);
    if (o_critic->count()) cfg.critic_steps = tr_critic;
    if (o_eval_every->count()) cfg.eval_every_epochs = tr_eval_every;
    if (o_metric_batch->count()) cfg.metric_batch = tr_metric_batch;
    rc = cmd_train(g, tr_dataset, spec, cfg);
  });

  auto* gr = app.add_subcommand("grid", "run the ablation grid");
  std::vector<std::string> gr_datasets, gr_models;
  int gr_workers = 1;
  int gr_epochs = 0, gr_eval_every = 0, gr_metric_batch = 0, gr_batch = 0;
  gr->add_option("--dataset", gr_datasets, "dataset CSV (repeatable)")
      ->required()
      ->delimiter(',');
  gr->add_option("--models", gr_models,
                 "model ids like dcgan_bn (default: full roster)")
      ->delimiter(',');
  gr->add_option("--workers", gr_workers, "worker pool size")
      ->capture_default_str();
  auto* go_epochs = gr->add_option("--epochs", gr_epochs, "epochs per cell");
  auto* go_batch = gr->add_option("--batch-size", gr_batch, "batch size");
  auto* go_eval_every =
      gr->add_option("--eval-every", gr_eval_every, "epochs between evals");
  auto* go_metric_batch = gr->add_option("--metric-batch", gr_metric_batch,
                                         "samples per FID/KID eval");
  gr->callback([&] {
    IniConfig c = load_config(g);
    gan::ModelSpec base_spec = model_spec_from(c);
    train::TrainConfig cfg = train_config_from(c, g.seed);
    if (go_epochs->count()) cfg.epochs = gr_epochs;
    if (go_batch->count()) cfg.batch_size = gr_batch;
    if (go_eval_every->count()) cfg.eval_every_epochs = gr_eval_every;
    if (go_metric_batch->count()) cfg.metric_batch = gr_metric_batch;
    gr_workers = int(c.get_int("grid", "workers", gr_workers));
    rc = cmd_grid(g, gr_datasets, gr_models, gr_workers, base_spec, cfg);
  });

  auto* rp = app.add_subcommand("report", "render plots and tables from a grid");
  std::string rp_grid;
  rp->add_option("--grid", rp_grid, "grid output directory")->required();
  rp->callback([&] { rc = cmd_report(g, rp_grid); });

  auto* cl = app.add_subcommand("classify",
                                "fine-tune a pretrained backbone on categories");
  std::string cl_dataset, cl_backbone = "resnet18", cl_weights;
  std::string cl_weights_dir = "weights", cl_freeze;
  int cl_epochs = 0, cl_batch = 0;
  double cl_lr = 0, cl_fraction = 0;
  cl->add_option("--dataset", cl_dataset, "dataset CSV")->required();
  cl->add_option("--backbone", cl_backbone,
                 "resnet18, resnet152, vgg19, efficientnet_b7")
      ->capture_default_str();
  cl->add_option("--weights", cl_weights, "weights bundle path (overrides preset)");
  cl->add_option("--weights-dir", cl_weights_dir, "preset weights directory")
      ->capture_default_str();
  cl->add_option("--freeze", cl_freeze, "head or full");
  auto* co_epochs = cl->add_option("--epochs", cl_epochs, "fine-tune epochs");
  auto* co_batch = cl->add_option("--batch-size", cl_batch, "batch size");
  auto* co_lr = cl->add_option("--lr", cl_lr, "Adam learning rate");
  auto* co_fraction =
      cl->add_option("--train-fraction", cl_fraction, "train split fraction");
  cl->callback([&] {
    IniConfig c = load_config(g);
    classify::FineTuneConfig cfg;
    cfg.epochs = int(c.get_int("classify", "epochs", cfg.epochs));
    cfg.batch_size = int(c.get_int("classify", "batch_size", cfg.batch_size));
    cfg.lr = float(c.get_real("classify", "lr", cfg.lr));
    cfg.train_fraction =
        c.get_real("classify", "train_fraction", cfg.train_fraction);
    cfg.seed = g.seed;
    if (co_epochs->count()) cfg.epochs = cl_epochs;
    if (co_batch->count()) cfg.batch_size = cl_batch;
    if (co_lr->count()) cfg.lr = float(cl_lr);
    if (co_fraction->count()) cfg.train_fraction = cl_fraction;
    rc = cmd_classify(g, cl_dataset, cl_backbone, cl_weights, cl_weights_dir,
                      cl_freeze, cfg);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
