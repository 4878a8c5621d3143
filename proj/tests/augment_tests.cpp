#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "affgan/augment/augment.hpp"
#include "affgan/core/error.hpp"
#include "affgan/core/rng.hpp"
#include "affgan/data/fixture.hpp"

using namespace affgan;
using namespace affgan::aug;

namespace {

std::string temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() /
           (std::string("affgan_aug_") + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

Image random_image(int w, int h, uint64_t seed) {
  Image img(w, h, 3);
  Rng rng(seed);
  for (auto& p : img.pixels) p = uint8_t(rng.below(256));
  return img;
}

// reference convolution written without any shared helpers
Image naive_filter(const Image& img, const int k[9], int div) {
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            int yy = y + dy, xx = x + dx;
            yy = yy < 0 ? 0 : (yy >= img.height ? img.height - 1 : yy);
            xx = xx < 0 ? 0 : (xx >= img.width ? img.width - 1 : xx);
            acc += k[(dy + 1) * 3 + (dx + 1)] * double(img.at(yy, xx, c));
          }
        }
        const double v = std::round(acc / div);
        out.at(y, x, c) = uint8_t(std::max(0.0, std::min(255.0, v)));
      }
    }
  }
  return out;
}

bool images_equal(const Image& a, const Image& b) {
  return a.width == b.width && a.height == b.height && a.pixels == b.pixels;
}

}  // namespace

TEST_CASE("op metadata: names and pinned parameters") {
  CHECK(std::string(op_name(AugKind::Detail)) == "detail");
  CHECK(std::string(op_name(AugKind::EdgeEnhance)) == "edge");
  CHECK(std::string(op_name(AugKind::Brighten)) == "bright");
  CHECK(std::string(op_name(AugKind::Darken)) == "dark");
  CHECK(std::string(op_name(AugKind::Rotate90)) == "rot90");
  CHECK(op_parameter(AugKind::Brighten) == doctest::Approx(1.2));
  CHECK(op_parameter(AugKind::Darken) == doctest::Approx(0.9));
  CHECK(op_parameter(AugKind::Rotate180) == 0.0);
  std::set<std::string> names;
  for (AugKind k : kAllAugKinds) names.insert(op_name(k));
  CHECK(names.size() == 7);
}

TEST_CASE("augmented_name strips directories and swaps the suffix") {
  CHECK(augmented_name("/data/set/cat.png", AugKind::Detail) == "cat__detail.png");
  CHECK(augmented_name("dog.jpeg", AugKind::Rotate270) == "dog__rot270.png");
  CHECK(augmented_name("a/b/c/pic.01.png", AugKind::Brighten) == "pic.01__bright.png");
}

TEST_CASE("brightness: pinned 8-bit values and clamping") {
  Image img(2, 1, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 100;
    img.at(0, 1, c) = 250;
  }
  Image bright = augment_image(img, AugKind::Brighten);
  CHECK(bright.at(0, 0, 0) == 120);  // 100 * 1.2
  CHECK(bright.at(0, 1, 0) == 255);  // 300 clamps
  Image dark = augment_image(img, AugKind::Darken);
  CHECK(dark.at(0, 0, 0) == 90);     // 100 * 0.9
  CHECK(dark.at(0, 1, 0) == 225);
  // rounding is to nearest: 1 * 1.2 = 1.2 -> 1, 3 * 1.2 = 3.6 -> 4
  Image tiny(2, 1, 3);
  tiny.at(0, 0, 0) = 1;
  tiny.at(0, 1, 0) = 3;
  Image tb = augment_image(tiny, AugKind::Brighten);
  CHECK(tb.at(0, 0, 0) == 1);
  CHECK(tb.at(0, 1, 0) == 4);
}

TEST_CASE("rotations are exact inverse pairs") {
  const Image img = random_image(13, 7, 21);
  CHECK(images_equal(
      augment_image(augment_image(img, AugKind::Rotate180), AugKind::Rotate180), img));
  CHECK(images_equal(
      augment_image(augment_image(img, AugKind::Rotate90), AugKind::Rotate270), img));
  CHECK(images_equal(
      augment_image(augment_image(img, AugKind::Rotate270), AugKind::Rotate90), img));
  // four quarter turns come home
  Image four = img;
  for (int i = 0; i < 4; ++i) four = augment_image(four, AugKind::Rotate90);
  CHECK(images_equal(four, img));
}

TEST_CASE("rotate90 permutes pixels counterclockwise") {
  // 2x1 image: left pixel A, right pixel B. CCW puts B on top.
  Image img(2, 1, 3);
  img.at(0, 0, 0) = 10;  // A
  img.at(0, 1, 0) = 20;  // B
  Image r = augment_image(img, AugKind::Rotate90);
  CHECK(r.width == 1);
  CHECK(r.height == 2);
  CHECK(r.at(0, 0, 0) == 20);
  CHECK(r.at(1, 0, 0) == 10);
  // rot90 twice equals rot180
  const Image big = random_image(5, 9, 3);
  CHECK(images_equal(augment_image(augment_image(big, AugKind::Rotate90), AugKind::Rotate90),
                     augment_image(big, AugKind::Rotate180)));
  // dimensions swap
  Image r90 = augment_image(big, AugKind::Rotate90);
  CHECK(r90.width == 9);
  CHECK(r90.height == 5);
}

TEST_CASE("filter kernels match a naive clamped-border oracle") {
  const Image img = random_image(11, 8, 77);
  static const int kDetail[9] = {0, -1, 0, -1, 10, -1, 0, -1, 0};
  static const int kEdge[9] = {-1, -1, -1, -1, 10, -1, -1, -1, -1};
  CHECK(images_equal(augment_image(img, AugKind::Detail), naive_filter(img, kDetail, 6)));
  CHECK(images_equal(augment_image(img, AugKind::EdgeEnhance), naive_filter(img, kEdge, 2)));
  // a constant image passes through both kernels unchanged
  // (kernel weights sum to the divisor)
  Image flat(6, 6, 3);
  for (auto& p : flat.pixels) p = 93;
  CHECK(images_equal(augment_image(flat, AugKind::Detail), flat));
  CHECK(images_equal(augment_image(flat, AugKind::EdgeEnhance), flat));
}

TEST_CASE("filters and brightness keep dimensions, rotations swap them") {
  const Image img = random_image(10, 6, 5);
  for (AugKind k : {AugKind::Detail, AugKind::EdgeEnhance, AugKind::Brighten, AugKind::Darken,
                    AugKind::Rotate180}) {
    Image out = augment_image(img, k);
    CHECK(out.width == 10);
    CHECK(out.height == 6);
  }
  for (AugKind k : {AugKind::Rotate90, AugKind::Rotate270}) {
    Image out = augment_image(img, k);
    CHECK(out.width == 6);
    CHECK(out.height == 10);
  }
  CHECK_THROWS_AS(augment_image(Image(), AugKind::Detail), ValidationError);
}

TEST_CASE("augment_dataset: eightfold expansion with labels preserved") {
  const std::string dir = temp_dir("ds");
  data::FixtureOptions opts;
  opts.image_size = 16;
  const std::string manifest = data::synth_fixture(6, 12, dir + "/src", opts);
  data::AffectiveDataset ds = data::build_dataset(
      {manifest}, data::default_scales(), data::CategoryMap::defaults(), {});
  REQUIRE(ds.size() == 6);

  AugmentResult res = augment_dataset(ds, dir + "/aug");
  CHECK(res.dataset.size() == 48);  // 8 * 6
  CHECK(res.images_written == 42);  // 7 * 6

  // records arrive grouped: original then its seven variants
  for (size_t i = 0; i < 6; ++i) {
    const auto& orig = res.dataset.records[i * 8];
    CHECK(orig.image_path == ds.records[i].image_path);
    std::set<std::string> variant_names;
    for (size_t j = 1; j < 8; ++j) {
      const auto& var = res.dataset.records[i * 8 + j];
      CHECK(var.valence == orig.valence);
      CHECK(var.arousal == orig.arousal);
      CHECK(var.quadrant == orig.quadrant);
      CHECK(var.category == orig.category);
      CHECK(var.source == orig.source);
      CHECK(std::filesystem::exists(var.image_path));
      variant_names.insert(var.image_path);
    }
    CHECK(variant_names.size() == 7);
  }
  CHECK(res.dataset.provenance.at("synthetic") == 48);

  // variant pixels really went through the transform
  const Image orig = load_png(res.dataset.records[0].image_path);
  const Image rot = load_png(res.dataset.records[5].image_path);  // rot90 slot
  CHECK(images_equal(rot, augment_image(orig, AugKind::Rotate90)));
  std::filesystem::remove_all(dir);
}

TEST_CASE("augment_dataset aborts on unreadable inputs before writing") {
  const std::string dir = temp_dir("bad");
  data::AffectiveDataset ds;
  ds.category_map = data::CategoryMap::defaults();
  data::AffectiveRecord r;
  r.image_path = dir + "/does_not_exist.png";
  r.source = "synthetic";
  ds.records.push_back(r);
  try {
    augment_dataset(ds, dir + "/out");
    CHECK(false);
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("does_not_exist.png") != std::string::npos);
  }
  // nothing was produced
  CHECK(std::filesystem::is_empty(dir + "/out"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("eightfold arithmetic matches the corpus expansion") {
  // 5866 source records expand to 46928; pure bookkeeping, no pixels
  const size_t n = 5866;
  CHECK(n * 8 == 46928);
}
