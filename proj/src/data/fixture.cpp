#include "affgan/data/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "affgan/core/csv.hpp"
#include "affgan/core/error.hpp"
#include "affgan/core/image.hpp"
#include "affgan/core/rng.hpp"
#include "affgan/data/affective.hpp"

namespace fs = std::filesystem;

namespace affgan::data {

namespace {

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  const double c = v * s;
  const double x = c * (1.0 - std::fabs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  if (h < 60) { r = c; g = x; }
  else if (h < 120) { r = x; g = c; }
  else if (h < 180) { g = c; b = x; }
  else if (h < 240) { g = x; b = c; }
  else if (h < 300) { r = x; b = c; }
  else { r = c; b = x; }
  rgb[0] = r + m;
  rgb[1] = g + m;
  rgb[2] = b + m;
}

uint8_t to_byte(double v01) {
  return uint8_t(std::clamp(std::lround(v01 * 255.0), 0l, 255l));
}

Image render_field(int size, double valence, double arousal, Rng& rng) {
  // Hue follows valence, gradient amplitude (contrast) follows arousal.
  const double hue = (valence + 1.0) * 0.5 * 300.0;
  const double amp = 0.10 + 0.38 * (arousal + 1.0) * 0.5;
  const double theta = rng.uniform(0.0, 6.2831853071795864769);
  const double freq = rng.uniform(0.8, 2.2);
  const double phase = rng.uniform(0.0, 6.2831853071795864769);
  const double dx = std::cos(theta), dy = std::sin(theta);

  Image img(size, size, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (double(x) / size - 0.5) * dx + (double(y) / size - 0.5) * dy;
      const double wave = std::sin(freq * 6.2831853071795864769 * u + phase);
      const double value = std::clamp(0.55 + amp * wave, 0.02, 0.98);
      const double sat = std::clamp(0.75 + 0.2 * valence, 0.05, 1.0);
      double rgb[3];
      hsv_to_rgb(hue, sat, value, rgb);
      img.at(y, x, 0) = to_byte(rgb[0]);
      img.at(y, x, 1) = to_byte(rgb[1]);
      img.at(y, x, 2) = to_byte(rgb[2]);
    }
  }
  return img;
}

Image render_class_block(int size, int cls, Rng& rng) {
  // One saturated, well-separated color per class plus low pixel noise.
  const double hue = 360.0 * double(cls) / 13.0;
  double rgb[3];
  hsv_to_rgb(hue, 0.95, 0.8, rgb);
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double noisy = rgb[c] + 0.03 * rng.normal();
        img.at(y, x, c) = to_byte(std::clamp(noisy, 0.0, 1.0));
      }
    }
  }
  return img;
}

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string synth_fixture(int n, uint64_t seed, const std::string& out_dir,
                          const FixtureOptions& opts) {
  if (n <= 0) throw ValidationError(msg("fixture: n must be positive, got ", n));
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) throw IoError(msg("fixture: cannot create ", out_dir, ": ", ec.message()));

  const CategoryMap cmap = CategoryMap::defaults();
  Rng rng = Rng::stream(seed, "synth-fixture");
  csv::Table manifest;
  manifest.header = {"image_path", "source", "valence_raw", "arousal_raw"};

  for (int i = 0; i < n; ++i) {
    double v, a;
    Image img;
    if (opts.style == FixtureOptions::Style::Separable13) {
      const int cls = i % 13;
      if (cls == 12) {  // Neutral disk center
        v = 0.0;
        a = 0.0;
      } else {  // sector center at radius 0.7
        const double deg = 30.0 * cls + 15.0;
        const double rad = deg * 3.14159265358979323846 / 180.0;
        v = 0.7 * std::cos(rad);
        a = 0.7 * std::sin(rad);
      }
      img = render_class_block(opts.image_size, cls, rng);
    } else {
      v = rng.uniform(-1.0, 1.0);
      a = rng.uniform(-1.0, 1.0);
      img = render_field(opts.image_size, v, a, rng);
    }
    char name[64];
    std::snprintf(name, sizeof(name), "img_%06d.png", i);
    const std::string path = (fs::path(out_dir) / "images" / name).string();
    save_png(path, img);
    manifest.rows.push_back({path, "synthetic", fmt_real(v), fmt_real(a)});
  }

  const std::string manifest_path = (fs::path(out_dir) / "manifest.csv").string();
  csv::write_file(manifest_path, manifest);
  return manifest_path;
}

}  // namespace affgan::data
