#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace affgan {

/// 8-bit RGB image, row-major HWC. The interchange type between disk,
/// the augmentation pipeline, and tensor conversion.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<uint8_t> pixels;  // height * width * channels

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), pixels(size_t(w) * h * c, 0) {}

  uint8_t& at(int y, int x, int c) { return pixels[(size_t(y) * width + x) * channels + c]; }
  uint8_t at(int y, int x, int c) const { return pixels[(size_t(y) * width + x) * channels + c]; }
  bool empty() const { return width <= 0 || height <= 0 || pixels.empty(); }
};

Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);

/// Bilinear resample to (out_w, out_h), align-corners=false convention.
Image resize_bilinear(const Image& img, int out_w, int out_h);

}  // namespace affgan
