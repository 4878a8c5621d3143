#include "affgan/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "affgan/core/error.hpp"

namespace fs = std::filesystem;

namespace affgan::aug {

namespace {

Image convolve3x3(const Image& img, const int kernel[9], int divisor) {
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        long sum = 0;
        for (int ky = -1; ky <= 1; ++ky) {
          const int sy = std::clamp(y + ky, 0, img.height - 1);
          for (int kx = -1; kx <= 1; ++kx) {
            const int sx = std::clamp(x + kx, 0, img.width - 1);
            sum += long(kernel[(ky + 1) * 3 + (kx + 1)]) * img.at(sy, sx, c);
          }
        }
        const long v = std::lround(double(sum) / divisor);
        out.at(y, x, c) = uint8_t(std::clamp(v, 0l, 255l));
      }
    }
  }
  return out;
}

Image scale_brightness(const Image& img, double factor) {
  Image out(img.width, img.height, img.channels);
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const long v = std::lround(img.pixels[i] * factor);
    out.pixels[i] = uint8_t(std::clamp(v, 0l, 255l));
  }
  return out;
}

// Counterclockwise quarter turns; pure index permutations.
Image rotate(const Image& img, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0) return img;
  const bool swap = (q == 1 || q == 3);
  Image out(swap ? img.height : img.width, swap ? img.width : img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int ny = 0, nx = 0;
      if (q == 1) {        // CCW: (x, y) -> (y' = W-1-x, x' = y)
        ny = img.width - 1 - x;
        nx = y;
      } else if (q == 2) {
        ny = img.height - 1 - y;
        nx = img.width - 1 - x;
      } else {             // q == 3, clockwise quarter
        ny = x;
        nx = img.height - 1 - y;
      }
      for (int c = 0; c < img.channels; ++c) out.at(ny, nx, c) = img.at(y, x, c);
    }
  }
  return out;
}

}  // namespace

const char* op_name(AugKind kind) {
  switch (kind) {
    case AugKind::Detail: return "detail";
    case AugKind::EdgeEnhance: return "edge";
    case AugKind::Brighten: return "bright";
    case AugKind::Darken: return "dark";
    case AugKind::Rotate90: return "rot90";
    case AugKind::Rotate180: return "rot180";
    case AugKind::Rotate270: return "rot270";
  }
  return "?";
}

double op_parameter(AugKind kind) {
  if (kind == AugKind::Brighten) return 1.2;
  if (kind == AugKind::Darken) return 0.9;
  return 0.0;
}

Image augment_image(const Image& img, AugKind kind) {
  if (img.empty()) throw ValidationError("augment: zero-sized image");
  static const int kDetail[9] = {0, -1, 0, -1, 10, -1, 0, -1, 0};
  static const int kEdge[9] = {-1, -1, -1, -1, 10, -1, -1, -1, -1};
  switch (kind) {
    case AugKind::Detail: return convolve3x3(img, kDetail, 6);
    case AugKind::EdgeEnhance: return convolve3x3(img, kEdge, 2);
    case AugKind::Brighten: return scale_brightness(img, 1.2);
    case AugKind::Darken: return scale_brightness(img, 0.9);
    case AugKind::Rotate90: return rotate(img, 1);
    case AugKind::Rotate180: return rotate(img, 2);
    case AugKind::Rotate270: return rotate(img, 3);
  }
  throw ValidationError("augment: unknown op");
}

std::string augmented_name(const std::string& source_path, AugKind kind) {
  const fs::path p(source_path);
  return p.stem().string() + "__" + op_name(kind) + ".png";
}

AugmentResult augment_dataset(const data::AffectiveDataset& ds, const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(msg("augment: cannot create ", out_dir, ": ", ec.message()));

  // Check readability up front so a failure aborts before partial output.
  std::vector<std::string> unreadable;
  for (const auto& rec : ds.records) {
    if (!fs::exists(rec.image_path)) unreadable.push_back(rec.image_path);
  }
  if (!unreadable.empty()) {
    std::ostringstream os;
    os << "augment: " << unreadable.size() << " unreadable image(s):";
    for (const auto& p : unreadable) os << "\n  " << p;
    throw IoError(os.str());
  }

  AugmentResult result;
  result.dataset.category_map = ds.category_map;
  for (const auto& rec : ds.records) {
    result.dataset.records.push_back(rec);
    result.dataset.provenance[rec.source]++;
    const Image src = load_png(rec.image_path);
    for (AugKind kind : kAllAugKinds) {
      const Image variant = augment_image(src, kind);
      const std::string out_path = (fs::path(out_dir) / augmented_name(rec.image_path, kind)).string();
      save_png(out_path, variant);
      result.images_written++;
      data::AffectiveRecord copy = rec;  // labels preserved verbatim
      copy.image_path = out_path;
      result.dataset.records.push_back(std::move(copy));
      result.dataset.provenance[rec.source]++;
    }
  }
  return result;
}

}  // namespace affgan::aug
