#pragma once

#include <string>
#include <vector>

#include "affgan/core/image.hpp"
#include "affgan/data/affective.hpp"

namespace affgan::aug {

/// The seven label-preserving transforms. Brighten/Darken factors are the
/// pinned 1.2 / 0.9; the filter kernels are fixed 3x3 convolutions
/// (integer kernel over divisor, clamped-edge borders):
///   Detail:      [0 -1 0; -1 10 -1; 0 -1 0] / 6
///   EdgeEnhance: [-1 -1 -1; -1 10 -1; -1 -1 -1] / 2
enum class AugKind { Detail, EdgeEnhance, Brighten, Darken, Rotate90, Rotate180, Rotate270 };

inline constexpr AugKind kAllAugKinds[7] = {
    AugKind::Detail,   AugKind::EdgeEnhance, AugKind::Brighten, AugKind::Darken,
    AugKind::Rotate90, AugKind::Rotate180,   AugKind::Rotate270};

const char* op_name(AugKind kind);
double op_parameter(AugKind kind);  // 1.2 / 0.9 for brightness, 0 otherwise

/// Applies one transform. Filters and brightness keep dimensions;
/// Rotate90/270 swap width and height. Rotations are exact pixel
/// permutations (90 degrees counterclockwise).
Image augment_image(const Image& img, AugKind kind);

/// Output file name for a variant: `<stem>__<opname>.png`.
std::string augmented_name(const std::string& source_path, AugKind kind);

struct AugmentResult {
  data::AffectiveDataset dataset;  // 8N records: originals + 7 variants each
  size_t images_written = 0;
};

/// Expands the dataset eightfold, writing variant images under out_dir.
/// Every variant keeps the source record's labels. Unreadable inputs
/// abort with the full path list.
AugmentResult augment_dataset(const data::AffectiveDataset& ds, const std::string& out_dir);

}  // namespace affgan::aug
