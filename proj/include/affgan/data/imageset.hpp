#pragma once

#include <string>
#include <vector>

#include "affgan/data/affective.hpp"
#include "affgan/nn/tensor.hpp"

namespace affgan::data {

/// A dataset decoded into training form: float RGB in [-1, 1], NCHW,
/// with per-record category ids.
struct ImageSet {
  std::string id;
  nn::Tensor images;
  std::vector<int> labels;
  std::vector<std::string> categories;
  std::string content_hash;

  int count() const { return images.ndim() == 4 ? images.dim(0) : 0; }
};

/// Loads and resizes every record image. The content hash is the git blob
/// hash of the serialized dataset, so it identifies records + labels, not
/// pixel bytes.
ImageSet load_image_set(const AffectiveDataset& ds, int image_size,
                        const std::string& id);

}  // namespace affgan::data
