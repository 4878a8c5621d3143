#include "affgan/data/imageset.hpp"

#include <algorithm>

#include "affgan/core/error.hpp"
#include "affgan/core/hash.hpp"
#include "affgan/core/image.hpp"

namespace affgan::data {

ImageSet load_image_set(const AffectiveDataset& ds, int image_size,
                        const std::string& id) {
  if (ds.records.empty()) {
    throw ValidationError("cannot load an empty dataset");
  }
  const std::vector<std::string> cats = ds.category_map.all_categories();
  ImageSet set;
  set.id = id;
  set.categories = cats;
  set.content_hash = git_blob_sha1(dataset_csv_string(ds));
  const int n = int(ds.records.size());
  const int64_t block = int64_t(3) * image_size * image_size;
  set.images = nn::Tensor({n, 3, image_size, image_size});
  set.labels.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    const AffectiveRecord& rec = ds.records[size_t(i)];
    Image img = load_png(rec.image_path);
    if (img.width != image_size || img.height != image_size) {
      img = resize_bilinear(img, image_size, image_size);
    }
    float* dst = set.images.data() + int64_t(i) * block;
    const int64_t plane = int64_t(image_size) * image_size;
    for (int y = 0; y < image_size; ++y) {
      for (int x = 0; x < image_size; ++x) {
        for (int c = 0; c < 3; ++c) {
          dst[c * plane + y * image_size + x] =
              float(img.at(y, x, c)) / 127.5f - 1.0f;
        }
      }
    }
    const auto it = std::find(cats.begin(), cats.end(), rec.category);
    if (it == cats.end()) {
      throw ValidationError(msg("record '", rec.image_path,
                                "' has unknown category '", rec.category, "'"));
    }
    set.labels[size_t(i)] = int(it - cats.begin());
  }
  return set;
}

}  // namespace affgan::data
