#pragma once

#include <string>
#include <utility>
#include <vector>

#include "affgan/nn/layers.hpp"

namespace affgan::nn {

struct BundleTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

/// Container behind the .afnb weight files: ordered string metadata plus
/// named float32 tensors, crc32-protected on disk.
struct Bundle {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<BundleTensor> tensors;

  const std::string* find_meta(const std::string& key) const;
  const std::string& require_meta(const std::string& key) const;
  void set_meta(const std::string& key, const std::string& value);
  const BundleTensor* find_tensor(const std::string& name) const;
  void add_tensor(const std::string& name, std::vector<int> shape,
                  const float* data, int64_t count);
};

void write_bundle(const std::string& path, const Bundle& bundle);
/// Throws IoError when the file cannot be read, IntegrityError on bad
/// magic, unsupported version, truncation, or checksum mismatch.
Bundle read_bundle(const std::string& path);

/// Stores every param as "<prefix><param name>" (value only, or value plus
/// ".m"/".v" Adam moments).
void bundle_put_params(Bundle& bundle, const std::string& prefix,
                       const std::vector<Param*>& params, bool with_moments);
/// Restores params by name; missing tensors or shape mismatches raise
/// IntegrityError.
void bundle_get_params(const Bundle& bundle, const std::string& prefix,
                       const std::vector<Param*>& params, bool with_moments);

}  // namespace affgan::nn
