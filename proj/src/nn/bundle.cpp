#include "affgan/nn/bundle.hpp"

#include <cstring>
#include <fstream>

#include "affgan/core/error.hpp"
#include "affgan/core/hash.hpp"

namespace affgan::nn {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'N', 'B'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& buf, uint32_t v) {
  buf.append(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::string& buf, uint64_t v) {
  buf.append(reinterpret_cast<const char*>(&v), 8);
}
void put_str(std::string& buf, const std::string& s) {
  put_u32(buf, uint32_t(s.size()));
  buf.append(s);
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& path)
      : buf_(buf), path_(path) {}

  uint32_t u32() {
    uint32_t v;
    copy(&v, 4);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    copy(&v, 8);
    return v;
  }
  std::string str() {
    uint32_t len = u32();
    need(len);
    std::string s(buf_.data() + pos_, len);
    pos_ += len;
    return s;
  }
  void floats(float* dst, uint64_t count) {
    need(count * 4);
    std::memcpy(dst, buf_.data() + pos_, count * 4);
    pos_ += count * 4;
  }
  size_t pos() const { return pos_; }

 private:
  void need(uint64_t n) {
    if (pos_ + n > buf_.size()) {
      throw IntegrityError(msg("truncated bundle: ", path_));
    }
  }
  void copy(void* dst, uint64_t n) {
    need(n);
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }

  const std::string& buf_;
  const std::string& path_;
  size_t pos_ = 0;
};

}  // namespace

const std::string* Bundle::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string& Bundle::require_meta(const std::string& key) const {
  const std::string* v = find_meta(key);
  if (v == nullptr) {
    throw IntegrityError(msg("bundle is missing required metadata '", key, "'"));
  }
  return *v;
}

void Bundle::set_meta(const std::string& key, const std::string& value) {
  for (auto& [k, v] : meta) {
    if (k == key) {
      v = value;
      return;
    }
  }
  meta.emplace_back(key, value);
}

const BundleTensor* Bundle::find_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void Bundle::add_tensor(const std::string& name, std::vector<int> shape,
                        const float* data, int64_t count) {
  BundleTensor t;
  t.name = name;
  t.shape = std::move(shape);
  t.data.assign(data, data + count);
  tensors.push_back(std::move(t));
}

void write_bundle(const std::string& path, const Bundle& bundle) {
  std::string body;
  put_u32(body, uint32_t(bundle.meta.size()));
  for (const auto& [k, v] : bundle.meta) {
    put_str(body, k);
    put_str(body, v);
  }
  put_u32(body, uint32_t(bundle.tensors.size()));
  for (const auto& t : bundle.tensors) {
    put_str(body, t.name);
    put_u32(body, uint32_t(t.shape.size()));
    for (int d : t.shape) put_u32(body, uint32_t(d));
    put_u64(body, uint64_t(t.data.size()));
    body.append(reinterpret_cast<const char*>(t.data.data()),
                t.data.size() * 4);
  }
  const uint32_t crc = crc32_bytes(body.data(), body.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(msg("cannot open for writing: ", path));
  out.write(kMagic, 4);
  uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(body.data(), std::streamsize(body.size()));
  out.write(reinterpret_cast<const char*>(&crc), 4);
  if (!out) throw IoError(msg("write failed: ", path));
}

Bundle read_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(msg("cannot open: ", path));
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (raw.size() < 12) throw IntegrityError(msg("truncated bundle: ", path));
  if (std::memcmp(raw.data(), kMagic, 4) != 0) {
    throw IntegrityError(msg("not a weights bundle: ", path));
  }
  uint32_t version;
  std::memcpy(&version, raw.data() + 4, 4);
  if (version != kVersion) {
    throw IntegrityError(msg("unsupported bundle version ", version, ": ", path));
  }
  const size_t body_len = raw.size() - 12;
  uint32_t stored_crc;
  std::memcpy(&stored_crc, raw.data() + 8 + body_len, 4);
  const uint32_t crc = crc32_bytes(raw.data() + 8, body_len);
  if (crc != stored_crc) {
    throw IntegrityError(msg("checksum mismatch, bundle is corrupt: ", path));
  }

  std::string body = raw.substr(8, body_len);
  Reader r(body, path);
  Bundle bundle;
  const uint32_t meta_count = r.u32();
  for (uint32_t i = 0; i < meta_count; ++i) {
    std::string k = r.str();
    std::string v = r.str();
    bundle.meta.emplace_back(std::move(k), std::move(v));
  }
  const uint32_t tensor_count = r.u32();
  for (uint32_t i = 0; i < tensor_count; ++i) {
    BundleTensor t;
    t.name = r.str();
    const uint32_t ndim = r.u32();
    for (uint32_t d = 0; d < ndim; ++d) t.shape.push_back(int(r.u32()));
    const uint64_t count = r.u64();
    int64_t expect = 1;
    for (int d : t.shape) expect *= d;
    if (ndim > 0 && uint64_t(expect) != count) {
      throw IntegrityError(msg("tensor '", t.name, "' shape/count mismatch: ",
                               path));
    }
    t.data.resize(count);
    r.floats(t.data.data(), count);
    bundle.tensors.push_back(std::move(t));
  }
  return bundle;
}

namespace {

void put_matrix(Bundle& bundle, const std::string& name,
                const Eigen::MatrixXf& m) {
  bundle.add_tensor(name, {int(m.rows()), int(m.cols())}, m.data(), m.size());
}

void get_matrix(const Bundle& bundle, const std::string& name,
                Eigen::MatrixXf& m) {
  const BundleTensor* t = bundle.find_tensor(name);
  if (t == nullptr) {
    throw IntegrityError(msg("bundle has no tensor '", name, "'"));
  }
  if (t->shape.size() != 2 || t->shape[0] != m.rows() ||
      t->shape[1] != m.cols()) {
    throw IntegrityError(msg("tensor '", name, "' has shape ",
                             t->shape.empty() ? 0 : t->shape[0], "x",
                             t->shape.size() < 2 ? 0 : t->shape[1],
                             ", expected ", m.rows(), "x", m.cols()));
  }
  std::memcpy(m.data(), t->data.data(), t->data.size() * 4);
}

}  // namespace

void bundle_put_params(Bundle& bundle, const std::string& prefix,
                       const std::vector<Param*>& params, bool with_moments) {
  for (const Param* p : params) {
    put_matrix(bundle, prefix + p->name, p->value);
    if (with_moments) {
      put_matrix(bundle, prefix + p->name + ".m", p->adam_m);
      put_matrix(bundle, prefix + p->name + ".v", p->adam_v);
    }
  }
}

void bundle_get_params(const Bundle& bundle, const std::string& prefix,
                       const std::vector<Param*>& params, bool with_moments) {
  for (Param* p : params) {
    get_matrix(bundle, prefix + p->name, p->value);
    if (with_moments) {
      get_matrix(bundle, prefix + p->name + ".m", p->adam_m);
      get_matrix(bundle, prefix + p->name + ".v", p->adam_v);
    }
  }
}

}  // namespace affgan::nn
