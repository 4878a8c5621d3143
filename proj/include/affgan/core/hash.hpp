#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace affgan {

/// SHA-1 of raw bytes, lowercase hex.
std::string sha1_hex(const void* data, size_t len);

/// Git-style blob hash: sha1("blob <len>\0" + content).
std::string git_blob_sha1(const std::string& content);
std::string git_blob_sha1_file(const std::string& path);

uint32_t crc32_bytes(const void* data, size_t len, uint32_t seed = 0);

}  // namespace affgan
