#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace affgan {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user input: malformed manifests, out-of-range ratings, invalid specs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / decode failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or mismatched serialized artifacts (checkpoints, bundles).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite losses or gradients during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void msg_cat(std::ostringstream&) {}
template <typename T, typename... Rest>
void msg_cat(std::ostringstream& os, const T& head, const Rest&... rest) {
  os << head;
  msg_cat(os, rest...);
}
}  // namespace detail

/// Builds an error message from heterogeneous pieces.
template <typename... Parts>
std::string msg(const Parts&... parts) {
  std::ostringstream os;
  detail::msg_cat(os, parts...);
  return os.str();
}

}  // namespace affgan
