#pragma once

#include <memory>
#include <string>
#include <vector>

#include "affgan/nn/layers.hpp"

namespace affgan::nn {

/// Sequential layer stack. Parameters get stable names "l<i>.<p>" from
/// their position, which the bundle format uses as keys.
class Net {
 public:
  Net() = default;

  template <typename L, typename... Args>
  L* add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    layers_.push_back(std::move(layer));
    rename_params();
    return raw;
  }

  Tensor forward(const Tensor& x, Mode mode, Rng* rng = nullptr);
  Tensor backward(const Tensor& dy, bool accumulate_params = true);
  Tensor penalty_forward(const Tensor& v);
  void set_penalty_ctx(bool on);
  void zero_grad();
  std::vector<Param*> params();
  int64_t parameter_count();
  std::string architecture() const;

  size_t size() const { return layers_.size(); }
  Layer& layer(size_t i) { return *layers_[i]; }
  const Layer& layer(size_t i) const { return *layers_[i]; }

  template <typename L>
  L* find_first() {
    for (auto& l : layers_) {
      if (auto* p = dynamic_cast<L*>(l.get())) return p;
    }
    return nullptr;
  }

  template <typename L>
  bool contains() const {
    for (const auto& l : layers_) {
      if (dynamic_cast<const L*>(l.get()) != nullptr) return true;
    }
    return false;
  }

 private:
  void rename_params();
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Builds an empty net from an architecture string previously produced by
/// Net::architecture() (semicolon-separated layer descriptions).
Net net_from_architecture(const std::string& arch, uint64_t init_seed);

}  // namespace affgan::nn
