#pragma once

#include <cstdint>
#include <new>
#include <vector>

#include <Eigen/Core>

#include "affgan/core/error.hpp"

namespace affgan::nn {

/// 64-byte-aligned allocator. Tensor buffers get a fixed base alignment so
/// the split points of Eigen's vectorized reductions depend only on tensor
/// shapes, never on where the heap happened to place a buffer. Without this,
/// rerunning the same computation in a process with a different allocation
/// history can change summation order and flip low-order bits, which breaks
/// bit-identical resume.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(
        ::operator new(n * sizeof(T), std::align_val_t(kAlign)));
  }
  void deallocate(T* p, std::size_t) noexcept {
    ::operator delete(p, std::align_val_t(kAlign));
  }

  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U>;
  };
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) {
    return true;
  }
  friend bool operator!=(const AlignedAllocator&, const AlignedAllocator&) {
    return false;
  }
};

using FloatVec = std::vector<float, AlignedAllocator<float>>;

/// Dense float32 tensor, row-major with the last axis fastest (activations
/// are NCHW, so each sample's CHW block is contiguous and each channel
/// plane is contiguous within it). Eigen map helpers expose the buffer for
/// GEMM without copies.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(size_t(numel_of(shape_)), 0.0f);
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return int(shape_.size()); }
  int dim(int i) const { return shape_[size_t(i)]; }
  int64_t numel() const { return int64_t(data_.size()); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](int64_t i) { return data_[size_t(i)]; }
  float operator[](int64_t i) const { return data_[size_t(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Reinterprets the buffer under a new shape (numel must match).
  Tensor reshaped(std::vector<int> new_shape) const {
    if (numel_of(new_shape) != numel()) {
      throw ValidationError(msg("reshape of ", numel(), " elements to a shape of ",
                                numel_of(new_shape)));
    }
    Tensor t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
  }
  void set_shape(std::vector<int> new_shape) { shape_ = std::move(new_shape); }

  Eigen::Map<Eigen::ArrayXf> array() {
    return {data_.data(), Eigen::Index(data_.size())};
  }
  Eigen::Map<const Eigen::ArrayXf> array() const {
    return {data_.data(), Eigen::Index(data_.size())};
  }

  /// Column-major matrix view. For an (N, D) activation tensor,
  /// mat(D, N) yields one sample per column.
  Eigen::Map<Eigen::MatrixXf> mat(int rows, int cols) {
    return {data_.data(), rows, cols};
  }
  Eigen::Map<const Eigen::MatrixXf> mat(int rows, int cols) const {
    return {data_.data(), rows, cols};
  }

  static int64_t numel_of(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }

 private:
  std::vector<int> shape_;
  FloatVec data_;
};

}  // namespace affgan::nn
