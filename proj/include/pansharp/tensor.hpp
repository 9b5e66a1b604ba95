#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "pansharp/error.hpp"

namespace pansharp {

enum class DType : uint8_t { f32 = 0, f64 = 1 };

inline int64_t dtype_size(DType dt) { return dt == DType::f32 ? 4 : 8; }
inline const char* dtype_name(DType dt) { return dt == DType::f32 ? "f32" : "f64"; }

/// Dense row-major tensor of f32 or f64 scalars. The universal value type of
/// the library: images are H x W x C with channels last.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int64_t> shape, DType dt);

  static Tensor zeros(std::vector<int64_t> shape, DType dt);
  static Tensor full(std::vector<int64_t> shape, DType dt, double value);
  template <typename T>
  static Tensor from_values(std::vector<int64_t> shape, const std::vector<T>& values);

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return numel_; }
  DType dtype() const { return dtype_; }
  bool defined() const { return numel_ > 0; }

  template <typename T>
  T* data() {
    check_dtype<T>();
    return reinterpret_cast<T*>(buf_.data());
  }
  template <typename T>
  const T* data() const {
    check_dtype<T>();
    return reinterpret_cast<const T*>(buf_.data());
  }

  /// Element access as double regardless of dtype (for tests and glue code).
  double at(int64_t flat) const;
  void set(int64_t flat, double v);

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const;

  Tensor astype(DType dt) const;
  Tensor clone() const { return *this; }

  /// True if every element is finite.
  bool all_finite() const;

 private:
  template <typename T>
  void check_dtype() const;

  std::vector<int64_t> shape_;
  int64_t numel_ = 0;
  DType dtype_ = DType::f32;
  std::vector<unsigned char> buf_;
};

template <>
inline void Tensor::check_dtype<float>() const {
  if (dtype_ != DType::f32) throw ContractError("tensor is not f32");
}
template <>
inline void Tensor::check_dtype<double>() const {
  if (dtype_ != DType::f64) throw ContractError("tensor is not f64");
}

template <typename T>
Tensor Tensor::from_values(std::vector<int64_t> shape, const std::vector<T>& values) {
  Tensor t(std::move(shape), sizeof(T) == 4 ? DType::f32 : DType::f64);
  if (t.numel() != static_cast<int64_t>(values.size()))
    throw ShapeError("from_values: " + std::to_string(values.size()) + " values for shape " +
                     t.shape_str());
  std::memcpy(t.buf_.data(), values.data(), values.size() * sizeof(T));
  return t;
}

/// Invoke f with a value of the element type matching dt.
template <class F>
auto dispatch_dtype(DType dt, F&& f) {
  if (dt == DType::f32) return f(float{});
  return f(double{});
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op);
void check_same_dtype(const Tensor& a, const Tensor& b, const char* op);

}  // namespace pansharp
