#include "pansharp/tensor.hpp"

#include <cmath>
#include <sstream>

namespace pansharp {

Tensor::Tensor(std::vector<int64_t> shape, DType dt) : shape_(std::move(shape)), dtype_(dt) {
  if (shape_.empty()) throw ShapeError("tensor rank must be >= 1");
  numel_ = 1;
  for (int64_t e : shape_) {
    if (e < 1) throw ShapeError("tensor extents must be >= 1, got " + shape_str());
    numel_ *= e;
  }
  buf_.assign(static_cast<size_t>(numel_ * dtype_size(dt)), 0);
}

Tensor Tensor::zeros(std::vector<int64_t> shape, DType dt) { return Tensor(std::move(shape), dt); }

Tensor Tensor::full(std::vector<int64_t> shape, DType dt, double value) {
  Tensor t(std::move(shape), dt);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, value);
  return t;
}

double Tensor::at(int64_t flat) const {
  if (dtype_ == DType::f32) return reinterpret_cast<const float*>(buf_.data())[flat];
  return reinterpret_cast<const double*>(buf_.data())[flat];
}

void Tensor::set(int64_t flat, double v) {
  if (dtype_ == DType::f32)
    reinterpret_cast<float*>(buf_.data())[flat] = static_cast<float>(v);
  else
    reinterpret_cast<double*>(buf_.data())[flat] = v;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << " x ";
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::astype(DType dt) const {
  if (dt == dtype_) return *this;
  Tensor out(shape_, dt);
  for (int64_t i = 0; i < numel_; ++i) out.set(i, at(i));
  return out;
}

bool Tensor::all_finite() const {
  return dispatch_dtype(dtype_, [&](auto tag) {
    using T = decltype(tag);
    const T* p = data<T>();
    for (int64_t i = 0; i < numel_; ++i)
      if (!std::isfinite(p[i])) return false;
    return true;
  });
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

void check_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype())
    throw ContractError(std::string(op) + ": dtype mismatch " + dtype_name(a.dtype()) + " vs " +
                        dtype_name(b.dtype()));
}

}  // namespace pansharp
