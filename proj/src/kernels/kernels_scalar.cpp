#include <cmath>

#include "pansharp/kernels.hpp"

// Reference lane. Deliberately plain loops: this is the ground truth the AVX2
// lane is tested against.

namespace pansharp::kern {
namespace {

template <typename T>
void add_k(const T* a, const T* b, T* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void sub_k(const T* a, const T* b, T* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void mul_k(const T* a, const T* b, T* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale_k(const T* a, T s, T* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

template <typename T>
void add_scaled_k(const T* a, const T* b, T s, T* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + s * b[i];
}

template <typename T>
void axpy_k(T s, const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += s * x[i];
}

template <typename T>
void clamp_k(const T* a, T lo, T hi, T* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    T v = a[i];
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    out[i] = v;
  }
}

template <typename T>
T sum_k(const T* a, int64_t n) {
  T s = 0;
  for (int64_t i = 0; i < n; ++i) s += a[i];
  return s;
}

template <typename T>
T dot_k(const T* a, const T* b, int64_t n) {
  T s = 0;
  for (int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
T sumsq_k(const T* a, int64_t n) {
  T s = 0;
  for (int64_t i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

template <typename T>
T abs_sum_k(const T* a, int64_t n) {
  T s = 0;
  for (int64_t i = 0; i < n; ++i) s += std::abs(a[i]);
  return s;
}

template <typename T>
T max_abs_k(const T* a, int64_t n) {
  T s = 0;
  for (int64_t i = 0; i < n; ++i) {
    T v = std::abs(a[i]);
    if (v > s) s = v;
  }
  return s;
}

template <typename T>
void adam_k(T* p, T* m, T* v, const T* g, int64_t n, T lr, T beta1, T beta2,
            T eps, T bc1, T bc2) {
  const T om1 = T(1) - beta1;
  const T om2 = T(1) - beta2;
  for (int64_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + om1 * g[i];
    v[i] = beta2 * v[i] + om2 * (g[i] * g[i]);
    const T mhat = m[i] * bc1;
    const T vhat = v[i] * bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace

namespace detail {

template <typename T>
void fill_scalar_table(Ops<T>& t) {
  t.add = add_k<T>;
  t.sub = sub_k<T>;
  t.mul = mul_k<T>;
  t.scale = scale_k<T>;
  t.add_scaled = add_scaled_k<T>;
  t.axpy = axpy_k<T>;
  t.clamp = clamp_k<T>;
  t.sum = sum_k<T>;
  t.dot = dot_k<T>;
  t.sumsq = sumsq_k<T>;
  t.abs_sum = abs_sum_k<T>;
  t.max_abs = max_abs_k<T>;
  t.adam = adam_k<T>;
}

template void fill_scalar_table<float>(Ops<float>&);
template void fill_scalar_table<double>(Ops<double>&);

}  // namespace detail
}  // namespace pansharp::kern
