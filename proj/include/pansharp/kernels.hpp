#pragma once

#include <cstdint>

// Data-parallel inner loops used by the tensor layer. Every operation has a
// scalar reference implementation and, on x86-64, an AVX2 variant selected at
// runtime. The two lanes are equivalence-tested against each other: elementwise
// kernels must match bit for bit (no FMA contraction, same expression order),
// reductions may differ by summation order and are compared with a tolerance.

namespace pansharp::kern {

enum class Isa { scalar, avx2 };

/// True if the CPU reports AVX2 support.
bool cpu_has_avx2();

/// Lane currently used by ops<T>().
Isa active_isa();

/// Pin the lane (tests use this to compare lanes); Isa::avx2 on a CPU without
/// AVX2 falls back to scalar.
void force_isa(Isa isa);

template <typename T>
struct Ops {
  void (*add)(const T* a, const T* b, T* out, int64_t n);
  void (*sub)(const T* a, const T* b, T* out, int64_t n);
  void (*mul)(const T* a, const T* b, T* out, int64_t n);
  void (*scale)(const T* a, T s, T* out, int64_t n);
  void (*add_scaled)(const T* a, const T* b, T s, T* out, int64_t n);  // a + s*b
  void (*axpy)(T s, const T* x, T* y, int64_t n);                     // y += s*x
  void (*clamp)(const T* a, T lo, T hi, T* out, int64_t n);
  T (*sum)(const T* a, int64_t n);
  T (*dot)(const T* a, const T* b, int64_t n);
  T (*sumsq)(const T* a, int64_t n);
  T (*abs_sum)(const T* a, int64_t n);
  T (*max_abs)(const T* a, int64_t n);
  // Fused Adam update. bc1/bc2 are the precomputed bias-correction factors
  // 1/(1-beta1^t) and 1/(1-beta2^t).
  void (*adam)(T* p, T* m, T* v, const T* g, int64_t n, T lr, T beta1, T beta2,
               T eps, T bc1, T bc2);
};

template <typename T>
const Ops<T>& ops();

extern template const Ops<float>& ops<float>();
extern template const Ops<double>& ops<double>();

namespace detail {
template <typename T>
void fill_scalar_table(Ops<T>& t);
// Returns false when AVX2 entries are unavailable on this build/CPU.
template <typename T>
bool fill_avx2_table(Ops<T>& t);
}  // namespace detail

}  // namespace pansharp::kern
