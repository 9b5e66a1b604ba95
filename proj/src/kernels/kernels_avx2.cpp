#include "pansharp/kernels.hpp"

// AVX2 lane. Elementwise kernels keep the exact expression order of the scalar
// lane (mul then add, no FMA) so the two lanes agree bit for bit; reductions
// use vector accumulators and differ from scalar only by summation order.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#define PS_TARGET_AVX2 __attribute__((target("avx2")))

namespace pansharp::kern {
namespace {

PS_TARGET_AVX2 inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 1));
  return _mm_cvtss_f32(s);
}

PS_TARGET_AVX2 inline double hsum4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  return _mm_cvtsd_f64(s);
}

// ---- float ----

PS_TARGET_AVX2 void add_f(const float* a, const float* b, float* out, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

PS_TARGET_AVX2 void sub_f(const float* a, const float* b, float* out, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

PS_TARGET_AVX2 void mul_f(const float* a, const float* b, float* out, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

PS_TARGET_AVX2 void scale_f(const float* a, float s, float* out, int64_t n) {
  const __m256 vs = _mm256_set1_ps(s);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), vs));
  for (; i < n; ++i) out[i] = a[i] * s;
}

PS_TARGET_AVX2 void add_scaled_f(const float* a, const float* b, float s, float* out, int64_t n) {
  const __m256 vs = _mm256_set1_ps(s);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_mul_ps(vs, _mm256_loadu_ps(b + i));
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), t));
  }
  for (; i < n; ++i) out[i] = a[i] + s * b[i];
}

PS_TARGET_AVX2 void axpy_f(float s, const float* x, float* y, int64_t n) {
  const __m256 vs = _mm256_set1_ps(s);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_mul_ps(vs, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), t));
  }
  for (; i < n; ++i) y[i] += s * x[i];
}

PS_TARGET_AVX2 void clamp_f(const float* a, float lo, float hi, float* out, int64_t n) {
  const __m256 vlo = _mm256_set1_ps(lo), vhi = _mm256_set1_ps(hi);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_min_ps(_mm256_max_ps(_mm256_loadu_ps(a + i), vlo), vhi));
  for (; i < n; ++i) {
    float v = a[i];
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    out[i] = v;
  }
}

PS_TARGET_AVX2 float sum_f(const float* a, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(a + i));
  float s = hsum8(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

PS_TARGET_AVX2 float dot_f(const float* a, const float* b, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  float s = hsum8(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

PS_TARGET_AVX2 float sumsq_f(const float* a, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(a + i);
    acc = _mm256_add_ps(acc, _mm256_mul_ps(v, v));
  }
  float s = hsum8(acc);
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

PS_TARGET_AVX2 float abs_sum_f(const float* a, int64_t n) {
  const __m256 mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_add_ps(acc, _mm256_and_ps(mask, _mm256_loadu_ps(a + i)));
  float s = hsum8(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

PS_TARGET_AVX2 float max_abs_f(const float* a, int64_t n) {
  const __m256 mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_max_ps(acc, _mm256_and_ps(mask, _mm256_loadu_ps(a + i)));
  float t[8];
  _mm256_storeu_ps(t, acc);
  float s = 0;
  for (float v : t)
    if (v > s) s = v;
  for (; i < n; ++i) {
    float v = std::abs(a[i]);
    if (v > s) s = v;
  }
  return s;
}

PS_TARGET_AVX2 void adam_f(float* p, float* m, float* v, const float* g, int64_t n,
                           float lr, float beta1, float beta2, float eps, float bc1,
                           float bc2) {
  const float om1s = 1.0f - beta1, om2s = 1.0f - beta2;
  const __m256 b1 = _mm256_set1_ps(beta1), b2 = _mm256_set1_ps(beta2);
  const __m256 om1 = _mm256_set1_ps(om1s), om2 = _mm256_set1_ps(om2s);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  const __m256 vbc1 = _mm256_set1_ps(bc1), vbc2 = _mm256_set1_ps(bc2);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(om1, gv));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(om2, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    __m256 mhat = _mm256_mul_ps(mv, vbc1);
    __m256 vhat = _mm256_mul_ps(vv, vbc2);
    __m256 den = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    __m256 upd = _mm256_mul_ps(vlr, _mm256_div_ps(mhat, den));
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + om1s * g[i];
    v[i] = beta2 * v[i] + om2s * (g[i] * g[i]);
    const float mhat = m[i] * bc1;
    const float vhat = v[i] * bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

// ---- double ----

PS_TARGET_AVX2 void add_d(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

PS_TARGET_AVX2 void sub_d(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

PS_TARGET_AVX2 void mul_d(const double* a, const double* b, double* out, int64_t n) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

PS_TARGET_AVX2 void scale_d(const double* a, double s, double* out, int64_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  for (; i < n; ++i) out[i] = a[i] * s;
}

PS_TARGET_AVX2 void add_scaled_d(const double* a, const double* b, double s, double* out,
                                 int64_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(vs, _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), t));
  }
  for (; i < n; ++i) out[i] = a[i] + s * b[i];
}

PS_TARGET_AVX2 void axpy_d(double s, const double* x, double* y, int64_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_mul_pd(vs, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) y[i] += s * x[i];
}

PS_TARGET_AVX2 void clamp_d(const double* a, double lo, double hi, double* out, int64_t n) {
  const __m256d vlo = _mm256_set1_pd(lo), vhi = _mm256_set1_pd(hi);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_max_pd(_mm256_loadu_pd(a + i), vlo), vhi));
  for (; i < n; ++i) {
    double v = a[i];
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    out[i] = v;
  }
}

PS_TARGET_AVX2 double sum_d(const double* a, int64_t n) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double s = hsum4(acc);
  for (; i < n; ++i) s += a[i];
  return s;
}

PS_TARGET_AVX2 double dot_d(const double* a, const double* b, int64_t n) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  double s = hsum4(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

PS_TARGET_AVX2 double sumsq_d(const double* a, int64_t n) {
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = hsum4(acc);
  for (; i < n; ++i) s += a[i] * a[i];
  return s;
}

PS_TARGET_AVX2 double abs_sum_d(const double* a, int64_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(a + i)));
  double s = hsum4(acc);
  for (; i < n; ++i) s += std::abs(a[i]);
  return s;
}

PS_TARGET_AVX2 double max_abs_d(const double* a, int64_t n) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  __m256d acc = _mm256_setzero_pd();
  int64_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(acc, _mm256_and_pd(mask, _mm256_loadu_pd(a + i)));
  double t[4];
  _mm256_storeu_pd(t, acc);
  double s = 0;
  for (double v : t)
    if (v > s) s = v;
  for (; i < n; ++i) {
    double v = std::abs(a[i]);
    if (v > s) s = v;
  }
  return s;
}

PS_TARGET_AVX2 void adam_d(double* p, double* m, double* v, const double* g, int64_t n,
                           double lr, double beta1, double beta2, double eps, double bc1,
                           double bc2) {
  const double om1s = 1.0 - beta1, om2s = 1.0 - beta2;
  const __m256d b1 = _mm256_set1_pd(beta1), b2 = _mm256_set1_pd(beta2);
  const __m256d om1 = _mm256_set1_pd(om1s), om2 = _mm256_set1_pd(om2s);
  const __m256d vlr = _mm256_set1_pd(lr), veps = _mm256_set1_pd(eps);
  const __m256d vbc1 = _mm256_set1_pd(bc1), vbc2 = _mm256_set1_pd(bc2);
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(om1, gv));
    __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                               _mm256_mul_pd(om2, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    __m256d mhat = _mm256_mul_pd(mv, vbc1);
    __m256d vhat = _mm256_mul_pd(vv, vbc2);
    __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
    __m256d upd = _mm256_mul_pd(vlr, _mm256_div_pd(mhat, den));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + om1s * g[i];
    v[i] = beta2 * v[i] + om2s * (g[i] * g[i]);
    const double mhat = m[i] * bc1;
    const double vhat = v[i] * bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

}  // namespace

namespace detail {

template <>
bool fill_avx2_table<float>(Ops<float>& t) {
  if (!cpu_has_avx2()) return false;
  t.add = add_f;
  t.sub = sub_f;
  t.mul = mul_f;
  t.scale = scale_f;
  t.add_scaled = add_scaled_f;
  t.axpy = axpy_f;
  t.clamp = clamp_f;
  t.sum = sum_f;
  t.dot = dot_f;
  t.sumsq = sumsq_f;
  t.abs_sum = abs_sum_f;
  t.max_abs = max_abs_f;
  t.adam = adam_f;
  return true;
}

template <>
bool fill_avx2_table<double>(Ops<double>& t) {
  if (!cpu_has_avx2()) return false;
  t.add = add_d;
  t.sub = sub_d;
  t.mul = mul_d;
  t.scale = scale_d;
  t.add_scaled = add_scaled_d;
  t.axpy = axpy_d;
  t.clamp = clamp_d;
  t.sum = sum_d;
  t.dot = dot_d;
  t.sumsq = sumsq_d;
  t.abs_sum = abs_sum_d;
  t.max_abs = max_abs_d;
  t.adam = adam_d;
  return true;
}

}  // namespace detail
}  // namespace pansharp::kern

#else  // non-x86: no AVX2 lane, dispatch falls back to scalar

namespace pansharp::kern::detail {

template <>
bool fill_avx2_table<float>(Ops<float>&) {
  return false;
}

template <>
bool fill_avx2_table<double>(Ops<double>&) {
  return false;
}

}  // namespace pansharp::kern::detail

#endif
