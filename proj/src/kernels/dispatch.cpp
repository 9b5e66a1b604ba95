#include "pansharp/kernels.hpp"

namespace pansharp::kern {
namespace {

Isa g_isa = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;

template <typename T>
struct Tables {
  Ops<T> scalar{};
  Ops<T> avx2{};
  bool avx2_ok = false;
  Tables() {
    detail::fill_scalar_table(scalar);
    avx2 = scalar;
    avx2_ok = detail::fill_avx2_table(avx2);
  }
};

template <typename T>
const Tables<T>& tables() {
  static const Tables<T> t;
  return t;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return g_isa; }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !tables<float>().avx2_ok) isa = Isa::scalar;
  g_isa = isa;
}

template <typename T>
const Ops<T>& ops() {
  const Tables<T>& t = tables<T>();
  return (g_isa == Isa::avx2 && t.avx2_ok) ? t.avx2 : t.scalar;
}

template const Ops<float>& ops<float>();
template const Ops<double>& ops<double>();

}  // namespace pansharp::kern
