#include "pansharp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pansharp/kernels.hpp"

namespace pansharp {

namespace {

template <typename T>
using KOps = kern::Ops<T>;

int64_t last_dim(const Tensor& t) { return t.dim(t.rank() - 1); }

void check_image(const Tensor& x, const char* op) {
  if (x.rank() != 3) throw ShapeError(std::string(op) + ": expected H x W x C, got " + x.shape_str());
}

// Reflect index with edge repeat: -1 -> 0, -2 -> 1, n -> n-1.
int64_t reflect(int64_t i, int64_t n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - i - 1;
  return i;
}

}  // namespace

// ---------------------------------------------------------------- elementwise

#define PS_BINARY_OP(NAME, KERNEL)                                    \
  Tensor NAME(const Tensor& a, const Tensor& b) {                     \
    check_same_shape(a, b, #NAME);                                    \
    check_same_dtype(a, b, #NAME);                                    \
    Tensor out(a.shape(), a.dtype());                                 \
    dispatch_dtype(a.dtype(), [&](auto tag) {                         \
      using T = decltype(tag);                                        \
      kern::ops<T>().KERNEL(a.data<T>(), b.data<T>(), out.data<T>(), a.numel()); \
    });                                                               \
    return out;                                                       \
  }

PS_BINARY_OP(add, add)
PS_BINARY_OP(sub, sub)
PS_BINARY_OP(mul, mul)
#undef PS_BINARY_OP

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape(), a.dtype());
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kern::ops<T>().scale(a.data<T>(), static_cast<T>(s), out.data<T>(), a.numel());
  });
  return out;
}

Tensor add_scaled(const Tensor& a, const Tensor& b, double s) {
  check_same_shape(a, b, "add_scaled");
  check_same_dtype(a, b, "add_scaled");
  Tensor out(a.shape(), a.dtype());
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kern::ops<T>().add_scaled(a.data<T>(), b.data<T>(), static_cast<T>(s), out.data<T>(),
                              a.numel());
  });
  return out;
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  Tensor out(a.shape(), a.dtype());
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kern::ops<T>().clamp(a.data<T>(), static_cast<T>(lo), static_cast<T>(hi), out.data<T>(),
                         a.numel());
  });
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out(x.shape(), x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    T* o = out.data<T>();
    for (int64_t i = 0; i < x.numel(); ++i) {
      const double v = in[i];
      o[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)));
    }
  });
  return out;
}

Tensor gelu_vjp(const Tensor& x, const Tensor& gout) {
  check_same_shape(x, gout, "gelu_vjp");
  Tensor out(x.shape(), x.dtype());
  constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* g = gout.data<T>();
    T* o = out.data<T>();
    for (int64_t i = 0; i < x.numel(); ++i) {
      const double v = in[i];
      const double phi = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      o[i] = static_cast<T>(g[i] * (phi + v * pdf));
    }
  });
  return out;
}

// ----------------------------------------------------------------- reductions

double sum_all(const Tensor& t) {
  return dispatch_dtype(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(kern::ops<T>().sum(t.data<T>(), t.numel()));
  });
}

double abs_sum_all(const Tensor& t) {
  return dispatch_dtype(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(kern::ops<T>().abs_sum(t.data<T>(), t.numel()));
  });
}

double sumsq_all(const Tensor& t) {
  return dispatch_dtype(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(kern::ops<T>().sumsq(t.data<T>(), t.numel()));
  });
}

double max_abs_all(const Tensor& t) {
  return dispatch_dtype(t.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(kern::ops<T>().max_abs(t.data<T>(), t.numel()));
  });
}

double dot_all(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "dot_all");
  check_same_dtype(a, b, "dot_all");
  return dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    return static_cast<double>(kern::ops<T>().dot(a.data<T>(), b.data<T>(), a.numel()));
  });
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mean_abs_diff");
  return abs_sum_all(sub(a, b)) / static_cast<double>(a.numel());
}

double frob_norm(const Tensor& t) { return std::sqrt(sumsq_all(t)); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.at(i) - b.at(i)));
  return m;
}

// ------------------------------------------------------------------ token ops

Tensor softmax_lastdim(const Tensor& x) {
  if (!x.all_finite()) throw ValueError("softmax_lastdim: non-finite input");
  const int64_t n = last_dim(x);
  const int64_t slices = x.numel() / n;
  Tensor out(x.shape(), x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    T* o = out.data<T>();
    for (int64_t s = 0; s < slices; ++s) {
      const T* row = in + s * n;
      T* orow = o + s * n;
      T m = row[0];
      for (int64_t i = 1; i < n; ++i) m = std::max(m, row[i]);
      T sum = 0;
      for (int64_t i = 0; i < n; ++i) {
        orow[i] = std::exp(row[i] - m);
        sum += orow[i];
      }
      const T inv = T(1) / sum;
      for (int64_t i = 0; i < n; ++i) orow[i] *= inv;
    }
  });
  return out;
}

Tensor softmax_vjp(const Tensor& y, const Tensor& gout) {
  check_same_shape(y, gout, "softmax_vjp");
  const int64_t n = last_dim(y);
  const int64_t slices = y.numel() / n;
  Tensor out(y.shape(), y.dtype());
  dispatch_dtype(y.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* yp = y.data<T>();
    const T* gp = gout.data<T>();
    T* o = out.data<T>();
    for (int64_t s = 0; s < slices; ++s) {
      const T* yr = yp + s * n;
      const T* gr = gp + s * n;
      T* orow = o + s * n;
      T inner = kern::ops<T>().dot(yr, gr, n);
      for (int64_t i = 0; i < n; ++i) orow[i] = (gr[i] - inner) * yr[i];
    }
  });
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const int64_t c = last_dim(x);
  if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c)
    throw ShapeError("layer_norm: affine extents must match channel extent " + std::to_string(c));
  check_same_dtype(x, gamma, "layer_norm");
  const int64_t tokens = x.numel() / c;
  Tensor out(x.shape(), x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* g = gamma.data<T>();
    const T* b = beta.data<T>();
    T* o = out.data<T>();
    for (int64_t t = 0; t < tokens; ++t) {
      const T* row = in + t * c;
      T* orow = o + t * c;
      T mu = kern::ops<T>().sum(row, c) / static_cast<T>(c);
      T var = 0;
      for (int64_t i = 0; i < c; ++i) {
        const T d = row[i] - mu;
        var += d * d;
      }
      var /= static_cast<T>(c);
      const T rstd = T(1) / std::sqrt(var + static_cast<T>(eps));
      for (int64_t i = 0; i < c; ++i) orow[i] = (row[i] - mu) * rstd * g[i] + b[i];
    }
  });
  return out;
}

void layer_norm_vjp(const Tensor& x, const Tensor& gamma, double eps, const Tensor& gout,
                    Tensor& gx, Tensor& ggamma, Tensor& gbeta) {
  const int64_t c = last_dim(x);
  const int64_t tokens = x.numel() / c;
  gx = Tensor::zeros(x.shape(), x.dtype());
  ggamma = Tensor::zeros(gamma.shape(), x.dtype());
  gbeta = Tensor::zeros(gamma.shape(), x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* gm = gamma.data<T>();
    const T* go = gout.data<T>();
    T* dx = gx.data<T>();
    T* dg = ggamma.data<T>();
    T* db = gbeta.data<T>();
    for (int64_t t = 0; t < tokens; ++t) {
      const T* row = in + t * c;
      const T* grow = go + t * c;
      T* dxr = dx + t * c;
      T mu = kern::ops<T>().sum(row, c) / static_cast<T>(c);
      T var = 0;
      for (int64_t i = 0; i < c; ++i) {
        const T d = row[i] - mu;
        var += d * d;
      }
      var /= static_cast<T>(c);
      const T rstd = T(1) / std::sqrt(var + static_cast<T>(eps));
      // xhat = (x - mu) * rstd; dL/dx = rstd*(a - mean(a) - xhat*mean(a*xhat))
      // with a = gamma * gout.
      T mean_a = 0, mean_ax = 0;
      for (int64_t i = 0; i < c; ++i) {
        const T xh = (row[i] - mu) * rstd;
        const T a = gm[i] * grow[i];
        mean_a += a;
        mean_ax += a * xh;
        dg[i] += grow[i] * xh;
        db[i] += grow[i];
      }
      mean_a /= static_cast<T>(c);
      mean_ax /= static_cast<T>(c);
      for (int64_t i = 0; i < c; ++i) {
        const T xh = (row[i] - mu) * rstd;
        const T a = gm[i] * grow[i];
        dxr[i] = rstd * (a - mean_a - xh * mean_ax);
      }
    }
  });
}

Tensor linear_lastdim(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2) throw ShapeError("linear_lastdim: weight must be Cin x Cout");
  const int64_t cin = w.dim(0), cout = w.dim(1);
  if (last_dim(x) != cin)
    throw ShapeError("linear_lastdim: input channels " + std::to_string(last_dim(x)) +
                     " != weight rows " + std::to_string(cin));
  check_same_dtype(x, w, "linear_lastdim");
  const bool has_bias = b.defined();
  if (has_bias && (b.rank() != 1 || b.dim(0) != cout))
    throw ShapeError("linear_lastdim: bias extent must equal Cout");
  std::vector<int64_t> oshape = x.shape();
  oshape.back() = cout;
  Tensor out(oshape, x.dtype());
  const int64_t rows = x.numel() / cin;
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* wp = w.data<T>();
    T* o = out.data<T>();
    const KOps<T>& k = kern::ops<T>();
    for (int64_t r = 0; r < rows; ++r) {
      const T* xr = in + r * cin;
      T* orow = o + r * cout;
      if (has_bias)
        std::copy(b.data<T>(), b.data<T>() + cout, orow);
      else
        std::fill(orow, orow + cout, T(0));
      for (int64_t ci = 0; ci < cin; ++ci) k.axpy(xr[ci], wp + ci * cout, orow, cout);
    }
  });
  return out;
}

void linear_lastdim_vjp(const Tensor& x, const Tensor& w, bool has_bias, const Tensor& gout,
                        Tensor& gx, Tensor& gw, Tensor& gb) {
  const int64_t cin = w.dim(0), cout = w.dim(1);
  const int64_t rows = x.numel() / cin;
  gx = Tensor::zeros(x.shape(), x.dtype());
  gw = Tensor::zeros(w.shape(), x.dtype());
  if (has_bias) gb = Tensor::zeros({cout}, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* wp = w.data<T>();
    const T* go = gout.data<T>();
    T* dx = gx.data<T>();
    T* dw = gw.data<T>();
    const KOps<T>& k = kern::ops<T>();
    for (int64_t r = 0; r < rows; ++r) {
      const T* xr = in + r * cin;
      const T* grow = go + r * cout;
      T* dxr = dx + r * cin;
      for (int64_t ci = 0; ci < cin; ++ci) {
        dxr[ci] += k.dot(grow, wp + ci * cout, cout);
        k.axpy(xr[ci], grow, dw + ci * cout, cout);
      }
      if (has_bias) k.axpy(T(1), grow, gb.data<T>(), cout);
    }
  });
}

// ---------------------------------------------------------------- spatial ops

Tensor conv_depthwise(const Tensor& x, const Tensor& k, int stride, Padding pad) {
  check_image(x, "conv_depthwise");
  if (k.rank() != 3) throw ShapeError("conv_depthwise: kernel must be C x kh x kw");
  const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const int64_t kc = k.dim(0), kh = k.dim(1), kw = k.dim(2);
  if (kc != c) throw ShapeError("conv_depthwise: kernel channels != input channels");
  if (stride < 1) throw ContractError("conv_depthwise: stride must be >= 1");
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  if (ph > h || pw > w) throw ShapeError("conv_depthwise: kernel larger than padded input");
  check_same_dtype(x, k, "conv_depthwise");
  const int64_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
  Tensor out({oh, ow, c}, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* kp = k.data<T>();
    T* o = out.data<T>();
    for (int64_t oi = 0; oi < oh; ++oi) {
      for (int64_t oj = 0; oj < ow; ++oj) {
        T* opix = o + (oi * ow + oj) * c;
        for (int64_t ch = 0; ch < c; ++ch) opix[ch] = 0;
        for (int64_t di = 0; di < kh; ++di) {
          int64_t si = oi * stride - ph + di;
          if (pad == Padding::reflect)
            si = reflect(si, h);
          else if (si < 0 || si >= h)
            continue;
          for (int64_t dj = 0; dj < kw; ++dj) {
            int64_t sj = oj * stride - pw + dj;
            if (pad == Padding::reflect)
              sj = reflect(sj, w);
            else if (sj < 0 || sj >= w)
              continue;
            const T* xpix = in + (si * w + sj) * c;
            const int64_t koff = di * kw + dj;
            for (int64_t ch = 0; ch < c; ++ch) opix[ch] += xpix[ch] * kp[ch * kh * kw + koff];
          }
        }
      }
    }
  });
  return out;
}

void conv_depthwise_vjp(const Tensor& x, const Tensor& k, int stride, Padding pad,
                        const Tensor& gout, Tensor& gx, Tensor& gk) {
  const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const int64_t kh = k.dim(1), kw = k.dim(2);
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const int64_t oh = gout.dim(0), ow = gout.dim(1);
  gx = Tensor::zeros(x.shape(), x.dtype());
  gk = Tensor::zeros(k.shape(), x.dtype());
  // Same index walk as the forward pass with the accumulation transposed, so
  // this is the exact adjoint including the padding rule.
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* kp = k.data<T>();
    const T* go = gout.data<T>();
    T* dx = gx.data<T>();
    T* dk = gk.data<T>();
    for (int64_t oi = 0; oi < oh; ++oi) {
      for (int64_t oj = 0; oj < ow; ++oj) {
        const T* gpix = go + (oi * ow + oj) * c;
        for (int64_t di = 0; di < kh; ++di) {
          int64_t si = oi * stride - ph + di;
          if (pad == Padding::reflect)
            si = reflect(si, h);
          else if (si < 0 || si >= h)
            continue;
          for (int64_t dj = 0; dj < kw; ++dj) {
            int64_t sj = oj * stride - pw + dj;
            if (pad == Padding::reflect)
              sj = reflect(sj, w);
            else if (sj < 0 || sj >= w)
              continue;
            const int64_t pix = (si * w + sj) * c;
            const int64_t koff = di * kw + dj;
            for (int64_t ch = 0; ch < c; ++ch) {
              dx[pix + ch] += gpix[ch] * kp[ch * kh * kw + koff];
              dk[ch * kh * kw + koff] += gpix[ch] * in[pix + ch];
            }
          }
        }
      }
    }
  });
}

// ------------------------------------------------------------------- resample

namespace {

double keys_cubic(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return a * (((t - 5.0) * t + 8.0) * t - 4.0);
  return 0.0;
}

struct PlanRow {
  std::vector<int64_t> idx;
  std::vector<double> w;
  size_t ref = 0;    // tap position holding the largest |weight|
  double wsum = 1.0; // sum of weights in tap order, after normalization
};

std::vector<PlanRow> make_plan(int64_t n_in, int64_t n_out, int num, int den) {
  std::vector<PlanRow> plan(static_cast<size_t>(n_out));
  const double inv_f = static_cast<double>(den) / static_cast<double>(num);
  const double scale = static_cast<double>(num) / static_cast<double>(den);
  for (int64_t o = 0; o < n_out; ++o) {
    PlanRow& row = plan[static_cast<size_t>(o)];
    const double center = (static_cast<double>(o) + 0.5) * inv_f - 0.5;
    int64_t lo, hi;
    if (num >= den) {  // upsample / identity: 4-tap kernel in source units
      lo = static_cast<int64_t>(std::floor(center)) - 1;
      hi = lo + 3;
    } else {  // downsample: kernel stretched by 1/scale for anti-aliasing
      const double radius = 2.0 / scale;
      lo = static_cast<int64_t>(std::ceil(center - radius));
      hi = static_cast<int64_t>(std::floor(center + radius));
    }
    for (int64_t j = lo; j <= hi; ++j) {
      const double t = (num >= den) ? (center - static_cast<double>(j))
                                    : (center - static_cast<double>(j)) * scale;
      const double wj = keys_cubic(t);
      if (wj == 0.0) continue;
      const int64_t jj = std::clamp<int64_t>(j, 0, n_in - 1);
      // Merge taps that clamp onto the same border sample.
      bool merged = false;
      for (size_t p = 0; p < row.idx.size(); ++p) {
        if (row.idx[p] == jj) {
          row.w[p] += wj;
          merged = true;
          break;
        }
      }
      if (!merged) {
        row.idx.push_back(jj);
        row.w.push_back(wj);
      }
    }
    double s = 0;
    for (double wj : row.w) s += wj;
    for (double& wj : row.w) wj /= s;
    double best = -1;
    for (size_t p = 0; p < row.w.size(); ++p) {
      if (std::abs(row.w[p]) > best) {
        best = std::abs(row.w[p]);
        row.ref = p;
      }
    }
    double ws = 0;
    for (double wj : row.w) ws += wj;
    row.wsum = ws;
  }
  return plan;
}

// Resample axis 0 of an (N0 x M) row-major block. The accumulation is
// anchored at the dominant tap so constant inputs come through bit-exact.
template <typename T>
void resample_rows(const T* in, int64_t m, const std::vector<PlanRow>& plan, T* out) {
  const KOps<T>& k = kern::ops<T>();
  std::vector<T> diff(static_cast<size_t>(m));
  std::vector<T> acc(static_cast<size_t>(m));
  for (size_t o = 0; o < plan.size(); ++o) {
    const PlanRow& row = plan[o];
    const T* ref = in + row.idx[row.ref] * m;
    T* orow = out + static_cast<int64_t>(o) * m;
    std::fill(acc.begin(), acc.end(), T(0));
    for (size_t p = 0; p < row.idx.size(); ++p) {
      if (p == row.ref) continue;
      k.sub(in + row.idx[p] * m, ref, diff.data(), m);
      k.axpy(static_cast<T>(row.w[p]), diff.data(), acc.data(), m);
    }
    k.add(ref, acc.data(), orow, m);
  }
}

template <typename T>
void resample_rows_vjp(const T* g, int64_t m, const std::vector<PlanRow>& plan, int64_t n_in,
                       T* gx) {
  const KOps<T>& k = kern::ops<T>();
  std::fill(gx, gx + n_in * m, T(0));
  for (size_t o = 0; o < plan.size(); ++o) {
    const PlanRow& row = plan[o];
    const T* grow = g + static_cast<int64_t>(o) * m;
    for (size_t p = 0; p < row.idx.size(); ++p) {
      double c = row.w[p];
      if (p == row.ref) c += 1.0 - row.wsum;
      k.axpy(static_cast<T>(c), grow, gx + row.idx[p] * m, m);
    }
  }
}

Tensor transpose01(const Tensor& x) {
  const int64_t a = x.dim(0), b = x.dim(1), c = x.dim(2);
  Tensor out({b, a, c}, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    T* o = out.data<T>();
    for (int64_t i = 0; i < a; ++i)
      for (int64_t j = 0; j < b; ++j)
        std::copy(in + (i * b + j) * c, in + (i * b + j + 1) * c, o + (j * a + i) * c);
  });
  return out;
}

void check_factor(int num, int den) {
  const bool ok = (num == 1 && (den == 1 || den == 2 || den == 4)) ||
                  (den == 1 && (num == 2 || num == 4));
  if (!ok)
    throw ContractError("resample_bicubic: factor must be one of 1/4, 1/2, 1, 2, 4");
}

}  // namespace

Tensor resample_bicubic(const Tensor& x, int num, int den) {
  check_image(x, "resample_bicubic");
  check_factor(num, den);
  if (num == den) return x;
  const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (h % den != 0 || w % den != 0)
    throw ShapeError("resample_bicubic: extents " + x.shape_str() + " not divisible by " +
                     std::to_string(den));
  const int64_t oh = h * num / den, ow = w * num / den;
  const auto plan_h = make_plan(h, oh, num, den);
  const auto plan_w = make_plan(w, ow, num, den);
  Tensor r1({oh, w, c}, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    resample_rows(x.data<T>(), w * c, plan_h, r1.data<T>());
  });
  Tensor t = transpose01(r1);  // w x oh x c
  Tensor r2({ow, oh, c}, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    resample_rows(t.data<T>(), oh * c, plan_w, r2.data<T>());
  });
  return transpose01(r2);
}

Tensor resample_bicubic_vjp(const Tensor& gout, int num, int den, int64_t in_h, int64_t in_w) {
  const int64_t oh = gout.dim(0), ow = gout.dim(1), c = gout.dim(2);
  if (num == den) return gout;
  const auto plan_h = make_plan(in_h, oh, num, den);
  const auto plan_w = make_plan(in_w, ow, num, den);
  // Reverse of forward: undo the W-axis pass, then the H-axis pass.
  Tensor g2 = transpose01(gout);  // ow x oh x c
  Tensor gt({in_w, oh, c}, gout.dtype());
  dispatch_dtype(gout.dtype(), [&](auto tag) {
    using T = decltype(tag);
    resample_rows_vjp(g2.data<T>(), oh * c, plan_w, in_w, gt.data<T>());
  });
  Tensor g1 = transpose01(gt);  // oh x in_w x c
  Tensor gx({in_h, in_w, c}, gout.dtype());
  dispatch_dtype(gout.dtype(), [&](auto tag) {
    using T = decltype(tag);
    resample_rows_vjp(g1.data<T>(), in_w * c, plan_h, in_h, gx.data<T>());
  });
  return gx;
}

// -------------------------------------------------------------------- windows

Tensor window_partition(const Tensor& x, int m) {
  check_image(x, "window_partition");
  const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if (m < 1 || h % m != 0 || w % m != 0)
    throw ShapeError("window_partition: extents " + x.shape_str() + " not divisible by window " +
                     std::to_string(m));
  const int64_t wy = h / m, wx = w / m;
  Tensor out({wy * wx, static_cast<int64_t>(m) * m, c}, x.dtype());
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    T* o = out.data<T>();
    for (int64_t win_y = 0; win_y < wy; ++win_y)
      for (int64_t win_x = 0; win_x < wx; ++win_x)
        for (int64_t iy = 0; iy < m; ++iy)
          for (int64_t ix = 0; ix < m; ++ix) {
            const int64_t src = ((win_y * m + iy) * w + win_x * m + ix) * c;
            const int64_t dst = ((win_y * wx + win_x) * m * m + iy * m + ix) * c;
            std::copy(in + src, in + src + c, o + dst);
          }
  });
  return out;
}

Tensor window_merge(const Tensor& win, int m, int64_t h_out, int64_t w_out) {
  const int64_t c = win.dim(2);
  const int64_t wy = h_out / m, wx = w_out / m;
  if (win.rank() != 3 || win.dim(0) != wy * wx || win.dim(1) != static_cast<int64_t>(m) * m)
    throw ShapeError("window_merge: windows " + win.shape_str() + " inconsistent with " +
                     std::to_string(h_out) + "x" + std::to_string(w_out));
  Tensor out({h_out, w_out, c}, win.dtype());
  dispatch_dtype(win.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = win.data<T>();
    T* o = out.data<T>();
    for (int64_t win_y = 0; win_y < wy; ++win_y)
      for (int64_t win_x = 0; win_x < wx; ++win_x)
        for (int64_t iy = 0; iy < m; ++iy)
          for (int64_t ix = 0; ix < m; ++ix) {
            const int64_t dst = ((win_y * m + iy) * w_out + win_x * m + ix) * c;
            const int64_t src = ((win_y * wx + win_x) * m * m + iy * m + ix) * c;
            std::copy(in + src, in + src + c, o + dst);
          }
  });
  return out;
}

// ------------------------------------------------------------------- last dim

Tensor slice_lastdim(const Tensor& x, int64_t from, int64_t to) {
  const int64_t c = last_dim(x);
  if (from < 0 || to > c || from >= to) throw ShapeError("slice_lastdim: bad range");
  std::vector<int64_t> oshape = x.shape();
  oshape.back() = to - from;
  Tensor out(oshape, x.dtype());
  const int64_t rows = x.numel() / c;
  const int64_t oc = to - from;
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    T* o = out.data<T>();
    for (int64_t r = 0; r < rows; ++r)
      std::copy(in + r * c + from, in + r * c + to, o + r * oc);
  });
  return out;
}

Tensor concat_lastdim(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_lastdim: no inputs");
  int64_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != parts[0].rank()) throw ShapeError("concat_lastdim: rank mismatch");
    total += last_dim(p);
  }
  std::vector<int64_t> oshape = parts[0].shape();
  oshape.back() = total;
  Tensor out(oshape, parts[0].dtype());
  const int64_t rows = parts[0].numel() / last_dim(parts[0]);
  dispatch_dtype(parts[0].dtype(), [&](auto tag) {
    using T = decltype(tag);
    T* o = out.data<T>();
    int64_t off = 0;
    for (const Tensor& p : parts) {
      const int64_t pc = last_dim(p);
      if (p.numel() / pc != rows) throw ShapeError("concat_lastdim: leading extents differ");
      const T* in = p.data<T>();
      for (int64_t r = 0; r < rows; ++r)
        std::copy(in + r * pc, in + (r + 1) * pc, o + r * total + off);
      off += pc;
    }
  });
  return out;
}

// ------------------------------------------------------------------------ bmm

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  if (a.rank() != 3 || b.rank() != 3) throw ShapeError("bmm: rank-3 tensors required");
  if (trans_a && trans_b) throw ContractError("bmm: transA && transB unsupported");
  if (a.dim(0) != b.dim(0)) throw ShapeError("bmm: batch extents differ");
  check_same_dtype(a, b, "bmm");
  const int64_t batch = a.dim(0);
  const int64_t m = trans_a ? a.dim(2) : a.dim(1);
  const int64_t ka = trans_a ? a.dim(1) : a.dim(2);
  const int64_t kb = trans_b ? b.dim(2) : b.dim(1);
  const int64_t n = trans_b ? b.dim(1) : b.dim(2);
  if (ka != kb) throw ShapeError("bmm: inner extents differ");
  Tensor out({batch, m, n}, a.dtype());
  dispatch_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* ap = a.data<T>();
    const T* bp = b.data<T>();
    T* o = out.data<T>();
    const KOps<T>& k = kern::ops<T>();
    for (int64_t bi = 0; bi < batch; ++bi) {
      const T* A = ap + bi * a.dim(1) * a.dim(2);
      const T* B = bp + bi * b.dim(1) * b.dim(2);
      T* C = o + bi * m * n;
      std::fill(C, C + m * n, T(0));
      if (!trans_a && trans_b) {
        // C[i,j] = <A row i, B row j>
        for (int64_t i = 0; i < m; ++i)
          for (int64_t j = 0; j < n; ++j) C[i * n + j] = k.dot(A + i * ka, B + j * ka, ka);
      } else if (!trans_a && !trans_b) {
        for (int64_t i = 0; i < m; ++i)
          for (int64_t l = 0; l < ka; ++l) k.axpy(A[i * ka + l], B + l * n, C + i * n, n);
      } else {  // trans_a
        for (int64_t l = 0; l < ka; ++l)
          for (int64_t i = 0; i < m; ++i) k.axpy(A[l * m + i], B + l * n, C + i * n, n);
      }
    }
  });
  return out;
}

Tensor add_broadcast0(const Tensor& x, const Tensor& p) {
  if (x.rank() != 3 || p.rank() != 2 || x.dim(1) != p.dim(0) || x.dim(2) != p.dim(1))
    throw ShapeError("add_broadcast0: " + x.shape_str() + " vs " + p.shape_str());
  check_same_dtype(x, p, "add_broadcast0");
  Tensor out(x.shape(), x.dtype());
  const int64_t batch = x.dim(0), inner = p.numel();
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    const T* pp = p.data<T>();
    T* o = out.data<T>();
    for (int64_t b = 0; b < batch; ++b)
      kern::ops<T>().add(in + b * inner, pp, o + b * inner, inner);
  });
  return out;
}

}  // namespace pansharp
