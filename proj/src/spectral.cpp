#include "pansharp/spectral.hpp"

#include <cmath>
#include <vector>

namespace pansharp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// cos/sin tables for angle 2*pi*(i*j mod n)/n, laid out as n0 rows of n1.
struct Trig {
  std::vector<double> c, s;
  int64_t cols = 0;
  Trig(int64_t n0, int64_t n1, int64_t period) : cols(n1) {
    c.resize(static_cast<size_t>(n0 * n1));
    s.resize(static_cast<size_t>(n0 * n1));
    for (int64_t i = 0; i < n0; ++i)
      for (int64_t j = 0; j < n1; ++j) {
        const double ang = kTwoPi * static_cast<double>((i * j) % period) /
                           static_cast<double>(period);
        c[static_cast<size_t>(i * n1 + j)] = std::cos(ang);
        s[static_cast<size_t>(i * n1 + j)] = std::sin(ang);
      }
  }
  const double* crow(int64_t i) const { return c.data() + i * cols; }
  const double* srow(int64_t i) const { return s.data() + i * cols; }
};

void axpy_d(double a, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_d(const double* a, const double* b, int64_t n) {
  double s = 0;
  for (int64_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Forward half transform of one H x W plane (double), output H x Ww complex.
void plane_rfft2(const double* x, int64_t h, int64_t w, double* out_re, double* out_im) {
  const int64_t ww = half_width(w);
  const Trig tw(ww, w, w);  // row v: cos/sin(2*pi*v*wi/W)
  const Trig th(h, h, h);
  std::vector<double> re1(static_cast<size_t>(h * ww)), im1(static_cast<size_t>(h * ww));
  for (int64_t r = 0; r < h; ++r) {
    const double* row = x + r * w;
    for (int64_t v = 0; v < ww; ++v) {
      re1[static_cast<size_t>(r * ww + v)] = dot_d(row, tw.crow(v), w);
      im1[static_cast<size_t>(r * ww + v)] = -dot_d(row, tw.srow(v), w);
    }
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (int64_t u = 0; u < h; ++u) {
    double* orow_re = out_re + u * ww;
    double* orow_im = out_im + u * ww;
    std::fill(orow_re, orow_re + ww, 0.0);
    std::fill(orow_im, orow_im + ww, 0.0);
    const double* cu = th.crow(u);
    const double* su = th.srow(u);
    for (int64_t r = 0; r < h; ++r) {
      // (ra + j ia) * e^{-j theta}
      axpy_d(cu[r], &re1[static_cast<size_t>(r * ww)], orow_re, ww);
      axpy_d(su[r], &im1[static_cast<size_t>(r * ww)], orow_re, ww);
      axpy_d(cu[r], &im1[static_cast<size_t>(r * ww)], orow_im, ww);
      axpy_d(-su[r], &re1[static_cast<size_t>(r * ww)], orow_im, ww);
    }
    for (int64_t v = 0; v < ww; ++v) {
      orow_re[v] *= norm;
      orow_im[v] *= norm;
    }
  }
  // Bins that are structurally real for real input (DC/Nyquist on both axes)
  // get their imaginary part forced to exact zero; leaving rounding residue
  // there makes the downstream phase sign-unstable.
  for (int64_t u : {int64_t(0), h / 2}) {
    if (u == h / 2 && h % 2 != 0) continue;
    for (int64_t v : {int64_t(0), ww - 1}) {
      if (v == ww - 1 && w % 2 != 0) continue;
      out_im[u * ww + v] = 0.0;
    }
  }
}

// Zero the cotangent entries matching the bins plane_rfft2 pins to zero.
void zero_structural_imag(Tensor& g, int64_t w) {
  const int64_t h = g.dim(0), ww = g.dim(1), c = g.dim(2);
  for (int64_t u : {int64_t(0), h / 2}) {
    if (u == h / 2 && h % 2 != 0) continue;
    for (int64_t v : {int64_t(0), ww - 1}) {
      if (v == ww - 1 && w % 2 != 0) continue;
      for (int64_t ch = 0; ch < c; ++ch) g.set(((u * ww + v) * c + ch) * 2 + 1, 0.0);
    }
  }
}

// Inverse of one H x Ww complex plane to a real H x W plane, treating columns
// 0 (and W/2 for even W) as their own conjugate mirrors.
void plane_irfft2(const double* in_re, const double* in_im, int64_t h, int64_t ww, int64_t w,
                  double* out) {
  const Trig th(h, h, h);
  std::vector<double> reb(static_cast<size_t>(h * ww)), imb(static_cast<size_t>(h * ww));
  for (int64_t r = 0; r < h; ++r) {
    double* rb = &reb[static_cast<size_t>(r * ww)];
    double* ib = &imb[static_cast<size_t>(r * ww)];
    std::fill(rb, rb + ww, 0.0);
    std::fill(ib, ib + ww, 0.0);
    const double* cr = th.crow(r);
    const double* sr = th.srow(r);
    for (int64_t u = 0; u < h; ++u) {
      // (rs + j is) * e^{+j theta}
      axpy_d(cr[u], in_re + u * ww, rb, ww);
      axpy_d(-sr[u], in_im + u * ww, rb, ww);
      axpy_d(sr[u], in_re + u * ww, ib, ww);
      axpy_d(cr[u], in_im + u * ww, ib, ww);
    }
  }
  // Hermitian weights: edge columns counted once, interior columns twice.
  const bool even = (w % 2 == 0);
  std::vector<double> cw(static_cast<size_t>(w * ww)), sw(static_cast<size_t>(w * ww));
  for (int64_t wi = 0; wi < w; ++wi)
    for (int64_t v = 0; v < ww; ++v) {
      const double m = (v == 0 || (even && v == ww - 1)) ? 1.0 : 2.0;
      const double ang = kTwoPi * static_cast<double>((wi * v) % w) / static_cast<double>(w);
      cw[static_cast<size_t>(wi * ww + v)] = m * std::cos(ang);
      sw[static_cast<size_t>(wi * ww + v)] = m * std::sin(ang);
    }
  const double norm = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (int64_t r = 0; r < h; ++r) {
    const double* rb = &reb[static_cast<size_t>(r * ww)];
    const double* ib = &imb[static_cast<size_t>(r * ww)];
    double* orow = out + r * w;
    for (int64_t wi = 0; wi < w; ++wi) {
      orow[wi] = norm * (dot_d(rb, &cw[static_cast<size_t>(wi * ww)], ww) -
                         dot_d(ib, &sw[static_cast<size_t>(wi * ww)], ww));
    }
  }
}

// Extract channel ch of an H x W x C tensor into a double plane.
template <typename T>
void gather_plane(const T* x, int64_t hw, int64_t c, int64_t ch, double* plane) {
  for (int64_t i = 0; i < hw; ++i) plane[i] = static_cast<double>(x[i * c + ch]);
}

template <typename T>
void scatter_plane(const double* plane, int64_t hw, int64_t c, int64_t ch, T* x) {
  for (int64_t i = 0; i < hw; ++i) x[i * c + ch] = static_cast<T>(plane[i]);
}

void check_image3(const Tensor& x, const char* op) {
  if (x.rank() != 3) throw ShapeError(std::string(op) + ": expected H x W x C, got " + x.shape_str());
}

void check_packed(const Tensor& s, const char* op) {
  if (s.rank() != 4 || s.dim(3) != 2)
    throw ShapeError(std::string(op) + ": expected H x Ww x C x 2, got " + s.shape_str());
}

void check_out_width(int64_t ww, int64_t w, const char* op) {
  if (w != 2 * (ww - 1) && w != 2 * (ww - 1) + 1)
    throw ShapeError(std::string(op) + ": out_width " + std::to_string(w) +
                     " inconsistent with stored half-width " + std::to_string(ww));
}

// Scale interior spectrum columns (all but v=0 and, for even widths, the
// Nyquist column) by the given factor.
Tensor scale_interior_cols(const Tensor& s, int64_t full_w, double factor) {
  const int64_t h = s.dim(0), ww = s.dim(1), inner = s.numel() / (h * ww);
  const bool even = (full_w % 2 == 0);
  Tensor out = s;
  for (int64_t u = 0; u < h; ++u)
    for (int64_t v = 0; v < ww; ++v) {
      if (v == 0 || (even && v == ww - 1)) continue;
      const int64_t base = (u * ww + v) * inner;
      for (int64_t i = 0; i < inner; ++i) out.set(base + i, out.at(base + i) * factor);
    }
  return out;
}

}  // namespace

Tensor rfft2_packed(const Tensor& x) {
  check_image3(x, "rfft2");
  const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const int64_t ww = half_width(w);
  Tensor out({h, ww, c, 2}, x.dtype());
  std::vector<double> plane(static_cast<size_t>(h * w));
  std::vector<double> sre(static_cast<size_t>(h * ww)), sim(static_cast<size_t>(h * ww));
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = x.data<T>();
    T* o = out.data<T>();
    for (int64_t ch = 0; ch < c; ++ch) {
      gather_plane(in, h * w, c, ch, plane.data());
      plane_rfft2(plane.data(), h, w, sre.data(), sim.data());
      for (int64_t i = 0; i < h * ww; ++i) {
        o[(i * c + ch) * 2 + 0] = static_cast<T>(sre[static_cast<size_t>(i)]);
        o[(i * c + ch) * 2 + 1] = static_cast<T>(sim[static_cast<size_t>(i)]);
      }
    }
  });
  return out;
}

Tensor irfft2_packed(const Tensor& s, int64_t out_width) {
  check_packed(s, "irfft2");
  const int64_t h = s.dim(0), ww = s.dim(1), c = s.dim(2);
  check_out_width(ww, out_width, "irfft2");
  Tensor out({h, out_width, c}, s.dtype());
  std::vector<double> sre(static_cast<size_t>(h * ww)), sim(static_cast<size_t>(h * ww));
  std::vector<double> plane(static_cast<size_t>(h * out_width));
  dispatch_dtype(s.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = s.data<T>();
    T* o = out.data<T>();
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t i = 0; i < h * ww; ++i) {
        sre[static_cast<size_t>(i)] = static_cast<double>(in[(i * c + ch) * 2 + 0]);
        sim[static_cast<size_t>(i)] = static_cast<double>(in[(i * c + ch) * 2 + 1]);
      }
      plane_irfft2(sre.data(), sim.data(), h, ww, out_width, plane.data());
      scatter_plane(plane.data(), h * out_width, c, ch, o);
    }
  });
  return out;
}

Tensor irfft2_packed_vjp(const Tensor& gout) {
  // Adjoint of the hermitian inverse: forward transform of the gradient with
  // interior columns doubled.
  Tensor g = rfft2_packed(gout);
  return scale_interior_cols(g, gout.dim(1), 2.0);
}

Tensor rfft2_packed_vjp(const Tensor& gout, int64_t in_width) {
  // Adjoint of the forward half transform: hermitian inverse with interior
  // columns halved (they are stored once but mirrored twice). The forward
  // pins structurally real bins, so their imag cotangents are discarded.
  Tensor g = scale_interior_cols(gout, in_width, 0.5);
  zero_structural_imag(g, in_width);
  return irfft2_packed(g, in_width);
}

Tensor amp_phase_packed(const Tensor& s) {
  check_packed(s, "amp_phase");
  Tensor out(s.shape(), s.dtype());
  dispatch_dtype(s.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = s.data<T>();
    T* o = out.data<T>();
    const int64_t n = s.numel() / 2;
    for (int64_t i = 0; i < n; ++i) {
      const double re = in[2 * i], im = in[2 * i + 1];
      o[2 * i] = static_cast<T>(std::hypot(re, im));
      o[2 * i + 1] = (re == 0.0 && im == 0.0) ? T(0) : static_cast<T>(std::atan2(im, re));
    }
  });
  return out;
}

Tensor amp_phase_packed_vjp(const Tensor& s, const Tensor& gout) {
  Tensor gs = Tensor::zeros(s.shape(), s.dtype());
  dispatch_dtype(s.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = s.data<T>();
    const T* g = gout.data<T>();
    T* o = gs.data<T>();
    const int64_t n = s.numel() / 2;
    for (int64_t i = 0; i < n; ++i) {
      const double re = in[2 * i], im = in[2 * i + 1];
      const double a2 = re * re + im * im;
      if (a2 == 0.0) continue;  // amp/phase not differentiable at the origin
      const double a = std::sqrt(a2);
      const double ga = g[2 * i], gp = g[2 * i + 1];
      o[2 * i] = static_cast<T>(ga * (re / a) - gp * (im / a2));
      o[2 * i + 1] = static_cast<T>(ga * (im / a) + gp * (re / a2));
    }
  });
  return gs;
}

Tensor recompose_packed(const Tensor& ap) {
  check_packed(ap, "recompose");
  Tensor out(ap.shape(), ap.dtype());
  dispatch_dtype(ap.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = ap.data<T>();
    T* o = out.data<T>();
    const int64_t n = ap.numel() / 2;
    for (int64_t i = 0; i < n; ++i) {
      const double a = in[2 * i], p = in[2 * i + 1];
      o[2 * i] = static_cast<T>(a * std::cos(p));
      o[2 * i + 1] = static_cast<T>(a * std::sin(p));
    }
  });
  return out;
}

Tensor recompose_packed_vjp(const Tensor& ap, const Tensor& gout) {
  Tensor g = Tensor::zeros(ap.shape(), ap.dtype());
  dispatch_dtype(ap.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* in = ap.data<T>();
    const T* go = gout.data<T>();
    T* o = g.data<T>();
    const int64_t n = ap.numel() / 2;
    for (int64_t i = 0; i < n; ++i) {
      const double a = in[2 * i], p = in[2 * i + 1];
      const double cp = std::cos(p), sp = std::sin(p);
      const double gre = go[2 * i], gim = go[2 * i + 1];
      o[2 * i] = static_cast<T>(gre * cp + gim * sp);
      o[2 * i + 1] = static_cast<T>(-gre * a * sp + gim * a * cp);
    }
  });
  return g;
}

Spectrum unpack_spectrum(const Tensor& packed) {
  check_packed(packed, "unpack_spectrum");
  const int64_t h = packed.dim(0), ww = packed.dim(1), c = packed.dim(2);
  Spectrum s{Tensor({h, ww, c}, packed.dtype()), Tensor({h, ww, c}, packed.dtype())};
  for (int64_t i = 0; i < h * ww * c; ++i) {
    s.re.set(i, packed.at(2 * i));
    s.im.set(i, packed.at(2 * i + 1));
  }
  return s;
}

Tensor pack_spectrum(const Spectrum& s) {
  check_same_shape(s.re, s.im, "pack_spectrum");
  const int64_t h = s.re.dim(0), ww = s.re.dim(1), c = s.re.dim(2);
  Tensor out({h, ww, c, 2}, s.re.dtype());
  for (int64_t i = 0; i < h * ww * c; ++i) {
    out.set(2 * i, s.re.at(i));
    out.set(2 * i + 1, s.im.at(i));
  }
  return out;
}

Spectrum rfft2(const Tensor& x) { return unpack_spectrum(rfft2_packed(x)); }

Tensor irfft2(const Spectrum& s, int64_t out_width) {
  return irfft2_packed(pack_spectrum(s), out_width);
}

void amp_phase(const Spectrum& s, Tensor& amp, Tensor& phase) {
  Spectrum ap = unpack_spectrum(amp_phase_packed(pack_spectrum(s)));
  amp = std::move(ap.re);
  phase = std::move(ap.im);
}

Spectrum recompose(const Tensor& amp, const Tensor& phase) {
  return unpack_spectrum(recompose_packed(pack_spectrum(Spectrum{amp, phase})));
}

}  // namespace pansharp
