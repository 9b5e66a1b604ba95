#include "oracles/oracles.hpp"

#include <cmath>

namespace pansharp::oracle {

void dft2_direct(const Tensor& x, Tensor& full_re, Tensor& full_im) {
  const int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  full_re = Tensor::zeros({h, w, c}, DType::f64);
  full_im = Tensor::zeros({h, w, c}, DType::f64);
  const double norm = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t u = 0; u < h; ++u)
      for (int64_t v = 0; v < w; ++v) {
        double re = 0, im = 0;
        for (int64_t hh = 0; hh < h; ++hh)
          for (int64_t ww = 0; ww < w; ++ww) {
            const double ang = -2.0 * M_PI * (static_cast<double>(hh * u) / h +
                                              static_cast<double>(ww * v) / w);
            const double val = x.at((hh * w + ww) * c + ch);
            re += val * std::cos(ang);
            im += val * std::sin(ang);
          }
        full_re.set((u * w + v) * c + ch, norm * re);
        full_im.set((u * w + v) * c + ch, norm * im);
      }
}

Tensor idft2_direct(const Tensor& full_re, const Tensor& full_im) {
  const int64_t h = full_re.dim(0), w = full_re.dim(1), c = full_re.dim(2);
  Tensor out = Tensor::zeros({h, w, c}, DType::f64);
  const double norm = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t hh = 0; hh < h; ++hh)
      for (int64_t ww = 0; ww < w; ++ww) {
        double acc = 0;
        for (int64_t u = 0; u < h; ++u)
          for (int64_t v = 0; v < w; ++v) {
            const double ang = 2.0 * M_PI * (static_cast<double>(hh * u) / h +
                                             static_cast<double>(ww * v) / w);
            acc += full_re.at((u * w + v) * c + ch) * std::cos(ang) -
                   full_im.at((u * w + v) * c + ch) * std::sin(ang);
          }
        out.set((hh * w + ww) * c + ch, norm * acc);
      }
  return out;
}

Tensor wmsa_direct(const Tensor& x, const ParamMap& p, const std::string& prefix, int window,
                   int heads) {
  const int64_t h = x.dim(0), w = x.dim(1), ch = x.dim(2);
  const int64_t m = window, m2 = m * m;
  const int64_t d = ch / heads;
  const Tensor& qkv_w = p.at(prefix + ".qkv.w");
  const Tensor& qkv_b = p.at(prefix + ".qkv.b");
  const Tensor& out_w = p.at(prefix + ".out.w");
  const Tensor& out_b = p.at(prefix + ".out.b");
  Tensor out = Tensor::zeros(x.shape(), x.dtype());
  const int64_t wy = h / m, wx = w / m;
  for (int64_t win_y = 0; win_y < wy; ++win_y)
    for (int64_t win_x = 0; win_x < wx; ++win_x) {
      // Gather tokens, project to q/k/v.
      std::vector<double> tok(static_cast<size_t>(m2 * ch));
      for (int64_t t = 0; t < m2; ++t) {
        const int64_t iy = win_y * m + t / m, ix = win_x * m + t % m;
        for (int64_t cc = 0; cc < ch; ++cc)
          tok[static_cast<size_t>(t * ch + cc)] = x.at((iy * w + ix) * ch + cc);
      }
      std::vector<double> qkv(static_cast<size_t>(m2 * 3 * ch));
      for (int64_t t = 0; t < m2; ++t)
        for (int64_t o = 0; o < 3 * ch; ++o) {
          double acc = qkv_b.at(o);
          for (int64_t cc = 0; cc < ch; ++cc)
            acc += tok[static_cast<size_t>(t * ch + cc)] * qkv_w.at(cc * 3 * ch + o);
          qkv[static_cast<size_t>(t * 3 * ch + o)] = acc;
        }
      std::vector<double> mixed(static_cast<size_t>(m2 * ch));
      for (int hd = 0; hd < heads; ++hd) {
        const Tensor& pos = p.at(prefix + ".pos" + std::to_string(hd));
        for (int64_t ti = 0; ti < m2; ++ti) {
          // Attention row: softmax over all keys of this window.
          std::vector<double> logits(static_cast<size_t>(m2));
          double mx = -1e300;
          for (int64_t tj = 0; tj < m2; ++tj) {
            double acc = 0;
            for (int64_t cc = 0; cc < d; ++cc)
              acc += qkv[static_cast<size_t>(ti * 3 * ch + hd * d + cc)] *
                     qkv[static_cast<size_t>(tj * 3 * ch + ch + hd * d + cc)];
            acc = acc / std::sqrt(static_cast<double>(d)) + pos.at(ti * m2 + tj);
            logits[static_cast<size_t>(tj)] = acc;
            mx = std::max(mx, acc);
          }
          double norm = 0;
          for (double& l : logits) {
            l = std::exp(l - mx);
            norm += l;
          }
          for (int64_t cc = 0; cc < d; ++cc) {
            double acc = 0;
            for (int64_t tj = 0; tj < m2; ++tj)
              acc += (logits[static_cast<size_t>(tj)] / norm) *
                     qkv[static_cast<size_t>(tj * 3 * ch + 2 * ch + hd * d + cc)];
            mixed[static_cast<size_t>(ti * ch + hd * d + cc)] = acc;
          }
        }
      }
      // Output projection, scatter back.
      for (int64_t t = 0; t < m2; ++t) {
        const int64_t iy = win_y * m + t / m, ix = win_x * m + t % m;
        for (int64_t o = 0; o < ch; ++o) {
          double acc = out_b.at(o);
          for (int64_t cc = 0; cc < ch; ++cc)
            acc += mixed[static_cast<size_t>(t * ch + cc)] * out_w.at(cc * ch + o);
          out.set((iy * w + ix) * ch + o, acc);
        }
      }
    }
  return out;
}

std::vector<double> materialize_S(const DegradationSpec& spec, int64_t h, int64_t w) {
  const int s = spec.scale;
  const int64_t oh = h / s, ow = w / s;
  const int64_t kh = spec.blur.dim(0), kw = spec.blur.dim(1);
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const int64_t off = s / 2;
  std::vector<double> mat(static_cast<size_t>(oh * ow * h * w), 0.0);
  auto refl = [](int64_t i, int64_t n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
    return i;
  };
  for (int64_t oi = 0; oi < oh; ++oi)
    for (int64_t oj = 0; oj < ow; ++oj)
      for (int64_t di = 0; di < kh; ++di)
        for (int64_t dj = 0; dj < kw; ++dj) {
          const int64_t si = refl(oi * s + off - ph + di, h);
          const int64_t sj = refl(oj * s + off - pw + dj, w);
          mat[static_cast<size_t>((oi * ow + oj) * h * w + si * w + sj)] +=
              spec.blur.at(di * kw + dj);
        }
  return mat;
}

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int64_t n) {
  for (int64_t col = 0; col < n; ++col) {
    int64_t piv = col;
    for (int64_t r = col + 1; r < n; ++r)
      if (std::abs(a[static_cast<size_t>(r * n + col)]) >
          std::abs(a[static_cast<size_t>(piv * n + col)]))
        piv = r;
    if (std::abs(a[static_cast<size_t>(piv * n + col)]) < 1e-14)
      throw ContractError("solve_dense: singular matrix");
    if (piv != col) {
      for (int64_t cc = 0; cc < n; ++cc)
        std::swap(a[static_cast<size_t>(col * n + cc)], a[static_cast<size_t>(piv * n + cc)]);
      std::swap(b[static_cast<size_t>(col)], b[static_cast<size_t>(piv)]);
    }
    const double inv = 1.0 / a[static_cast<size_t>(col * n + col)];
    for (int64_t r = col + 1; r < n; ++r) {
      const double f = a[static_cast<size_t>(r * n + col)] * inv;
      if (f == 0) continue;
      for (int64_t cc = col; cc < n; ++cc)
        a[static_cast<size_t>(r * n + cc)] -= f * a[static_cast<size_t>(col * n + cc)];
      b[static_cast<size_t>(r)] -= f * b[static_cast<size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<size_t>(n));
  for (int64_t r = n - 1; r >= 0; --r) {
    double acc = b[static_cast<size_t>(r)];
    for (int64_t cc = r + 1; cc < n; ++cc)
      acc -= a[static_cast<size_t>(r * n + cc)] * x[static_cast<size_t>(cc)];
    x[static_cast<size_t>(r)] = acc / a[static_cast<size_t>(r * n + r)];
  }
  return x;
}

void ReferenceAdam::step(std::vector<double>& theta, const std::vector<double>& grad, double lr) {
  if (m.empty()) {
    m.assign(theta.size(), 0.0);
    v.assign(theta.size(), 0.0);
  }
  t += 1;
  for (size_t i = 0; i < theta.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / (1.0 - std::pow(beta1, static_cast<double>(t)));
    const double vhat = v[i] / (1.0 - std::pow(beta2, static_cast<double>(t)));
    theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

Tensor finite_difference(std::function<double()> f, Tensor& x, double step) {
  Tensor g(x.shape(), DType::f64);
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double orig = x.at(i);
    x.set(i, orig + step);
    const double fp = f();
    x.set(i, orig - step);
    const double fm = f();
    x.set(i, orig);
    g.set(i, (fp - fm) / (2.0 * step));
  }
  return g;
}

}  // namespace pansharp::oracle
