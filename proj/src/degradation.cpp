#include "pansharp/degradation.hpp"

#include <cmath>
#include <vector>

#include "pansharp/rng.hpp"
#include "pansharp/tensor_io.hpp"

namespace pansharp {

namespace {

int64_t reflect(int64_t i, int64_t n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - i - 1;
  return i;
}

void check_image(const Tensor& x, const char* op) {
  if (x.rank() != 3) throw ShapeError(std::string(op) + ": expected H x W x C, got " + x.shape_str());
}

}  // namespace

Tensor make_gaussian_kernel(int size, double sigma) {
  Tensor k({size, size}, DType::f64);
  const double c = (size - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      const double v = std::exp(-d2 / (2.0 * sigma * sigma));
      k.set(i * size + j, v);
      sum += v;
    }
  for (int64_t i = 0; i < k.numel(); ++i) k.set(i, k.at(i) / sum);
  return k;
}

DegradationSpec default_spec(int bands, int scale, uint64_t seed) {
  DegradationSpec spec;
  spec.blur = make_gaussian_kernel(7, 1.0);
  spec.scale = scale;
  spec.response = Tensor::full({bands}, DType::f64, 1.0 / bands);
  spec.seed = seed;
  return spec;
}

void validate_spec(const DegradationSpec& spec) {
  if (spec.scale < 1) throw ContractError("degradation: scale must be >= 1");
  if (spec.blur.rank() != 2) throw ShapeError("degradation: blur kernel must be kh x kw");
  if (spec.response.rank() != 1) throw ShapeError("degradation: response must be rank 1");
  double ks = 0;
  for (int64_t i = 0; i < spec.blur.numel(); ++i) {
    if (spec.blur.at(i) < 0) throw ContractError("degradation: blur kernel must be nonnegative");
    ks += spec.blur.at(i);
  }
  if (std::abs(ks - 1.0) > 1e-9) throw ContractError("degradation: blur kernel must sum to 1");
  double rs = 0;
  for (int64_t i = 0; i < spec.response.numel(); ++i) {
    if (spec.response.at(i) < 0) throw ContractError("degradation: response must be nonnegative");
    rs += spec.response.at(i);
  }
  if (std::abs(rs - 1.0) > 1e-9) throw ContractError("degradation: response must sum to 1");
  if (spec.sigma_x < 0 || spec.sigma_y < 0) throw ContractError("degradation: negative noise sigma");
}

Tensor apply_S(const Tensor& z, const DegradationSpec& spec) {
  check_image(z, "apply_S");
  validate_spec(spec);
  const int64_t h = z.dim(0), w = z.dim(1), c = z.dim(2);
  const int s = spec.scale;
  if (h % s != 0 || w % s != 0)
    throw ShapeError("apply_S: extents " + z.shape_str() + " not divisible by scale " +
                     std::to_string(s));
  const int64_t kh = spec.blur.dim(0), kw = spec.blur.dim(1);
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const int64_t off = s / 2;
  const int64_t oh = h / s, ow = w / s;
  Tensor out({oh, ow, c}, z.dtype());
  std::vector<double> acc(static_cast<size_t>(c));
  for (int64_t oi = 0; oi < oh; ++oi)
    for (int64_t oj = 0; oj < ow; ++oj) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int64_t di = 0; di < kh; ++di) {
        const int64_t si = reflect(oi * s + off - ph + di, h);
        for (int64_t dj = 0; dj < kw; ++dj) {
          const int64_t sj = reflect(oj * s + off - pw + dj, w);
          const double kv = spec.blur.at(di * kw + dj);
          for (int64_t ch = 0; ch < c; ++ch) acc[static_cast<size_t>(ch)] += kv * z.at((si * w + sj) * c + ch);
        }
      }
      for (int64_t ch = 0; ch < c; ++ch) out.set((oi * ow + oj) * c + ch, acc[static_cast<size_t>(ch)]);
    }
  return out;
}

Tensor apply_S_adjoint(const Tensor& x, const DegradationSpec& spec) {
  check_image(x, "apply_S_adjoint");
  validate_spec(spec);
  const int64_t oh = x.dim(0), ow = x.dim(1), c = x.dim(2);
  const int s = spec.scale;
  const int64_t h = oh * s, w = ow * s;
  const int64_t kh = spec.blur.dim(0), kw = spec.blur.dim(1);
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const int64_t off = s / 2;
  Tensor out = Tensor::zeros({h, w, c}, x.dtype());
  // Transposed loop of apply_S: scatter each low-res sample back through the
  // same reflected taps.
  dispatch_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    T* o = out.data<T>();
    for (int64_t oi = 0; oi < oh; ++oi)
      for (int64_t oj = 0; oj < ow; ++oj)
        for (int64_t di = 0; di < kh; ++di) {
          const int64_t si = reflect(oi * s + off - ph + di, h);
          for (int64_t dj = 0; dj < kw; ++dj) {
            const int64_t sj = reflect(oj * s + off - pw + dj, w);
            const double kv = spec.blur.at(di * kw + dj);
            for (int64_t ch = 0; ch < c; ++ch)
              o[(si * w + sj) * c + ch] +=
                  static_cast<T>(kv * x.at((oi * ow + oj) * c + ch));
          }
        }
  });
  return out;
}

Tensor apply_R(const Tensor& z, const DegradationSpec& spec) {
  check_image(z, "apply_R");
  validate_spec(spec);
  const int64_t b = spec.response.numel();
  if (z.dim(2) != b)
    throw ShapeError("apply_R: channel extent " + std::to_string(z.dim(2)) +
                     " != response length " + std::to_string(b));
  const int64_t pixels = z.dim(0) * z.dim(1);
  Tensor out({z.dim(0), z.dim(1), 1}, z.dtype());
  for (int64_t p = 0; p < pixels; ++p) {
    double acc = 0;
    for (int64_t ch = 0; ch < b; ++ch) acc += z.at(p * b + ch) * spec.response.at(ch);
    out.set(p, acc);
  }
  return out;
}

Tensor apply_R_adjoint(const Tensor& y, const DegradationSpec& spec) {
  check_image(y, "apply_R_adjoint");
  validate_spec(spec);
  if (y.dim(2) != 1) throw ShapeError("apply_R_adjoint: input must have one channel");
  const int64_t b = spec.response.numel();
  const int64_t pixels = y.dim(0) * y.dim(1);
  Tensor out({y.dim(0), y.dim(1), b}, y.dtype());
  for (int64_t p = 0; p < pixels; ++p)
    for (int64_t ch = 0; ch < b; ++ch) out.set(p * b + ch, y.at(p) * spec.response.at(ch));
  return out;
}

SceneTriple synth_wald(const Tensor& gt, const DegradationSpec& spec) {
  check_image(gt, "synth_wald");
  for (int64_t i = 0; i < gt.numel(); ++i)
    if (gt.at(i) < 0.0 || gt.at(i) > 1.0)
      throw ContractError("synth_wald: ground truth values must lie in [0, 1]");
  SceneTriple t;
  t.gt = gt;
  t.lrms = apply_S(gt, spec);
  t.pan = apply_R(gt, spec);
  Rng rng(spec.seed);
  if (spec.sigma_x > 0) {
    Rng nx = rng.child(1);
    for (int64_t i = 0; i < t.lrms.numel(); ++i)
      t.lrms.set(i, t.lrms.at(i) + spec.sigma_x * nx.normal());
  }
  if (spec.sigma_y > 0) {
    Rng ny = rng.child(2);
    for (int64_t i = 0; i < t.pan.numel(); ++i)
      t.pan.set(i, t.pan.at(i) + spec.sigma_y * ny.normal());
  }
  for (int64_t i = 0; i < t.lrms.numel(); ++i)
    t.lrms.set(i, std::min(1.0, std::max(0.0, t.lrms.at(i))));
  for (int64_t i = 0; i < t.pan.numel(); ++i)
    t.pan.set(i, std::min(1.0, std::max(0.0, t.pan.at(i))));
  return t;
}

Tensor make_scene(int64_t h, int64_t w, int bands, uint64_t seed, DType dt) {
  Rng rng(seed);
  Tensor img = Tensor::zeros({h, w, bands}, DType::f64);
  // Smooth per-band gradients.
  for (int b = 0; b < bands; ++b) {
    const double a0 = rng.uniform(0.25, 0.75);
    const double gx = rng.uniform(-0.3, 0.3);
    const double gy = rng.uniform(-0.3, 0.3);
    const double gxy = rng.uniform(-0.2, 0.2);
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        const double fy = static_cast<double>(i) / static_cast<double>(h);
        const double fx = static_cast<double>(j) / static_cast<double>(w);
        img.set((i * w + j) * bands + b, a0 + gx * fx + gy * fy + gxy * fx * fy);
      }
  }
  // Band-correlated Gaussian blobs: one spatial profile, per-band amplitudes.
  const int blobs = 4 + static_cast<int>(rng.below(4));
  for (int n = 0; n < blobs; ++n) {
    const double cy = rng.uniform(0.1, 0.9) * static_cast<double>(h);
    const double cx = rng.uniform(0.1, 0.9) * static_cast<double>(w);
    const double sg = rng.uniform(static_cast<double>(h) / 16.0, static_cast<double>(h) / 5.0);
    const double amp = rng.uniform(-0.35, 0.35);
    std::vector<double> bw(static_cast<size_t>(bands));
    for (auto& v : bw) v = rng.uniform(0.4, 1.0);
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
        const double g = amp * std::exp(-d2 / (2.0 * sg * sg));
        for (int b = 0; b < bands; ++b)
          img.set((i * w + j) * bands + b, img.at((i * w + j) * bands + b) + g * bw[static_cast<size_t>(b)]);
      }
  }
  // A couple of rectangles with a ~1.5 px cosine edge.
  const int rects = 2;
  for (int n = 0; n < rects; ++n) {
    const double y0 = rng.uniform(0.1, 0.6) * h, x0 = rng.uniform(0.1, 0.6) * w;
    const double ry = rng.uniform(0.15, 0.3) * h, rx = rng.uniform(0.15, 0.3) * w;
    const double amp = rng.uniform(-0.22, 0.22);
    const double edge = 1.5;
    std::vector<double> bw(static_cast<size_t>(bands));
    for (auto& v : bw) v = rng.uniform(0.4, 1.0);
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        // Signed distance to the rectangle border, positive inside.
        const double dy = ry / 2 - std::abs(i - (y0 + ry / 2));
        const double dx = rx / 2 - std::abs(j - (x0 + rx / 2));
        const double d = std::min(dx, dy);
        if (d <= -edge) continue;
        double t = 1.0;
        if (d < edge) t = 0.5 * (1.0 + std::sin(0.5 * M_PI * d / edge));
        for (int b = 0; b < bands; ++b)
          img.set((i * w + j) * bands + b,
                  img.at((i * w + j) * bands + b) + amp * t * bw[static_cast<size_t>(b)]);
      }
  }
  // Affine map into [0.03, 0.97].
  double lo = img.at(0), hi = img.at(0);
  for (int64_t i = 0; i < img.numel(); ++i) {
    lo = std::min(lo, img.at(i));
    hi = std::max(hi, img.at(i));
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (int64_t i = 0; i < img.numel(); ++i)
    img.set(i, 0.03 + 0.94 * (img.at(i) - lo) / span);
  return img.astype(dt);
}

void save_triple(const std::string& stem, const SceneTriple& t) {
  save_tensor(stem + ".gt.mst", t.gt);
  save_tensor(stem + ".lrms.mst", t.lrms);
  save_tensor(stem + ".pan.mst", t.pan);
}

SceneTriple load_triple(const std::string& stem) {
  SceneTriple t;
  t.gt = load_tensor(stem + ".gt.mst");
  t.lrms = load_tensor(stem + ".lrms.mst");
  t.pan = load_tensor(stem + ".pan.mst");
  return t;
}

}  // namespace pansharp
