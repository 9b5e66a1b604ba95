#include "pansharp/metrics.hpp"

#include <cmath>
#include <vector>

#include "pansharp/ops.hpp"

namespace pansharp {

namespace {

void check_pair(const Tensor& pred, const Tensor& gt, const char* op) {
  check_same_shape(pred, gt, op);
  if (pred.rank() != 3) throw ShapeError(std::string(op) + ": expected H x W x B images");
}

}  // namespace

double psnr(const Tensor& pred, const Tensor& gt, double peak) {
  check_pair(pred, gt, "psnr");
  if (peak <= 0) throw ContractError("psnr: peak must be positive");
  double mse = 0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    const double d = pred.at(i) - gt.at(i);
    mse += d * d;
  }
  mse /= static_cast<double>(pred.numel());
  if (mse == 0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(peak * peak / mse));
}

double sam(const Tensor& pred, const Tensor& gt, int64_t* skipped) {
  check_pair(pred, gt, "sam");
  const int64_t b = pred.dim(2);
  const int64_t pixels = pred.dim(0) * pred.dim(1);
  double total = 0;
  int64_t used = 0, skip = 0;
  for (int64_t p = 0; p < pixels; ++p) {
    double dot = 0, np = 0, ng = 0;
    for (int64_t ch = 0; ch < b; ++ch) {
      const double a = pred.at(p * b + ch);
      const double g = gt.at(p * b + ch);
      dot += a * g;
      np += a * a;
      ng += g * g;
    }
    if (np == 0 || ng == 0) {
      ++skip;
      continue;
    }
    double cosang = dot / (std::sqrt(np) * std::sqrt(ng));
    cosang = std::min(1.0, std::max(-1.0, cosang));
    total += std::acos(cosang);
    ++used;
  }
  if (skipped) *skipped = skip;
  return used > 0 ? total / static_cast<double>(used) : 0.0;
}

double ergas(const Tensor& pred, const Tensor& gt, double scale_ratio) {
  check_pair(pred, gt, "ergas");
  const int64_t b = pred.dim(2);
  const int64_t pixels = pred.dim(0) * pred.dim(1);
  double acc = 0;
  for (int64_t ch = 0; ch < b; ++ch) {
    double se = 0, mean = 0;
    for (int64_t p = 0; p < pixels; ++p) {
      const double d = pred.at(p * b + ch) - gt.at(p * b + ch);
      se += d * d;
      mean += gt.at(p * b + ch);
    }
    mean /= static_cast<double>(pixels);
    if (mean == 0) throw ContractError("ergas: reference band " + std::to_string(ch) +
                                       " has zero mean");
    const double rmse2 = se / static_cast<double>(pixels);
    acc += rmse2 / (mean * mean);
  }
  return 100.0 * scale_ratio * std::sqrt(acc / static_cast<double>(b));
}

double ssim(const Tensor& pred, const Tensor& gt, double peak) {
  check_pair(pred, gt, "ssim");
  const int64_t h = pred.dim(0), w = pred.dim(1), b = pred.dim(2);
  constexpr int kWin = 11;
  if (h < kWin || w < kWin)
    throw ShapeError("ssim: spatial extents must be >= 11, got " + pred.shape_str());
  // 11-tap Gaussian, sigma 1.5.
  double g1[kWin];
  double gsum = 0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - 5.0;
    g1[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gsum += g1[i];
  }
  for (double& v : g1) v /= gsum;
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0;
  int64_t count = 0;
  for (int64_t ch = 0; ch < b; ++ch) {
    for (int64_t i = 0; i + kWin <= h; ++i)
      for (int64_t j = 0; j + kWin <= w; ++j) {
        double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
        for (int di = 0; di < kWin; ++di)
          for (int dj = 0; dj < kWin; ++dj) {
            const double wgt = g1[di] * g1[dj];
            const double xv = pred.at(((i + di) * w + (j + dj)) * b + ch);
            const double yv = gt.at(((i + di) * w + (j + dj)) * b + ch);
            mx += wgt * xv;
            my += wgt * yv;
            xx += wgt * xv * xv;
            yy += wgt * yv * yv;
            xy += wgt * xv * yv;
          }
        const double vx = xx - mx * mx;
        const double vy = yy - my * my;
        const double cxy = xy - mx * my;
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  }
  return total / static_cast<double>(count);
}

double q_index_avg(const Tensor& pred, const Tensor& gt, int window) {
  check_pair(pred, gt, "q_index_avg");
  const int64_t h = pred.dim(0), w = pred.dim(1), b = pred.dim(2);
  if (window < 2 || window > h || window > w)
    throw ShapeError("q_index_avg: window must fit the spatial extents");
  double total = 0;
  int64_t used = 0;
  const double n = static_cast<double>(window) * window;
  // Summed-area tables per band keep the sliding windows O(1) each.
  const int64_t sw = w + 1;
  std::vector<double> sx(static_cast<size_t>((h + 1) * sw)), sy(sx.size()), sxx(sx.size()),
      syy(sx.size()), sxy(sx.size());
  for (int64_t ch = 0; ch < b; ++ch) {
    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sy.begin(), sy.end(), 0.0);
    std::fill(sxx.begin(), sxx.end(), 0.0);
    std::fill(syy.begin(), syy.end(), 0.0);
    std::fill(sxy.begin(), sxy.end(), 0.0);
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        const double xv = pred.at((i * w + j) * b + ch);
        const double yv = gt.at((i * w + j) * b + ch);
        const size_t at = static_cast<size_t>((i + 1) * sw + (j + 1));
        const size_t up = static_cast<size_t>(i * sw + (j + 1));
        const size_t left = static_cast<size_t>((i + 1) * sw + j);
        const size_t diag = static_cast<size_t>(i * sw + j);
        sx[at] = xv + sx[up] + sx[left] - sx[diag];
        sy[at] = yv + sy[up] + sy[left] - sy[diag];
        sxx[at] = xv * xv + sxx[up] + sxx[left] - sxx[diag];
        syy[at] = yv * yv + syy[up] + syy[left] - syy[diag];
        sxy[at] = xv * yv + sxy[up] + sxy[left] - sxy[diag];
      }
    auto box = [&](const std::vector<double>& s, int64_t i, int64_t j) {
      return s[static_cast<size_t>((i + window) * sw + (j + window))] -
             s[static_cast<size_t>(i * sw + (j + window))] -
             s[static_cast<size_t>((i + window) * sw + j)] +
             s[static_cast<size_t>(i * sw + j)];
    };
    for (int64_t i = 0; i + window <= h; ++i)
      for (int64_t j = 0; j + window <= w; ++j) {
        const double mx = box(sx, i, j) / n;
        const double my = box(sy, i, j) / n;
        const double vx = box(sxx, i, j) / n - mx * mx;
        const double vy = box(syy, i, j) / n - my * my;
        const double cxy = box(sxy, i, j) / n - mx * my;
        const double denom = (vx + vy) * (mx * mx + my * my);
        if (denom == 0) continue;
        total += 4.0 * cxy * mx * my / denom;
        ++used;
      }
  }
  if (used == 0) throw ContractError("q_index_avg: every window is degenerate");
  return total / static_cast<double>(used);
}

IqaReport evaluate(const Tensor& pred, const Tensor& gt, double peak, double scale_ratio,
                   int q_window) {
  IqaReport r;
  r.psnr = psnr(pred, gt, peak);
  r.ssim = ssim(pred, gt, peak);
  r.q_avg = q_index_avg(pred, gt, q_window);
  r.sam = sam(pred, gt, &r.sam_skipped);
  r.ergas = ergas(pred, gt, scale_ratio);
  return r;
}

}  // namespace pansharp
