#pragma once

#include <cstdint>

#include "pansharp/tensor.hpp"

// Reduced-resolution image-quality metrics. All take prediction first and
// reference second; psnr, sam, and ergas are documented as (pred, gt)-ordered
// while ssim and the Q index are symmetric.

namespace pansharp {

struct IqaReport {
  double psnr = 0;    // dB, capped at 100
  double ssim = 0;    // [-1, 1]
  double q_avg = 0;   // [-1, 1], per-band averaged universal quality index
  double sam = 0;     // radians >= 0
  double ergas = 0;   // unitless >= 0
  int64_t sam_skipped = 0;  // zero-norm pixels excluded from the SAM mean
};

/// 10 log10(peak^2 / MSE); exact match (or psnr beyond the cap) reports 100.
double psnr(const Tensor& pred, const Tensor& gt, double peak = 1.0);

/// Mean spectral angle in radians; pixels where either spectrum has zero norm
/// are skipped (count reported through the IqaReport path).
double sam(const Tensor& pred, const Tensor& gt, int64_t* skipped = nullptr);

/// 100 * scale_ratio * sqrt(mean_b(RMSE_b^2 / mean_b^2)). Throws on a
/// zero-mean reference band.
double ergas(const Tensor& pred, const Tensor& gt, double scale_ratio = 0.25);

/// Single-scale SSIM: K1=0.01, K2=0.03, 11-tap Gaussian window (sigma 1.5),
/// valid-region mean, averaged over bands. Spatial extents must be >= 11.
double ssim(const Tensor& pred, const Tensor& gt, double peak = 1.0);

/// Universal image-quality index over sliding windows (default 32), averaged
/// over windows and bands; degenerate windows are skipped and an error is
/// raised if every window degenerates.
double q_index_avg(const Tensor& pred, const Tensor& gt, int window = 32);

IqaReport evaluate(const Tensor& pred, const Tensor& gt, double peak = 1.0,
                   double scale_ratio = 0.25, int q_window = 32);

}  // namespace pansharp
