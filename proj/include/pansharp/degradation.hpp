#pragma once

#include <cstdint>
#include <string>

#include "pansharp/tensor.hpp"

// Exact (non-learned) observation operators
//   lrms = S z + n_x   (blur + decimate, per band)
//   pan  = z R + n_y   (per-pixel spectral response dot product)
// plus the reduced-resolution synthetic data generator built on them.

namespace pansharp {

struct DegradationSpec {
  Tensor blur;      // kh x kw, nonnegative, sums to 1
  int scale = 4;
  Tensor response;  // B nonnegative weights summing to 1
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  uint64_t seed = 0;
};

/// 7x7 Gaussian blur (sigma 1) and uniform 1/B response; the defaults every
/// experiment records.
DegradationSpec default_spec(int bands, int scale = 4, uint64_t seed = 0);

Tensor make_gaussian_kernel(int size, double sigma);

/// Throws unless the kernel/response normalization invariants hold.
void validate_spec(const DegradationSpec& spec);

/// Blur (reflect padding) then decimate by spec.scale. Decimation samples at
/// phase offset scale/2 so the reduced grid sits near the block centers.
Tensor apply_S(const Tensor& z, const DegradationSpec& spec);

/// Exact linear adjoint of apply_S (same index walk, accumulation reversed).
Tensor apply_S_adjoint(const Tensor& x, const DegradationSpec& spec);

/// Per-pixel dot product with the spectral response; B channels -> 1.
Tensor apply_R(const Tensor& z, const DegradationSpec& spec);

/// Outer product with the response; 1 channel -> B.
Tensor apply_R_adjoint(const Tensor& y, const DegradationSpec& spec);

struct SceneTriple {
  Tensor gt;    // H x W x B
  Tensor lrms;  // H/s x W/s x B
  Tensor pan;   // H x W x 1
};

/// Reduced-resolution supervision pair from a ground-truth image: degrade,
/// add seeded Gaussian noise (defaults to none), clip to [0, 1].
SceneTriple synth_wald(const Tensor& gt, const DegradationSpec& spec);

/// Procedural multi-band scene: band-correlated Gaussian blobs, soft-edged
/// rectangles, and gradients, affinely mapped into [0.03, 0.97].
Tensor make_scene(int64_t h, int64_t w, int bands, uint64_t seed, DType dt);

void save_triple(const std::string& stem, const SceneTriple& t);
SceneTriple load_triple(const std::string& stem);

}  // namespace pansharp
