#pragma once

#include "pansharp/tensor.hpp"

// 2D real discrete Fourier transform with unitary 1/sqrt(HW) normalization in
// both directions, half-spectrum storage (H x (W/2+1) x C), and the
// amplitude/phase decomposition used by the frequency-domain branch.
//
// The transform is computed row-column with double-precision accumulation
// regardless of tensor dtype; correctness is defined against a direct
// double-sum DFT oracle, not by asymptotics.

namespace pansharp {

/// Non-redundant half spectrum of a real H x W x C signal.
struct Spectrum {
  Tensor re;  // H x (W/2+1) x C
  Tensor im;  // same extents
};

Spectrum rfft2(const Tensor& x);
Tensor irfft2(const Spectrum& s, int64_t out_width);

/// amp = sqrt(re^2 + im^2); phase = four-quadrant arctangent in (-pi, pi],
/// with phase(0, 0) = 0.
void amp_phase(const Spectrum& s, Tensor& amp, Tensor& phase);
Spectrum recompose(const Tensor& amp, const Tensor& phase);

// Packed layout used on the autodiff tape: H x Ww x C x 2 with re/im (or
// amp/phase) interleaved on the last axis.
Tensor rfft2_packed(const Tensor& x);
Tensor irfft2_packed(const Tensor& s, int64_t out_width);
Tensor rfft2_packed_vjp(const Tensor& gout, int64_t in_width);
Tensor irfft2_packed_vjp(const Tensor& gout);
Tensor amp_phase_packed(const Tensor& s);
Tensor amp_phase_packed_vjp(const Tensor& s, const Tensor& gout);
Tensor recompose_packed(const Tensor& ap);
Tensor recompose_packed_vjp(const Tensor& ap, const Tensor& gout);

Spectrum unpack_spectrum(const Tensor& packed);
Tensor pack_spectrum(const Spectrum& s);

inline int64_t half_width(int64_t w) { return w / 2 + 1; }

}  // namespace pansharp
