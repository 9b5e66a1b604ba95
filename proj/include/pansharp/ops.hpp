#pragma once

#include <utility>
#include <vector>

#include "pansharp/tensor.hpp"

// Pure tensor operations. Images and feature maps are H x W x C. Every
// function here is a value-semantics map from inputs to a fresh output and is
// safe to call concurrently. The *_vjp functions are the hand-derived
// vector-Jacobian products used by the autodiff tape and are pure as well.

namespace pansharp {

enum class Padding { reflect, zero };

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scaled(const Tensor& a, const Tensor& b, double s);  // a + s*b
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor gelu(const Tensor& x);
Tensor gelu_vjp(const Tensor& x, const Tensor& gout);

// ---- reductions ----
double sum_all(const Tensor& t);
double abs_sum_all(const Tensor& t);
double sumsq_all(const Tensor& t);
double max_abs_all(const Tensor& t);
double dot_all(const Tensor& a, const Tensor& b);
double mean_abs_diff(const Tensor& a, const Tensor& b);
double frob_norm(const Tensor& t);
double max_abs_diff(const Tensor& a, const Tensor& b);

// ---- token ops ----

/// Softmax over the last dimension, max-subtracted for stability.
/// Throws ValueError on non-finite input.
Tensor softmax_lastdim(const Tensor& x);
Tensor softmax_vjp(const Tensor& y, const Tensor& gout);  // y = softmax(x)

/// Normalize the last (channel) dimension per token, then scale/shift by
/// gamma/beta (rank-1, length C).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
void layer_norm_vjp(const Tensor& x, const Tensor& gamma, double eps, const Tensor& gout,
                    Tensor& gx, Tensor& ggamma, Tensor& gbeta);

/// Per-token linear map on the last dimension: y = x.W + b. W is Cin x Cout,
/// b is Cout or an empty tensor for no bias. With x as H x W x Cin this is a
/// pointwise (1x1) convolution.
Tensor linear_lastdim(const Tensor& x, const Tensor& w, const Tensor& b);
void linear_lastdim_vjp(const Tensor& x, const Tensor& w, bool has_bias, const Tensor& gout,
                        Tensor& gx, Tensor& gw, Tensor& gb);

// ---- spatial ops ----

/// Depthwise convolution (one kh x kw kernel per channel, k is C x kh x kw).
/// Output spatial extents are ceil(in/stride).
Tensor conv_depthwise(const Tensor& x, const Tensor& k, int stride, Padding pad);
void conv_depthwise_vjp(const Tensor& x, const Tensor& k, int stride, Padding pad,
                        const Tensor& gout, Tensor& gx, Tensor& gk);

/// Bicubic resampling (Catmull-Rom, a = -0.5) by a rational factor num/den in
/// {1/4, 1/2, 1, 2, 4}. Downscaling requires extents divisible by den.
/// Constant inputs are reproduced exactly for any factor.
Tensor resample_bicubic(const Tensor& x, int num, int den);
Tensor resample_bicubic_vjp(const Tensor& gout, int num, int den, int64_t in_h, int64_t in_w);

/// Reshape H x W x C into (HW/M^2) x M^2 x C non-overlapping M x M windows
/// (row-major over windows, then over in-window positions). Pure reindexing.
Tensor window_partition(const Tensor& x, int m);
Tensor window_merge(const Tensor& w, int m, int64_t h_out, int64_t w_out);

// ---- last-dim slicing ----
Tensor slice_lastdim(const Tensor& x, int64_t from, int64_t to);
Tensor concat_lastdim(const std::vector<Tensor>& parts);

// ---- batched matrix multiply ----

/// C[b] = opA(A[b]) . opB(B[b]) for rank-3 tensors; transA/transB transpose
/// the per-batch matrices. transA && transB is not supported.
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b);

/// Broadcast-add a rank-2 tensor over the batch dimension of a rank-3 tensor.
Tensor add_broadcast0(const Tensor& x, const Tensor& p);

}  // namespace pansharp
