#pragma once

#include <functional>
#include <vector>

#include "pansharp/degradation.hpp"
#include "pansharp/lgt.hpp"
#include "pansharp/tensor.hpp"

// Independent reference implementations used as test oracles and by the
// `selfcheck` command. Everything here is written as directly as possible
// from the defining formulas and must stay decoupled from the library code
// paths it checks.

namespace pansharp::oracle {

/// Direct O(N^2) 2-D DFT of each channel with unitary 1/sqrt(HW) scaling:
/// F(u,v) = 1/sqrt(HW) sum_{h,w} x(h,w) exp(-j 2 pi (hu/H + wv/W)).
/// Outputs the full H x W complex spectrum per channel.
void dft2_direct(const Tensor& x, Tensor& full_re, Tensor& full_im);

/// Direct inverse with the same scaling; returns the real part.
Tensor idft2_direct(const Tensor& full_re, const Tensor& full_im);

/// Window attention evaluated with plain nested loops from the same weights:
/// partition, qkv projection, per-head softmax(QK^T/sqrt(d) + P)V, head
/// concat, output projection, merge.
Tensor wmsa_direct(const Tensor& x, const ParamMap& p, const std::string& prefix, int window,
                   int heads);

/// Materialized blur+decimate matrix of one band as a dense (oh*ow) x (h*w)
/// row-major matrix, built from its own index arithmetic.
std::vector<double> materialize_S(const DegradationSpec& spec, int64_t h, int64_t w);

/// Dense Gaussian elimination with partial pivoting; solves A x = b in place.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int64_t n);

/// A second Adam coded straight from the published update equations.
struct ReferenceAdam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  int64_t t = 0;
  void step(std::vector<double>& theta, const std::vector<double>& grad, double lr);
};

/// Central finite differences of a scalar function with respect to one
/// tensor, evaluated coordinate by coordinate.
Tensor finite_difference(std::function<double()> f, Tensor& x, double step);

}  // namespace pansharp::oracle
