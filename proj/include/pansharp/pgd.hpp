#pragma once

#include <vector>

#include "pansharp/degradation.hpp"
#include "pansharp/tensor.hpp"

// Classical proximal gradient descent on
//   argmin_z  1/2 ||x - S z||^2 + 1/2 ||y - z R||^2 + lambda J(z)
// with the exact degradation operators. This is the model-based baseline the
// unfolded network mirrors stage for stage.

namespace pansharp {

enum class ProxKind { identity, soft_threshold };

struct PgdConfig {
  double eta = 0.0;     // step size; <= 0 selects 1/L via power iteration
  double lambda = 0.0;  // prior weight
  int max_iters = 100;
  double tol = 0.0;     // relative-change stop; 0 disables
  ProxKind prox = ProxKind::identity;
};

/// Gradient of the two data terms: S^T(Sz - x) + (zR - y)R^T.
Tensor grad_f(const Tensor& z, const Tensor& x, const Tensor& y, const DegradationSpec& spec);

/// One explicit gradient step z - eta * grad_f(z).
Tensor gradient_step(const Tensor& z, const Tensor& x, const Tensor& y, double eta,
                     const DegradationSpec& spec);

/// Elementwise sign(z) * max(|z| - tau, 0); tau >= 0.
Tensor prox_soft_threshold(const Tensor& z, double tau);

/// Largest eigenvalue of z -> S^T S z + (zR)R^T by power iteration.
double estimate_lipschitz(const DegradationSpec& spec, const std::vector<int64_t>& z_shape,
                          int iters = 20, uint64_t seed = 17);

/// Objective value in double precision (the soft-threshold prox corresponds
/// to J = l1, the identity prox to no prior term).
double objective_value(const Tensor& z, const Tensor& x, const Tensor& y,
                       const DegradationSpec& spec, double lambda, ProxKind prox);

struct PgdResult {
  Tensor z;
  std::vector<double> objective;  // one entry for z0 plus one per iteration
  int iterations = 0;
};

/// Alternate gradient and proximal steps until max_iters or the relative
/// Frobenius change drops below tol. Throws DivergenceError when the
/// objective exceeds 1e12.
PgdResult pgd_solve(const Tensor& x, const Tensor& y, const Tensor& z0, const PgdConfig& cfg,
                    const DegradationSpec& spec);

}  // namespace pansharp
