#include "pansharp/pgd.hpp"

#include <cmath>
#include <string>

#include "pansharp/ops.hpp"
#include "pansharp/rng.hpp"

namespace pansharp {

Tensor grad_f(const Tensor& z, const Tensor& x, const Tensor& y, const DegradationSpec& spec) {
  Tensor data_s = apply_S_adjoint(sub(apply_S(z, spec), x), spec);
  Tensor data_r = apply_R_adjoint(sub(apply_R(z, spec), y), spec);
  return add(data_s, data_r);
}

Tensor gradient_step(const Tensor& z, const Tensor& x, const Tensor& y, double eta,
                     const DegradationSpec& spec) {
  if (eta < 0) throw ContractError("gradient_step: eta must be >= 0");
  if (eta == 0) return z;
  return add_scaled(z, grad_f(z, x, y, spec), -eta);
}

Tensor prox_soft_threshold(const Tensor& z, double tau) {
  if (tau < 0) throw ContractError("prox_soft_threshold: tau must be >= 0");
  Tensor out(z.shape(), z.dtype());
  for (int64_t i = 0; i < z.numel(); ++i) {
    const double v = z.at(i);
    const double m = std::abs(v) - tau;
    out.set(i, m > 0 ? (v > 0 ? m : -m) : 0.0);
  }
  return out;
}

double estimate_lipschitz(const DegradationSpec& spec, const std::vector<int64_t>& z_shape,
                          int iters, uint64_t seed) {
  Rng rng(seed);
  Tensor v(z_shape, DType::f64);
  for (int64_t i = 0; i < v.numel(); ++i) v.set(i, rng.normal());
  double lam = 1.0;
  for (int it = 0; it < iters; ++it) {
    Tensor w = add(apply_S_adjoint(apply_S(v, spec), spec),
                   apply_R_adjoint(apply_R(v, spec), spec));
    lam = frob_norm(w);
    if (lam == 0) return 1.0;
    v = scale(w, 1.0 / lam);
  }
  return lam;
}

double objective_value(const Tensor& z, const Tensor& x, const Tensor& y,
                       const DegradationSpec& spec, double lambda, ProxKind prox) {
  // History must be meaningful in double precision even for f32 iterates.
  Tensor zd = z.astype(DType::f64);
  Tensor xd = x.astype(DType::f64);
  Tensor yd = y.astype(DType::f64);
  const double rs = sumsq_all(sub(apply_S(zd, spec), xd));
  const double rr = sumsq_all(sub(apply_R(zd, spec), yd));
  double obj = 0.5 * rs + 0.5 * rr;
  if (prox == ProxKind::soft_threshold) obj += lambda * abs_sum_all(zd);
  return obj;
}

PgdResult pgd_solve(const Tensor& x, const Tensor& y, const Tensor& z0, const PgdConfig& cfg,
                    const DegradationSpec& spec) {
  if (cfg.max_iters < 0) throw ContractError("pgd_solve: max_iters must be >= 0");
  double eta = cfg.eta;
  if (eta <= 0) eta = 1.0 / estimate_lipschitz(spec, z0.shape());
  PgdResult res;
  res.z = z0;
  res.objective.push_back(objective_value(res.z, x, y, spec, cfg.lambda, cfg.prox));
  for (int k = 0; k < cfg.max_iters; ++k) {
    Tensor z_half = gradient_step(res.z, x, y, eta, spec);
    Tensor z_next = cfg.prox == ProxKind::soft_threshold
                        ? prox_soft_threshold(z_half, eta * cfg.lambda)
                        : std::move(z_half);
    const double obj = objective_value(z_next, x, y, spec, cfg.lambda, cfg.prox);
    if (!std::isfinite(obj) || obj > 1e12)
      throw DivergenceError("pgd_solve diverged at iteration " + std::to_string(k + 1) +
                            " with step size " + std::to_string(eta));
    const double change = frob_norm(sub(z_next, res.z));
    const double base = frob_norm(res.z);
    res.z = std::move(z_next);
    res.objective.push_back(obj);
    res.iterations = k + 1;
    if (cfg.tol > 0 && base > 0 && change / base < cfg.tol) break;
  }
  return res;
}

}  // namespace pansharp
