#pragma once

#include <string>
#include <vector>

#include "pansharp/lgt.hpp"
#include "pansharp/tensor.hpp"

// The unfolded network: K stages, each a learned gradient step (data module)
// followed by the transformer prior. The data module weights are one shared
// set across stages; every prior is independent; each stage owns a learnable
// scalar step size.

namespace pansharp {

struct UnfoldConfig {
  int stages = 2;
  int bands = 4;
  int scale = 4;
  LgtConfig lgt;
};

struct ModelParams {
  UnfoldConfig cfg;
  DType dtype = DType::f32;
  std::string init_recipe;
  ParamMap tensors;
};

/// Build a freshly initialized model. Data-module depthwise kernels start as
/// delta kernels (so the learned operators begin as plain bicubic resampling),
/// the learned response starts uniform 1/B with all-ones transpose, and every
/// step size starts at 0.1.
ModelParams init_model(const UnfoldConfig& cfg, uint64_t seed, DType dt);

/// One learned gradient step:
///   z - eta * [ S_hat^T (S_hat z - x) + (z R_hat - y) R_hat^T ].
NodeId data_module_t(Tape& tape, NodeId z, NodeId x, NodeId y, NodeId eta, const ParamTable& pt,
                     const std::string& prefix = "data");

/// Full forward pass. z0 is the bicubic x4 upsample of x; stages alternate
/// data module and prior. When `intermediates` is non-null it receives
/// z0, z_1/2, z_1, ..., z_K (2K+1 entries).
NodeId unfold_forward_t(Tape& tape, NodeId x, NodeId y, const ParamTable& pt,
                        const UnfoldConfig& cfg, std::vector<NodeId>* intermediates = nullptr);

/// Pure forward (no gradients recorded).
Tensor unfold_forward(const Tensor& x, const Tensor& y, const ModelParams& params,
                      std::vector<Tensor>* intermediates = nullptr);

Tensor data_module(const Tensor& z, const Tensor& x, const Tensor& y, double eta,
                   const ParamMap& p, const std::string& prefix = "data");

int64_t count_params(const ModelParams& params);

/// Analytic per-image forward FLOP estimate at GT resolution h x w.
double estimate_flops(const UnfoldConfig& cfg, int64_t h, int64_t w);

}  // namespace pansharp
