#pragma once

#include <map>
#include <string>
#include <vector>

#include "pansharp/degradation.hpp"
#include "pansharp/unfold.hpp"

// Supervised training: mean-absolute-error loss on the final stage output,
// Adam with bias correction, step-decay learning rate, deterministic epochs.

namespace pansharp {

struct TrainConfig {
  double lr0 = 1.5e-3;
  double decay = 0.85;
  int decay_every = 100;  // epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch = 4;
  int epochs = 100;
  uint64_t seed = 0;
};

struct AdamState {
  std::map<std::string, Tensor> m, v;
  int64_t t = 0;
};

double mae_loss(const Tensor& pred, const Tensor& gt);

/// lr0 * decay^floor(epoch / decay_every).
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Standard bias-corrected Adam; one step counter tick per call. Throws
/// ContractError when a gradient key is missing.
void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state, double lr,
               const TrainConfig& cfg);

using Dataset = std::vector<SceneTriple>;

/// One pass over seeded-shuffled minibatches (the last partial batch is
/// dropped). Returns the mean batch loss. Throws DivergenceError on a
/// non-finite loss, naming the batch. max_batches > 0 caps the pass (used to
/// honor a global step budget); 0 runs the whole epoch.
double train_epoch(ModelParams& model, const Dataset& data, AdamState& state,
                   const TrainConfig& cfg, int epoch, int max_batches = 0);

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0;
  int coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0;
  std::string worst_param;
  bool passed(double tol) const { return max_rel_err <= tol; }
};

/// Central-difference check of the tape gradients of mae(forward(x, y), gt)
/// on <= max_coords random coordinates per parameter tensor. Meaningful in
/// double precision only.
GradCheckReport grad_check(ModelParams& model, const Tensor& x, const Tensor& y,
                           const Tensor& gt, double fd_step = 1e-5, int max_coords = 32,
                           uint64_t seed = 42);

}  // namespace pansharp
