#include "pansharp/train.hpp"

#include <cmath>

#include "pansharp/kernels.hpp"
#include "pansharp/ops.hpp"
#include "pansharp/rng.hpp"

namespace pansharp {

double mae_loss(const Tensor& pred, const Tensor& gt) {
  check_same_shape(pred, gt, "mae_loss");
  return mean_abs_diff(pred, gt);
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ContractError("lr_schedule: epoch must be >= 0");
  return cfg.lr0 * std::pow(cfg.decay, epoch / cfg.decay_every);
}

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
  state.t += 1;
  const double bc1 = 1.0 / (1.0 - std::pow(cfg.beta1, static_cast<double>(state.t)));
  const double bc2 = 1.0 / (1.0 - std::pow(cfg.beta2, static_cast<double>(state.t)));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) throw ContractError("adam_step: missing gradient for " + name);
    const Tensor& g = git->second;
    check_same_shape(p, g, "adam_step");
    auto mit = state.m.find(name);
    if (mit == state.m.end()) {
      state.m[name] = Tensor::zeros(p.shape(), p.dtype());
      state.v[name] = Tensor::zeros(p.shape(), p.dtype());
      mit = state.m.find(name);
    }
    Tensor& m = mit->second;
    Tensor& v = state.v[name];
    dispatch_dtype(p.dtype(), [&](auto tag) {
      using T = decltype(tag);
      kern::ops<T>().adam(p.data<T>(), m.data<T>(), v.data<T>(), g.data<T>(), p.numel(),
                          static_cast<T>(lr), static_cast<T>(cfg.beta1),
                          static_cast<T>(cfg.beta2), static_cast<T>(cfg.adam_eps),
                          static_cast<T>(bc1), static_cast<T>(bc2));
    });
  }
}

double train_epoch(ModelParams& model, const Dataset& data, AdamState& state,
                   const TrainConfig& cfg, int epoch, int max_batches) {
  if (data.empty()) throw ContractError("train_epoch: dataset is empty");
  if (cfg.batch < 1) throw ContractError("train_epoch: batch must be >= 1");
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = Rng(cfg.seed).child(static_cast<uint64_t>(epoch) + 1);
  shuffle_rng.shuffle(order.begin(), order.end());
  size_t batches = data.size() / static_cast<size_t>(cfg.batch);
  if (max_batches > 0) batches = std::min(batches, static_cast<size_t>(max_batches));
  const double lr = lr_schedule(epoch, cfg);
  double loss_sum = 0;
  for (size_t bi = 0; bi < batches; ++bi) {
    Tape tape;
    ParamTable pt = register_params(tape, model.tensors, true);
    std::vector<NodeId> losses;
    for (int i = 0; i < cfg.batch; ++i) {
      const SceneTriple& s = data[order[bi * static_cast<size_t>(cfg.batch) + static_cast<size_t>(i)]];
      NodeId x = tape.constant(s.lrms);
      NodeId y = tape.constant(s.pan);
      NodeId z = unfold_forward_t(tape, x, y, pt, model.cfg);
      losses.push_back(tape.mean_abs_diff(z, tape.constant(s.gt)));
    }
    NodeId loss = tape.mean_of(losses);
    const double loss_val = tape.value(loss).at(0);
    if (!std::isfinite(loss_val))
      throw DivergenceError("training diverged: non-finite loss in epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(bi));
    auto grads = tape.backward(loss);
    adam_step(model.tensors, grads, state, lr, cfg);
    loss_sum += loss_val;
  }
  if (batches == 0) throw ContractError("train_epoch: dataset smaller than one batch");
  return loss_sum / static_cast<double>(batches);
}

GradCheckReport grad_check(ModelParams& model, const Tensor& x, const Tensor& y,
                           const Tensor& gt, double fd_step, int max_coords, uint64_t seed) {
  auto loss_fn = [&]() {
    return mae_loss(unfold_forward(x, y, model), gt);
  };
  // Analytic gradients once.
  Tape tape;
  ParamTable pt = register_params(tape, model.tensors, true);
  NodeId z = unfold_forward_t(tape, tape.constant(x), tape.constant(y), pt, model.cfg);
  NodeId loss = tape.mean_abs_diff(z, tape.constant(gt));
  auto grads = tape.backward(loss);

  GradCheckReport report;
  Rng rng(seed);
  for (auto& [name, p] : model.tensors) {
    GradCheckEntry entry;
    entry.name = name;
    const Tensor& g = grads.at(name);
    const int64_t n = p.numel();
    std::vector<int64_t> coords;
    if (n <= max_coords) {
      for (int64_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      Rng prng = rng.child(std::hash<std::string>{}(name));
      for (int i = 0; i < max_coords; ++i) coords.push_back(static_cast<int64_t>(prng.below(static_cast<uint64_t>(n))));
    }
    auto central = [&](int64_t ci, double h) {
      const double orig = p.at(ci);
      p.set(ci, orig + h);
      const double lp = loss_fn();
      p.set(ci, orig - h);
      const double lm = loss_fn();
      p.set(ci, orig);
      return (lp - lm) / (2.0 * h);
    };
    // Absolute floor so near-zero coordinates measure against a gradient
    // scale instead of central-difference roundoff.
    auto rel_err = [](double fd, double an) {
      return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
    };
    for (int64_t ci : coords) {
      const double an = g.at(ci);
      double rel = rel_err(central(ci, fd_step), an);
      if (rel > 1e-5) {
        // The frequency branch's polar decomposition has steep higher
        // derivatives near small-amplitude bins, so the coarse step can be
        // truncation-limited there. A genuine gradient bug shows the same
        // mismatch at every step; truncation error collapses with the step.
        rel = std::min(rel, rel_err(central(ci, fd_step / 10.0), an));
      }
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      entry.coords_checked += 1;
    }
    if (entry.max_rel_err > report.max_rel_err) {
      report.max_rel_err = entry.max_rel_err;
      report.worst_param = name;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace pansharp
