#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pansharp/ops.hpp"
#include "pansharp/tensor.hpp"

namespace pansharp {

using NodeId = int32_t;

/// Reverse-mode tape over whole-tensor operations. Recording an op computes
/// the forward value immediately; backward() replays the tape in reverse and
/// accumulates vector-Jacobian products. Gradients sum when a leaf feeds
/// several nodes, which is what gives shared parameters their summed
/// per-stage gradients.
///
/// A Tape is single-writer: record and run backward from one logical thread.
/// Distinct tapes are independent.
class Tape {
 public:
  /// Register a tensor; named differentiable leaves are the parameters
  /// reported by backward().
  NodeId leaf(Tensor value, std::string name, bool requires_grad);
  NodeId constant(Tensor value) { return leaf(std::move(value), "", false); }

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  /// Multiply by a learnable scalar (shape {1} leaf).
  NodeId scale_by(NodeId x, NodeId s);
  NodeId gelu(NodeId x);
  NodeId softmax_lastdim(NodeId x);
  NodeId layer_norm(NodeId x, NodeId gamma, NodeId beta, double eps);
  /// b < 0 means no bias.
  NodeId linear_lastdim(NodeId x, NodeId w, NodeId b);
  NodeId conv_depthwise(NodeId x, NodeId k, int stride, Padding pad);
  NodeId resample_bicubic(NodeId x, int num, int den);
  NodeId window_partition(NodeId x, int m);
  NodeId window_merge(NodeId x, int m, int64_t h_out, int64_t w_out);
  NodeId slice_lastdim(NodeId x, int64_t from, int64_t to);
  NodeId concat_lastdim(const std::vector<NodeId>& parts);
  NodeId bmm(NodeId a, NodeId b, bool trans_a, bool trans_b);
  NodeId add_broadcast0(NodeId x, NodeId p);

  // Frequency-domain ops on the packed H x Ww x C x 2 layout.
  NodeId rfft2(NodeId x);
  NodeId irfft2(NodeId s, int64_t out_width);
  NodeId amp_phase(NodeId s);
  NodeId recompose(NodeId ap);
  /// Independent per-channel scale+shift of the amp (wa, ba) and phase
  /// (wp, bp) planes of a packed amp/phase tensor.
  NodeId freq_dconv(NodeId ap, NodeId wa, NodeId ba, NodeId wp, NodeId bp);

  NodeId sum(NodeId x);  // scalar of shape {1}
  NodeId mean_abs_diff(NodeId a, NodeId b);
  NodeId mean_of(const std::vector<NodeId>& scalars);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }

  /// Reverse sweep from a scalar loss. Returns one gradient tensor per named
  /// differentiable leaf; leaves detached from the loss get zeros.
  std::map<std::string, Tensor> backward(NodeId loss);

  /// Gradient of any node after backward() (undefined tensors mean the node
  /// was not on the loss path).
  const Tensor& grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<NodeId> inputs;
    std::function<void(Tape&, NodeId)> back;
    bool requires_grad = false;
    std::string name;
  };

  NodeId push(Tensor value, std::vector<NodeId> inputs,
              std::function<void(Tape&, NodeId)> back);
  void accum(NodeId id, const Tensor& g);
  bool any_requires(const std::vector<NodeId>& ids) const;

  std::vector<Node> nodes_;
};

}  // namespace pansharp
