#include "pansharp/autodiff.hpp"

#include <cmath>

#include "pansharp/kernels.hpp"
#include "pansharp/spectral.hpp"

namespace pansharp {

namespace {

void axpy_into(Tensor& dst, const Tensor& src, double s = 1.0) {
  dispatch_dtype(dst.dtype(), [&](auto tag) {
    using T = decltype(tag);
    kern::ops<T>().axpy(static_cast<T>(s), src.data<T>(), dst.data<T>(), dst.numel());
  });
}

}  // namespace

NodeId Tape::push(Tensor value, std::vector<NodeId> inputs,
                  std::function<void(Tape&, NodeId)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = any_requires(inputs);
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

bool Tape::any_requires(const std::vector<NodeId>& ids) const {
  for (NodeId id : ids)
    if (id >= 0 && nodes_[static_cast<size_t>(id)].requires_grad) return true;
  return false;
}

void Tape::accum(NodeId id, const Tensor& g) {
  if (id < 0) return;
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.requires_grad) return;
  if (!n.grad.defined())
    n.grad = g;
  else
    axpy_into(n.grad, g);
}

NodeId Tape::leaf(Tensor value, std::string name, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::map<std::string, Tensor> Tape::backward(NodeId loss) {
  Node& top = nodes_[static_cast<size_t>(loss)];
  if (top.value.numel() != 1) throw ContractError("backward: loss must be scalar");
  for (Node& n : nodes_) n.grad = Tensor();
  top.grad = Tensor::full({1}, top.value.dtype(), 1.0);
  for (NodeId i = loss; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || !n.grad.defined() || !n.back) continue;
    n.back(*this, i);
  }
  std::map<std::string, Tensor> out;
  for (Node& n : nodes_) {
    if (n.name.empty() || !n.requires_grad) continue;
    out[n.name] = n.grad.defined() ? n.grad : Tensor::zeros(n.value.shape(), n.value.dtype());
  }
  return out;
}

// ------------------------------------------------------------------ basic ops

NodeId Tape::add(NodeId a, NodeId b) {
  return push(pansharp::add(value(a), value(b)), {a, b}, [a, b](Tape& tp, NodeId me) {
    const Tensor& g = tp.grad(me);
    tp.accum(a, g);
    tp.accum(b, g);
  });
}

NodeId Tape::sub(NodeId a, NodeId b) {
  return push(pansharp::sub(value(a), value(b)), {a, b}, [a, b](Tape& tp, NodeId me) {
    const Tensor& g = tp.grad(me);
    tp.accum(a, g);
    tp.accum(b, pansharp::scale(g, -1.0));
  });
}

NodeId Tape::mul(NodeId a, NodeId b) {
  return push(pansharp::mul(value(a), value(b)), {a, b}, [a, b](Tape& tp, NodeId me) {
    const Tensor& g = tp.grad(me);
    tp.accum(a, pansharp::mul(g, tp.value(b)));
    tp.accum(b, pansharp::mul(g, tp.value(a)));
  });
}

NodeId Tape::scale(NodeId a, double s) {
  return push(pansharp::scale(value(a), s), {a}, [a, s](Tape& tp, NodeId me) {
    tp.accum(a, pansharp::scale(tp.grad(me), s));
  });
}

NodeId Tape::scale_by(NodeId x, NodeId s) {
  if (value(s).numel() != 1) throw ContractError("scale_by: scale must be a {1} tensor");
  const double sv = value(s).at(0);
  return push(pansharp::scale(value(x), sv), {x, s}, [x, s, sv](Tape& tp, NodeId me) {
    const Tensor& g = tp.grad(me);
    tp.accum(x, pansharp::scale(g, sv));
    Tensor gs({1}, g.dtype());
    gs.set(0, dot_all(g, tp.value(x)));
    tp.accum(s, gs);
  });
}

NodeId Tape::gelu(NodeId x) {
  return push(pansharp::gelu(value(x)), {x}, [x](Tape& tp, NodeId me) {
    tp.accum(x, gelu_vjp(tp.value(x), tp.grad(me)));
  });
}

NodeId Tape::softmax_lastdim(NodeId x) {
  return push(pansharp::softmax_lastdim(value(x)), {x}, [x](Tape& tp, NodeId me) {
    tp.accum(x, softmax_vjp(tp.value(me), tp.grad(me)));
  });
}

NodeId Tape::layer_norm(NodeId x, NodeId gamma, NodeId beta, double eps) {
  return push(pansharp::layer_norm(value(x), value(gamma), value(beta), eps), {x, gamma, beta},
              [x, gamma, beta, eps](Tape& tp, NodeId me) {
                Tensor gx, gg, gb;
                layer_norm_vjp(tp.value(x), tp.value(gamma), eps, tp.grad(me), gx, gg, gb);
                tp.accum(x, gx);
                tp.accum(gamma, gg);
                tp.accum(beta, gb);
              });
}

NodeId Tape::linear_lastdim(NodeId x, NodeId w, NodeId b) {
  const bool has_bias = b >= 0;
  Tensor out = pansharp::linear_lastdim(value(x), value(w), has_bias ? value(b) : Tensor());
  return push(std::move(out), {x, w, b}, [x, w, b, has_bias](Tape& tp, NodeId me) {
    Tensor gx, gw, gb;
    linear_lastdim_vjp(tp.value(x), tp.value(w), has_bias, tp.grad(me), gx, gw, gb);
    tp.accum(x, gx);
    tp.accum(w, gw);
    if (has_bias) tp.accum(b, gb);
  });
}

NodeId Tape::conv_depthwise(NodeId x, NodeId k, int stride, Padding pad) {
  return push(pansharp::conv_depthwise(value(x), value(k), stride, pad), {x, k},
              [x, k, stride, pad](Tape& tp, NodeId me) {
                Tensor gx, gk;
                conv_depthwise_vjp(tp.value(x), tp.value(k), stride, pad, tp.grad(me), gx, gk);
                tp.accum(x, gx);
                tp.accum(k, gk);
              });
}

NodeId Tape::resample_bicubic(NodeId x, int num, int den) {
  const int64_t in_h = value(x).dim(0), in_w = value(x).dim(1);
  return push(pansharp::resample_bicubic(value(x), num, den), {x},
              [x, num, den, in_h, in_w](Tape& tp, NodeId me) {
                tp.accum(x, resample_bicubic_vjp(tp.grad(me), num, den, in_h, in_w));
              });
}

NodeId Tape::window_partition(NodeId x, int m) {
  const int64_t h = value(x).dim(0), w = value(x).dim(1);
  return push(pansharp::window_partition(value(x), m), {x}, [x, m, h, w](Tape& tp, NodeId me) {
    tp.accum(x, pansharp::window_merge(tp.grad(me), m, h, w));
  });
}

NodeId Tape::window_merge(NodeId x, int m, int64_t h_out, int64_t w_out) {
  return push(pansharp::window_merge(value(x), m, h_out, w_out), {x},
              [x, m](Tape& tp, NodeId me) {
                tp.accum(x, pansharp::window_partition(tp.grad(me), m));
              });
}

NodeId Tape::slice_lastdim(NodeId x, int64_t from, int64_t to) {
  return push(pansharp::slice_lastdim(value(x), from, to), {x},
              [x, from, to](Tape& tp, NodeId me) {
                const Tensor& g = tp.grad(me);
                const Tensor& xin = tp.value(x);
                Tensor gx = Tensor::zeros(xin.shape(), xin.dtype());
                const int64_t c = xin.dim(xin.rank() - 1);
                const int64_t oc = to - from;
                const int64_t rows = xin.numel() / c;
                for (int64_t r = 0; r < rows; ++r)
                  for (int64_t i = 0; i < oc; ++i)
                    gx.set(r * c + from + i, g.at(r * oc + i));
                tp.accum(x, gx);
              });
}

NodeId Tape::concat_lastdim(const std::vector<NodeId>& parts) {
  std::vector<Tensor> vals;
  vals.reserve(parts.size());
  for (NodeId p : parts) vals.push_back(value(p));
  std::vector<NodeId> ins = parts;
  return push(pansharp::concat_lastdim(vals), ins, [ins](Tape& tp, NodeId me) {
    const Tensor& g = tp.grad(me);
    const int64_t total = g.dim(g.rank() - 1);
    int64_t off = 0;
    for (NodeId p : ins) {
      const Tensor& v = tp.value(p);
      const int64_t pc = v.dim(v.rank() - 1);
      Tensor gp(v.shape(), v.dtype());
      const int64_t rows = v.numel() / pc;
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t i = 0; i < pc; ++i) gp.set(r * pc + i, g.at(r * total + off + i));
      tp.accum(p, gp);
      off += pc;
    }
  });
}

NodeId Tape::bmm(NodeId a, NodeId b, bool trans_a, bool trans_b) {
  return push(pansharp::bmm(value(a), value(b), trans_a, trans_b), {a, b},
              [a, b, trans_a, trans_b](Tape& tp, NodeId me) {
                const Tensor& g = tp.grad(me);
                const Tensor& av = tp.value(a);
                const Tensor& bv = tp.value(b);
                if (!trans_a && !trans_b) {
                  tp.accum(a, pansharp::bmm(g, bv, false, true));   // g . B^T
                  tp.accum(b, pansharp::bmm(av, g, true, false));   // A^T . g
                } else if (!trans_a && trans_b) {
                  tp.accum(a, pansharp::bmm(g, bv, false, false));  // g . B
                  tp.accum(b, pansharp::bmm(g, av, true, false));   // g^T . A
                } else {  // trans_a && !trans_b
                  tp.accum(a, pansharp::bmm(bv, g, false, true));   // B . g^T
                  tp.accum(b, pansharp::bmm(av, g, false, false));  // A . g
                }
              });
}

NodeId Tape::add_broadcast0(NodeId x, NodeId p) {
  return push(pansharp::add_broadcast0(value(x), value(p)), {x, p},
              [x, p](Tape& tp, NodeId me) {
                const Tensor& g = tp.grad(me);
                tp.accum(x, g);
                const Tensor& pv = tp.value(p);
                Tensor gp = Tensor::zeros(pv.shape(), pv.dtype());
                const int64_t batch = g.dim(0), inner = pv.numel();
                dispatch_dtype(g.dtype(), [&](auto tag) {
                  using T = decltype(tag);
                  const T* gp_in = g.data<T>();
                  T* out = gp.data<T>();
                  for (int64_t bi = 0; bi < batch; ++bi)
                    kern::ops<T>().axpy(T(1), gp_in + bi * inner, out, inner);
                });
                tp.accum(p, gp);
              });
}

// ------------------------------------------------------------ frequency ops

NodeId Tape::rfft2(NodeId x) {
  const int64_t in_w = value(x).dim(1);
  return push(rfft2_packed(value(x)), {x}, [x, in_w](Tape& tp, NodeId me) {
    tp.accum(x, rfft2_packed_vjp(tp.grad(me), in_w));
  });
}

NodeId Tape::irfft2(NodeId s, int64_t out_width) {
  return push(irfft2_packed(value(s), out_width), {s}, [s](Tape& tp, NodeId me) {
    tp.accum(s, irfft2_packed_vjp(tp.grad(me)));
  });
}

NodeId Tape::amp_phase(NodeId s) {
  return push(amp_phase_packed(value(s)), {s}, [s](Tape& tp, NodeId me) {
    tp.accum(s, amp_phase_packed_vjp(tp.value(s), tp.grad(me)));
  });
}

NodeId Tape::recompose(NodeId ap) {
  return push(recompose_packed(value(ap)), {ap}, [ap](Tape& tp, NodeId me) {
    tp.accum(ap, recompose_packed_vjp(tp.value(ap), tp.grad(me)));
  });
}

NodeId Tape::freq_dconv(NodeId ap, NodeId wa, NodeId ba, NodeId wp, NodeId bp) {
  const Tensor& in = value(ap);
  const int64_t c = in.dim(2);
  for (NodeId p : {wa, ba, wp, bp})
    if (value(p).rank() != 1 || value(p).dim(0) != c)
      throw ShapeError("freq_dconv: per-channel parameter extent must be " + std::to_string(c));
  Tensor out(in.shape(), in.dtype());
  const int64_t bins = in.numel() / (c * 2);
  dispatch_dtype(in.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* ip = in.data<T>();
    const T* wav = value(wa).data<T>();
    const T* bav = value(ba).data<T>();
    const T* wpv = value(wp).data<T>();
    const T* bpv = value(bp).data<T>();
    T* o = out.data<T>();
    for (int64_t bin = 0; bin < bins; ++bin)
      for (int64_t ch = 0; ch < c; ++ch) {
        const int64_t at = (bin * c + ch) * 2;
        o[at + 0] = ip[at + 0] * wav[ch] + bav[ch];
        o[at + 1] = ip[at + 1] * wpv[ch] + bpv[ch];
      }
  });
  return push(std::move(out), {ap, wa, ba, wp, bp}, [ap, wa, ba, wp, bp, c](Tape& tp, NodeId me) {
    const Tensor& g = tp.grad(me);
    const Tensor& in = tp.value(ap);
    const int64_t bins = in.numel() / (c * 2);
    Tensor gap = Tensor::zeros(in.shape(), in.dtype());
    Tensor gwa = Tensor::zeros({c}, in.dtype()), gba = Tensor::zeros({c}, in.dtype());
    Tensor gwp = Tensor::zeros({c}, in.dtype()), gbp = Tensor::zeros({c}, in.dtype());
    dispatch_dtype(in.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* gp_ = g.data<T>();
      const T* ip = in.data<T>();
      const T* wav = tp.value(wa).data<T>();
      const T* wpv = tp.value(wp).data<T>();
      T* da = gap.data<T>();
      T* dwa = gwa.data<T>();
      T* dba = gba.data<T>();
      T* dwp = gwp.data<T>();
      T* dbp = gbp.data<T>();
      for (int64_t bin = 0; bin < bins; ++bin)
        for (int64_t ch = 0; ch < c; ++ch) {
          const int64_t at = (bin * c + ch) * 2;
          da[at + 0] = gp_[at + 0] * wav[ch];
          da[at + 1] = gp_[at + 1] * wpv[ch];
          dwa[ch] += gp_[at + 0] * ip[at + 0];
          dba[ch] += gp_[at + 0];
          dwp[ch] += gp_[at + 1] * ip[at + 1];
          dbp[ch] += gp_[at + 1];
        }
    });
    tp.accum(ap, gap);
    tp.accum(wa, gwa);
    tp.accum(ba, gba);
    tp.accum(wp, gwp);
    tp.accum(bp, gbp);
  });
}

// -------------------------------------------------------------------- scalars

NodeId Tape::sum(NodeId x) {
  Tensor out({1}, value(x).dtype());
  out.set(0, sum_all(value(x)));
  return push(std::move(out), {x}, [x](Tape& tp, NodeId me) {
    const double g = tp.grad(me).at(0);
    tp.accum(x, Tensor::full(tp.value(x).shape(), tp.value(x).dtype(), g));
  });
}

NodeId Tape::mean_abs_diff(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  check_same_shape(av, bv, "mean_abs_diff");
  Tensor out({1}, av.dtype());
  out.set(0, pansharp::mean_abs_diff(av, bv));
  return push(std::move(out), {a, b}, [a, b](Tape& tp, NodeId me) {
    const double g = tp.grad(me).at(0);
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    const double s = g / static_cast<double>(av.numel());
    Tensor ga(av.shape(), av.dtype());
    for (int64_t i = 0; i < av.numel(); ++i) {
      const double d = av.at(i) - bv.at(i);
      ga.set(i, d > 0 ? s : (d < 0 ? -s : 0.0));
    }
    tp.accum(a, ga);
    tp.accum(b, pansharp::scale(ga, -1.0));
  });
}

NodeId Tape::mean_of(const std::vector<NodeId>& scalars) {
  if (scalars.empty()) throw ContractError("mean_of: no inputs");
  Tensor out({1}, value(scalars[0]).dtype());
  double s = 0;
  for (NodeId id : scalars) s += value(id).at(0);
  out.set(0, s / static_cast<double>(scalars.size()));
  std::vector<NodeId> ins = scalars;
  return push(std::move(out), ins, [ins](Tape& tp, NodeId me) {
    const double g = tp.grad(me).at(0) / static_cast<double>(ins.size());
    for (NodeId id : ins) {
      Tensor gi({1}, tp.value(id).dtype());
      gi.set(0, g);
      tp.accum(id, gi);
    }
  });
}

}  // namespace pansharp
