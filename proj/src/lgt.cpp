#include "pansharp/lgt.hpp"

#include <cmath>

namespace pansharp {

void validate_lgt(const LgtConfig& cfg) {
  if (cfg.channels < 2 || cfg.channels % 2 != 0)
    throw ContractError("lgt: channel count must be even and positive");
  if (cfg.heads < 1 || (cfg.channels / 2) % cfg.heads != 0)
    throw ContractError("lgt: C/2 must be divisible by the head count");
  if (cfg.window < 1) throw ContractError("lgt: window must be >= 1");
  if (cfg.encoder_blocks < 1 || cfg.bottleneck_blocks < 1 || cfg.decoder_blocks < 1)
    throw ContractError("lgt: block counts must be >= 1");
}

ParamTable register_params(Tape& tape, const ParamMap& params, bool requires_grad) {
  ParamTable table;
  for (const auto& [name, tensor] : params) table[name] = tape.leaf(tensor, name, requires_grad);
  return table;
}

NodeId param(const ParamTable& table, const std::string& name) {
  auto it = table.find(name);
  if (it == table.end()) throw ContractError("missing parameter: " + name);
  return it->second;
}

// ------------------------------------------------------------- initialization

void init_linear(ParamMap& p, const std::string& prefix, int64_t cin, int64_t cout, Rng& rng,
                 DType dt, bool bias) {
  Tensor w({cin, cout}, dt);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cin));
  for (int64_t i = 0; i < w.numel(); ++i) w.set(i, rng.uniform(-bound, bound));
  p[prefix + ".w"] = w;
  if (bias) p[prefix + ".b"] = Tensor::zeros({cout}, dt);
}

namespace {

Tensor uniform_tensor(std::vector<int64_t> shape, double bound, Rng& rng, DType dt) {
  Tensor t(std::move(shape), dt);
  for (int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.uniform(-bound, bound));
  return t;
}

}  // namespace

void init_block_params(ParamMap& p, const std::string& prefix, int channels,
                       const LgtConfig& cfg, Rng& rng, DType dt) {
  const int ch = channels / 2;           // per-branch channels
  const int64_t m2 = static_cast<int64_t>(cfg.window) * cfg.window;
  p[prefix + ".ln1.g"] = Tensor::full({channels}, dt, 1.0);
  p[prefix + ".ln1.b"] = Tensor::zeros({channels}, dt);
  init_linear(p, prefix + ".attn.qkv", ch, 3 * ch, rng, dt);
  for (int i = 0; i < cfg.heads; ++i)
    p[prefix + ".attn.pos" + std::to_string(i)] = Tensor::zeros({m2, m2}, dt);
  init_linear(p, prefix + ".attn.out", ch, ch, rng, dt);
  // 1x1 per-channel maps in the frequency domain (fan-in 1).
  p[prefix + ".freq.amp.w"] = uniform_tensor({ch}, 1.0, rng, dt);
  p[prefix + ".freq.amp.b"] = Tensor::zeros({ch}, dt);
  p[prefix + ".freq.phase.w"] = uniform_tensor({ch}, 1.0, rng, dt);
  p[prefix + ".freq.phase.b"] = Tensor::zeros({ch}, dt);
  p[prefix + ".ln2.g"] = Tensor::full({channels}, dt, 1.0);
  p[prefix + ".ln2.b"] = Tensor::zeros({channels}, dt);
  init_linear(p, prefix + ".mix.pw1", channels, 2 * channels, rng, dt);
  p[prefix + ".mix.dw"] = uniform_tensor({2 * channels, 3, 3}, 1.0 / 3.0, rng, dt);
  init_linear(p, prefix + ".mix.pw2", 2 * channels, channels, rng, dt);
}

void init_prior_params(ParamMap& p, const std::string& prefix, int bands, const LgtConfig& cfg,
                       Rng& rng, DType dt) {
  validate_lgt(cfg);
  const int c = cfg.channels;
  init_linear(p, prefix + ".embed", bands, c, rng, dt);
  for (int i = 0; i < cfg.encoder_blocks; ++i)
    init_block_params(p, prefix + ".enc" + std::to_string(i), c, cfg, rng, dt);
  init_linear(p, prefix + ".down.pw", c, 2 * c, rng, dt);
  for (int i = 0; i < cfg.bottleneck_blocks; ++i)
    init_block_params(p, prefix + ".mid" + std::to_string(i), 2 * c, cfg, rng, dt);
  init_linear(p, prefix + ".up.pw", 2 * c, c, rng, dt);
  for (int i = 0; i < cfg.decoder_blocks; ++i)
    init_block_params(p, prefix + ".dec" + std::to_string(i), c, cfg, rng, dt);
  init_linear(p, prefix + ".unembed", c, bands, rng, dt);
}

// --------------------------------------------------------------- tape builders

NodeId wmsa_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
              int channels_half, const LgtConfig& cfg) {
  const Tensor& xv = tape.value(x);
  const int64_t h = xv.dim(0), w = xv.dim(1);
  const int m = cfg.window;
  if (h % m != 0 || w % m != 0)
    throw ShapeError("wmsa: spatial extents " + xv.shape_str() + " must be divisible by window " +
                     std::to_string(m));
  const int d = channels_half / cfg.heads;
  NodeId win = tape.window_partition(x, m);  // nW x M^2 x Ch
  NodeId qkv = tape.linear_lastdim(win, param(pt, prefix + ".qkv.w"), param(pt, prefix + ".qkv.b"));
  std::vector<NodeId> heads;
  for (int i = 0; i < cfg.heads; ++i) {
    NodeId q = tape.slice_lastdim(qkv, i * d, (i + 1) * d);
    NodeId k = tape.slice_lastdim(qkv, channels_half + i * d, channels_half + (i + 1) * d);
    NodeId v = tape.slice_lastdim(qkv, 2 * channels_half + i * d, 2 * channels_half + (i + 1) * d);
    NodeId logits = tape.scale(tape.bmm(q, k, false, true), 1.0 / std::sqrt(static_cast<double>(d)));
    logits = tape.add_broadcast0(logits, param(pt, prefix + ".pos" + std::to_string(i)));
    NodeId att = tape.softmax_lastdim(logits);
    heads.push_back(tape.bmm(att, v, false, false));
  }
  NodeId cat = cfg.heads == 1 ? heads[0] : tape.concat_lastdim(heads);
  NodeId proj = tape.linear_lastdim(cat, param(pt, prefix + ".out.w"), param(pt, prefix + ".out.b"));
  return tape.window_merge(proj, m, h, w);
}

NodeId global_branch_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix) {
  const int64_t w = tape.value(x).dim(1);
  NodeId spec = tape.rfft2(x);
  NodeId ap = tape.amp_phase(spec);
  NodeId ap2 = tape.freq_dconv(ap, param(pt, prefix + ".amp.w"), param(pt, prefix + ".amp.b"),
                               param(pt, prefix + ".phase.w"), param(pt, prefix + ".phase.b"));
  NodeId spec2 = tape.recompose(ap2);
  return tape.irfft2(spec2, w);
}

NodeId lg_mixer_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
                  int channels, const LgtConfig& cfg) {
  if (channels % 2 != 0) throw ShapeError("lg_mixer: channel extent must be even");
  const int ch = channels / 2;
  NodeId local_in = tape.slice_lastdim(x, 0, ch);
  NodeId global_in = tape.slice_lastdim(x, ch, channels);
  NodeId local_out = wmsa_t(tape, local_in, pt, prefix + ".attn", ch, cfg);
  NodeId global_out = global_branch_t(tape, global_in, pt, prefix + ".freq");
  return tape.concat_lastdim({local_out, global_out});
}

NodeId channel_mixer_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
                       int channels) {
  (void)channels;
  NodeId h1 = tape.linear_lastdim(x, param(pt, prefix + ".pw1.w"), param(pt, prefix + ".pw1.b"));
  NodeId h2 = tape.conv_depthwise(h1, param(pt, prefix + ".dw"), 1, Padding::reflect);
  NodeId h3 = tape.gelu(h2);
  return tape.linear_lastdim(h3, param(pt, prefix + ".pw2.w"), param(pt, prefix + ".pw2.b"));
}

NodeId lgt_block_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
                   int channels, const LgtConfig& cfg) {
  NodeId n1 = tape.layer_norm(x, param(pt, prefix + ".ln1.g"), param(pt, prefix + ".ln1.b"),
                              cfg.ln_eps);
  NodeId y = tape.add(x, lg_mixer_t(tape, n1, pt, prefix, channels, cfg));
  NodeId n2 = tape.layer_norm(y, param(pt, prefix + ".ln2.g"), param(pt, prefix + ".ln2.b"),
                              cfg.ln_eps);
  return tape.add(y, channel_mixer_t(tape, n2, pt, prefix + ".mix", channels));
}

NodeId prior_forward_t(Tape& tape, NodeId z, const ParamTable& pt, const std::string& prefix,
                       int bands, const LgtConfig& cfg) {
  validate_lgt(cfg);
  const Tensor& zv = tape.value(z);
  if (zv.rank() != 3 || zv.dim(2) != bands)
    throw ShapeError("prior: expected H x W x " + std::to_string(bands) + ", got " + zv.shape_str());
  const int64_t h = zv.dim(0), w = zv.dim(1);
  const int64_t need = 2 * static_cast<int64_t>(cfg.window);
  if (h % need != 0 || w % need != 0)
    throw ShapeError("prior: spatial extents " + zv.shape_str() +
                     " must be divisible by 2*window = " + std::to_string(need));
  const int c = cfg.channels;
  NodeId x0 = tape.linear_lastdim(z, param(pt, prefix + ".embed.w"), param(pt, prefix + ".embed.b"));
  NodeId e = x0;
  for (int i = 0; i < cfg.encoder_blocks; ++i)
    e = lgt_block_t(tape, e, pt, prefix + ".enc" + std::to_string(i), c, cfg);
  NodeId dn = tape.resample_bicubic(e, 1, 2);
  dn = tape.linear_lastdim(dn, param(pt, prefix + ".down.pw.w"), param(pt, prefix + ".down.pw.b"));
  NodeId mid = dn;
  for (int i = 0; i < cfg.bottleneck_blocks; ++i)
    mid = lgt_block_t(tape, mid, pt, prefix + ".mid" + std::to_string(i), 2 * c, cfg);
  NodeId up = tape.resample_bicubic(mid, 2, 1);
  up = tape.linear_lastdim(up, param(pt, prefix + ".up.pw.w"), param(pt, prefix + ".up.pw.b"));
  NodeId dec = tape.add(up, e);  // additive encoder skip at full resolution
  for (int i = 0; i < cfg.decoder_blocks; ++i)
    dec = lgt_block_t(tape, dec, pt, prefix + ".dec" + std::to_string(i), c, cfg);
  NodeId body = tape.linear_lastdim(dec, param(pt, prefix + ".unembed.w"),
                                    param(pt, prefix + ".unembed.b"));
  return tape.add(z, body);  // global residual
}

// ---------------------------------------------------------------- pure facade

namespace {

// Run a builder on a throwaway tape with constant parameters.
template <class Builder>
Tensor run_pure(const Tensor& x, const ParamMap& p, Builder&& build) {
  Tape tape;
  ParamTable pt = register_params(tape, p, false);
  NodeId in = tape.constant(x);
  return tape.value(build(tape, in, pt));
}

}  // namespace

Tensor patch_embed(const Tensor& z, const ParamMap& p, const std::string& prefix) {
  return linear_lastdim(z, p.at(prefix + ".w"), p.at(prefix + ".b"));
}

Tensor patch_unembed(const Tensor& x, const ParamMap& p, const std::string& prefix) {
  return linear_lastdim(x, p.at(prefix + ".w"), p.at(prefix + ".b"));
}

Tensor wmsa(const Tensor& x, const ParamMap& p, const std::string& prefix, const LgtConfig& cfg) {
  return run_pure(x, p, [&](Tape& t, NodeId in, const ParamTable& pt) {
    return wmsa_t(t, in, pt, prefix, static_cast<int>(x.dim(2)), cfg);
  });
}

Tensor global_branch(const Tensor& x, const ParamMap& p, const std::string& prefix) {
  return run_pure(x, p, [&](Tape& t, NodeId in, const ParamTable& pt) {
    return global_branch_t(t, in, pt, prefix);
  });
}

Tensor lg_mixer(const Tensor& x, const ParamMap& p, const std::string& prefix,
                const LgtConfig& cfg) {
  return run_pure(x, p, [&](Tape& t, NodeId in, const ParamTable& pt) {
    return lg_mixer_t(t, in, pt, prefix, static_cast<int>(x.dim(2)), cfg);
  });
}

Tensor channel_mixer(const Tensor& x, const ParamMap& p, const std::string& prefix) {
  return run_pure(x, p, [&](Tape& t, NodeId in, const ParamTable& pt) {
    return channel_mixer_t(t, in, pt, prefix, static_cast<int>(x.dim(2)));
  });
}

Tensor lgt_block(const Tensor& x, const ParamMap& p, const std::string& prefix,
                 const LgtConfig& cfg) {
  return run_pure(x, p, [&](Tape& t, NodeId in, const ParamTable& pt) {
    return lgt_block_t(t, in, pt, prefix, static_cast<int>(x.dim(2)), cfg);
  });
}

Tensor prior_forward(const Tensor& z, const ParamMap& p, const std::string& prefix,
                     const LgtConfig& cfg) {
  return run_pure(z, p, [&](Tape& t, NodeId in, const ParamTable& pt) {
    return prior_forward_t(t, in, pt, prefix, static_cast<int>(z.dim(2)), cfg);
  });
}

}  // namespace pansharp
