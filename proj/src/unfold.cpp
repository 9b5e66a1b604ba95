#include "pansharp/unfold.hpp"

#include <cmath>

namespace pansharp {

namespace {

Tensor delta_kernel(int channels, DType dt) {
  Tensor k = Tensor::zeros({channels, 3, 3}, dt);
  for (int c = 0; c < channels; ++c) k.set(c * 9 + 4, 1.0);
  return k;
}

void check_unfold(const UnfoldConfig& cfg) {
  if (cfg.stages < 0) throw ContractError("unfold: stage count must be >= 0");
  if (cfg.bands < 1) throw ContractError("unfold: band count must be >= 1");
  if (cfg.scale != 4) throw ContractError("unfold: scale is fixed at 4");
  validate_lgt(cfg.lgt);
}

}  // namespace

ModelParams init_model(const UnfoldConfig& cfg, uint64_t seed, DType dt) {
  check_unfold(cfg);
  ModelParams mp;
  mp.cfg = cfg;
  mp.dtype = dt;
  mp.init_recipe = "fanin-uniform-v1";
  Rng rng(seed);
  const int b = cfg.bands;
  // Shared data module: two down units, two up units, learned response pair.
  mp.tensors["data.down0.dw"] = delta_kernel(b, dt);
  mp.tensors["data.down1.dw"] = delta_kernel(b, dt);
  mp.tensors["data.up0.dw"] = delta_kernel(b, dt);
  mp.tensors["data.up1.dw"] = delta_kernel(b, dt);
  mp.tensors["data.r.w"] = Tensor::full({b, 1}, dt, 1.0 / b);
  mp.tensors["data.r.b"] = Tensor::zeros({1}, dt);
  mp.tensors["data.rt.w"] = Tensor::full({1, b}, dt, 1.0);
  mp.tensors["data.rt.b"] = Tensor::zeros({b}, dt);
  for (int k = 0; k < cfg.stages; ++k) {
    mp.tensors["eta" + std::to_string(k)] = Tensor::full({1}, dt, 0.1);
    Rng stage_rng = rng.child(static_cast<uint64_t>(k) + 100);
    init_prior_params(mp.tensors, "stage" + std::to_string(k) + ".prior", b, cfg.lgt, stage_rng,
                      dt);
  }
  return mp;
}

NodeId data_module_t(Tape& tape, NodeId z, NodeId x, NodeId y, NodeId eta, const ParamTable& pt,
                     const std::string& prefix) {
  const Tensor& zv = tape.value(z);
  const Tensor& xv = tape.value(x);
  const Tensor& yv = tape.value(y);
  if (zv.rank() != 3 || xv.rank() != 3 || yv.rank() != 3 || yv.dim(2) != 1 ||
      zv.dim(2) != xv.dim(2) || zv.dim(0) != 4 * xv.dim(0) || zv.dim(1) != 4 * xv.dim(1) ||
      yv.dim(0) != zv.dim(0) || yv.dim(1) != zv.dim(1))
    throw ShapeError("data module: inconsistent extents z=" + zv.shape_str() +
                     " x=" + xv.shape_str() + " y=" + yv.shape_str());
  // Learned S: two (bicubic 1/2 + depthwise 3x3) units.
  NodeId s = tape.resample_bicubic(z, 1, 2);
  s = tape.conv_depthwise(s, param(pt, prefix + ".down0.dw"), 1, Padding::reflect);
  s = tape.resample_bicubic(s, 1, 2);
  s = tape.conv_depthwise(s, param(pt, prefix + ".down1.dw"), 1, Padding::reflect);
  NodeId resid_s = tape.sub(s, x);
  // Learned S^T: two (bicubic x2 + depthwise 3x3) units.
  NodeId t = tape.resample_bicubic(resid_s, 2, 1);
  t = tape.conv_depthwise(t, param(pt, prefix + ".up0.dw"), 1, Padding::reflect);
  t = tape.resample_bicubic(t, 2, 1);
  t = tape.conv_depthwise(t, param(pt, prefix + ".up1.dw"), 1, Padding::reflect);
  // Learned R / R^T as pointwise channel maps.
  NodeId pr = tape.linear_lastdim(z, param(pt, prefix + ".r.w"), param(pt, prefix + ".r.b"));
  NodeId resid_r = tape.sub(pr, y);
  NodeId rt = tape.linear_lastdim(resid_r, param(pt, prefix + ".rt.w"), param(pt, prefix + ".rt.b"));
  NodeId grad = tape.add(t, rt);
  return tape.sub(z, tape.scale_by(grad, eta));
}

NodeId unfold_forward_t(Tape& tape, NodeId x, NodeId y, const ParamTable& pt,
                        const UnfoldConfig& cfg, std::vector<NodeId>* intermediates) {
  check_unfold(cfg);
  NodeId z = tape.resample_bicubic(x, cfg.scale, 1);
  if (intermediates) intermediates->push_back(z);
  for (int k = 0; k < cfg.stages; ++k) {
    try {
      NodeId z_half = data_module_t(tape, z, x, y, param(pt, "eta" + std::to_string(k)), pt);
      if (intermediates) intermediates->push_back(z_half);
      z = prior_forward_t(tape, z_half, pt, "stage" + std::to_string(k) + ".prior", cfg.bands,
                          cfg.lgt);
      if (intermediates) intermediates->push_back(z);
    } catch (const ShapeError& e) {
      throw ShapeError("stage " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return z;
}

Tensor unfold_forward(const Tensor& x, const Tensor& y, const ModelParams& params,
                      std::vector<Tensor>* intermediates) {
  Tape tape;
  ParamTable pt = register_params(tape, params.tensors, false);
  NodeId xin = tape.constant(x);
  NodeId yin = tape.constant(y);
  std::vector<NodeId> ids;
  NodeId out = unfold_forward_t(tape, xin, yin, pt, params.cfg, intermediates ? &ids : nullptr);
  if (intermediates)
    for (NodeId id : ids) intermediates->push_back(tape.value(id));
  return tape.value(out);
}

Tensor data_module(const Tensor& z, const Tensor& x, const Tensor& y, double eta,
                   const ParamMap& p, const std::string& prefix) {
  Tape tape;
  ParamTable pt = register_params(tape, p, false);
  NodeId e = tape.constant(Tensor::full({1}, z.dtype(), eta));
  return tape.value(
      data_module_t(tape, tape.constant(z), tape.constant(x), tape.constant(y), e, pt, prefix));
}

int64_t count_params(const ModelParams& params) {
  int64_t n = 0;
  for (const auto& [name, t] : params.tensors) n += t.numel();
  return n;
}

namespace {

// Rough multiply-accumulate counts (x2 for mul+add), mirroring what the
// forward pass actually executes.
double flops_linear(double pixels, double cin, double cout) { return 2.0 * pixels * cin * cout; }
double flops_dconv(double pixels, double c, double taps) { return 2.0 * pixels * c * taps; }
double flops_resample(double out_pixels, double c, int num, int den) {
  const double taps = num >= den ? 4.0 : 4.0 * den / num;
  return 2.0 * out_pixels * c * (taps + 1.0) * 2.0;  // two separable passes
}
double flops_fft_pair(double h, double w, double c) {
  // Row-column transform, forward plus inverse.
  return 2.0 * 4.0 * h * w * (h + w) * c;
}

double flops_block(double h, double w, int channels, const LgtConfig& cfg) {
  const double hw = h * w;
  const double ch = channels / 2.0;
  const double m2 = static_cast<double>(cfg.window) * cfg.window;
  const double windows = hw / m2;
  double f = 0;
  f += 2.0 * hw * channels * 8.0;                       // two layer norms
  f += flops_linear(hw, ch, 3.0 * ch);                  // qkv
  f += 2.0 * windows * cfg.heads * m2 * m2 * (ch / cfg.heads) * 2.0;  // logits + AV
  f += windows * cfg.heads * m2 * m2 * 6.0;             // softmax + position add
  f += flops_linear(hw, ch, ch);                        // attention output
  f += flops_fft_pair(h, w, ch);                        // global branch transforms
  f += hw * ch * 24.0;                                  // amp/phase, conv, recompose
  f += flops_linear(hw, channels, 2.0 * channels);      // mixer expand
  f += flops_dconv(hw, 2.0 * channels, 9.0);            // mixer depthwise
  f += hw * 2.0 * channels * 10.0;                      // gelu
  f += flops_linear(hw, 2.0 * channels, channels);      // mixer contract
  f += 2.0 * hw * channels;                             // residual adds
  return f;
}

}  // namespace

double estimate_flops(const UnfoldConfig& cfg, int64_t h, int64_t w) {
  const double hd = static_cast<double>(h), wd = static_cast<double>(w);
  const double b = cfg.bands;
  const int c = cfg.lgt.channels;
  double f = flops_resample(hd * wd, b, 4, 1);  // z0 upsample
  double data = 0;
  data += flops_resample(hd * wd / 4, b, 1, 2) + flops_dconv(hd * wd / 4, b, 9);
  data += flops_resample(hd * wd / 16, b, 1, 2) + flops_dconv(hd * wd / 16, b, 9);
  data += flops_resample(hd * wd / 4, b, 2, 1) + flops_dconv(hd * wd / 4, b, 9);
  data += flops_resample(hd * wd, b, 2, 1) + flops_dconv(hd * wd, b, 9);
  data += flops_linear(hd * wd, b, 1) + flops_linear(hd * wd, 1, b) + 4.0 * hd * wd * b;
  double prior = 0;
  prior += flops_linear(hd * wd, b, c);
  prior += cfg.lgt.encoder_blocks * flops_block(hd, wd, c, cfg.lgt);
  prior += flops_resample(hd * wd / 4, c, 1, 2) + flops_linear(hd * wd / 4, c, 2.0 * c);
  prior += cfg.lgt.bottleneck_blocks * flops_block(hd / 2, wd / 2, 2 * c, cfg.lgt);
  prior += flops_resample(hd * wd, 2.0 * c, 2, 1) + flops_linear(hd * wd, 2.0 * c, c);
  prior += cfg.lgt.decoder_blocks * flops_block(hd, wd, c, cfg.lgt);
  prior += flops_linear(hd * wd, c, b) + 2.0 * hd * wd * b;
  return f + cfg.stages * (data + prior);
}

}  // namespace pansharp
