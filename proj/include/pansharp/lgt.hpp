#pragma once

#include <map>
#include <string>

#include "pansharp/autodiff.hpp"
#include "pansharp/rng.hpp"
#include "pansharp/tensor.hpp"

// Local-global transformer denoiser. Each block is
//   x  + LGMixer(LN(x))  ->  y + ChannelMixer(LN(y))
// where the mixer splits channels into a windowed-attention local branch and
// a frequency-domain global branch. Blocks assemble into a U-shape:
// embed -> enc blocks -> (bicubic 1/2, C->2C) -> bottleneck -> (bicubic x2,
// 2C->C) -> +skip -> dec blocks -> unembed -> +input residual.

namespace pansharp {

struct LgtConfig {
  int channels = 16;  // C, even; the mixer splits it in half
  int window = 8;     // M
  int heads = 2;      // h; C/2 must be divisible by h
  int encoder_blocks = 2;
  int bottleneck_blocks = 1;
  int decoder_blocks = 2;
  double ln_eps = 1e-5;
};

void validate_lgt(const LgtConfig& cfg);

using ParamMap = std::map<std::string, Tensor>;
using ParamTable = std::map<std::string, NodeId>;

/// Register every tensor of a ParamMap on the tape under its name.
ParamTable register_params(Tape& tape, const ParamMap& params, bool requires_grad);
NodeId param(const ParamTable& table, const std::string& name);

// ---- parameter construction (fan-in uniform weights, zero biases and
// position embeddings, unit layer-norm gains) ----
void init_linear(ParamMap& p, const std::string& prefix, int64_t cin, int64_t cout, Rng& rng,
                 DType dt, bool bias = true);
void init_block_params(ParamMap& p, const std::string& prefix, int channels,
                       const LgtConfig& cfg, Rng& rng, DType dt);
void init_prior_params(ParamMap& p, const std::string& prefix, int bands, const LgtConfig& cfg,
                       Rng& rng, DType dt);

// ---- tape builders ----
NodeId wmsa_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
              int channels_half, const LgtConfig& cfg);
NodeId global_branch_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix);
NodeId lg_mixer_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
                  int channels, const LgtConfig& cfg);
NodeId channel_mixer_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
                       int channels);
NodeId lgt_block_t(Tape& tape, NodeId x, const ParamTable& pt, const std::string& prefix,
                   int channels, const LgtConfig& cfg);
NodeId prior_forward_t(Tape& tape, NodeId z, const ParamTable& pt, const std::string& prefix,
                       int bands, const LgtConfig& cfg);

// ---- pure wrappers (forward on a throwaway tape) ----
Tensor patch_embed(const Tensor& z, const ParamMap& p, const std::string& prefix);
Tensor patch_unembed(const Tensor& x, const ParamMap& p, const std::string& prefix);
Tensor wmsa(const Tensor& x, const ParamMap& p, const std::string& prefix, const LgtConfig& cfg);
Tensor global_branch(const Tensor& x, const ParamMap& p, const std::string& prefix);
Tensor lg_mixer(const Tensor& x, const ParamMap& p, const std::string& prefix,
                const LgtConfig& cfg);
Tensor channel_mixer(const Tensor& x, const ParamMap& p, const std::string& prefix);
Tensor lgt_block(const Tensor& x, const ParamMap& p, const std::string& prefix,
                 const LgtConfig& cfg);
Tensor prior_forward(const Tensor& z, const ParamMap& p, const std::string& prefix,
                     const LgtConfig& cfg);

}  // namespace pansharp
