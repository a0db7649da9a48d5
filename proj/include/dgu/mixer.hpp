#pragma once

#include <string>

#include "dgu/rng.hpp"
#include "dgu/tape.hpp"

namespace dgu {

// One token-mixing + channel-mixing block with pre-layer-norm, GeLU and
// residual connections:
//
//   H_tok = H + W_tok2 * GeLU(W_tok1 * LN(H))
//   H_cha = H_tok + GeLU(LN(H_tok) * W_cha1) * W_cha2
//
// The same block drives both the link-prediction backbone (over neighbor
// token matrices) and the gradient transformation network (over reshaped
// gradient matrices). Zeroing the two second projections makes the block an
// exact identity.
struct MixerBlockDims {
  std::size_t rows{0};        // tokens
  std::size_t cols{0};        // channels
  std::size_t hidden_tok{0};
  std::size_t hidden_cha{0};
};

struct MixerBlockVars {
  Var ln_tok_gain, ln_tok_shift;
  Var w_tok1, w_tok2;
  Var ln_cha_gain, ln_cha_shift;
  Var w_cha1, w_cha2;
};

// Registers the block's parameters under `prefix.` in creation order.
// Second projections start at zero when zero_second_proj is set, which makes
// a freshly initialized block the identity map.
void mixer_block_init(ParamStore& store, const std::string& prefix,
                      const MixerBlockDims& dims, Rng& rng,
                      bool zero_second_proj);

// Resolves the block's bound parameter handles by name.
MixerBlockVars mixer_block_vars(const BoundParams& params,
                                const std::string& prefix);
MixerBlockVars mixer_block_vars(std::span<const Var> vars,
                                const ParamStore& manifest,
                                const std::string& prefix);

Var mixer_block_forward(const MixerBlockVars& blk, Var h);

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace dgu
