#include "dgu/mixer.hpp"

#include <cmath>

namespace dgu {

Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a =
      std::sqrt(6.0 / (static_cast<double>(rows) + static_cast<double>(cols)));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-a, a);
  return m;
}

void mixer_block_init(ParamStore& store, const std::string& prefix,
                      const MixerBlockDims& dims, Rng& rng,
                      bool zero_second_proj) {
  store.add(prefix + ".ln_tok.gain", Matrix::full(1, dims.cols, 1.0));
  store.add(prefix + ".ln_tok.shift", Matrix::zeros(1, dims.cols));
  store.add(prefix + ".w_tok1", glorot_init(dims.hidden_tok, dims.rows, rng));
  store.add(prefix + ".w_tok2",
            zero_second_proj ? Matrix::zeros(dims.rows, dims.hidden_tok)
                             : glorot_init(dims.rows, dims.hidden_tok, rng));
  store.add(prefix + ".ln_cha.gain", Matrix::full(1, dims.cols, 1.0));
  store.add(prefix + ".ln_cha.shift", Matrix::zeros(1, dims.cols));
  store.add(prefix + ".w_cha1", glorot_init(dims.cols, dims.hidden_cha, rng));
  store.add(prefix + ".w_cha2",
            zero_second_proj ? Matrix::zeros(dims.hidden_cha, dims.cols)
                             : glorot_init(dims.hidden_cha, dims.cols, rng));
}

MixerBlockVars mixer_block_vars(const BoundParams& params,
                                const std::string& prefix) {
  return mixer_block_vars(params.vars, *params.store, prefix);
}

MixerBlockVars mixer_block_vars(std::span<const Var> vars,
                                const ParamStore& manifest,
                                const std::string& prefix) {
  MixerBlockVars blk;
  blk.ln_tok_gain = vars[manifest.index_of(prefix + ".ln_tok.gain")];
  blk.ln_tok_shift = vars[manifest.index_of(prefix + ".ln_tok.shift")];
  blk.w_tok1 = vars[manifest.index_of(prefix + ".w_tok1")];
  blk.w_tok2 = vars[manifest.index_of(prefix + ".w_tok2")];
  blk.ln_cha_gain = vars[manifest.index_of(prefix + ".ln_cha.gain")];
  blk.ln_cha_shift = vars[manifest.index_of(prefix + ".ln_cha.shift")];
  blk.w_cha1 = vars[manifest.index_of(prefix + ".w_cha1")];
  blk.w_cha2 = vars[manifest.index_of(prefix + ".w_cha2")];
  return blk;
}

Var mixer_block_forward(const MixerBlockVars& blk, Var h) {
  Var t = matmul(blk.w_tok2,
                 gelu(matmul(blk.w_tok1,
                             layer_norm(h, blk.ln_tok_gain, blk.ln_tok_shift))));
  Var h_tok = add(h, t);
  Var c = matmul(
      gelu(matmul(layer_norm(h_tok, blk.ln_cha_gain, blk.ln_cha_shift),
                  blk.w_cha1)),
      blk.w_cha2);
  return add(h_tok, c);
}

}  // namespace dgu
