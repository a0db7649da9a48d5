#include "dgu/backbone.hpp"

#include <cmath>
#include <stdexcept>

#include "dgu/sampling.hpp"

namespace dgu {

std::vector<double> time_encode(double dt, std::size_t d) {
  if (dt < 0.0) throw std::invalid_argument("time_encode: negative dt");
  std::vector<double> out(d);
  const double alpha = std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const double omega =
        std::pow(alpha, -static_cast<double>(i) / alpha);
    out[i] = std::cos(dt * omega);
  }
  return out;
}

Backbone::Backbone(BackboneConfig config, std::size_t feat_dim)
    : config_(config), feat_dim_(feat_dim) {
  if (config_.neighbor_k < 1 || config_.time_dim < 1 ||
      config_.hidden_dim < 1 || config_.mixer_blocks < 1) {
    throw std::invalid_argument("Backbone: config dimensions must be positive");
  }
  token_cols_ = config_.time_dim + feat_dim_;
  const double alpha = std::sqrt(static_cast<double>(config_.time_dim));
  omega_.resize(config_.time_dim);
  for (std::size_t i = 0; i < config_.time_dim; ++i) {
    omega_[i] = std::pow(alpha, -static_cast<double>(i) / alpha);
  }
}

ParamStore Backbone::init_params(std::uint64_t seed) const {
  Rng rng(mix_seed(seed, "backbone-init"));
  ParamStore store;
  const MixerBlockDims dims{config_.neighbor_k, token_cols_,
                            config_.hidden_dim, config_.hidden_dim};
  for (std::size_t b = 0; b < config_.mixer_blocks; ++b) {
    mixer_block_init(store, "enc" + std::to_string(b), dims, rng,
                     /*zero_second_proj=*/false);
  }
  store.add("out.w", glorot_init(token_cols_, config_.hidden_dim, rng));
  store.add("out.b", Matrix::zeros(1, config_.hidden_dim));
  store.add("dec.w1", glorot_init(2 * config_.hidden_dim, config_.hidden_dim, rng));
  store.add("dec.b1", Matrix::zeros(1, config_.hidden_dim));
  store.add("dec.w2", glorot_init(config_.hidden_dim, 1, rng));
  store.add("dec.b2", Matrix::zeros(1, 1));
  return store;
}

Matrix Backbone::build_tokens(const TemporalNeighborIndex& index,
                              const EventLog& log, NodeId node,
                              double t) const {
  Matrix tokens(config_.neighbor_k, token_cols_);
  const auto recs = index.recent(node, t, config_.neighbor_k);
  for (std::size_t r = 0; r < recs.size(); ++r) {
    const double dt = t - recs[r].time;
    for (std::size_t i = 0; i < config_.time_dim; ++i) {
      tokens.at(r, i) = std::cos(dt * omega_[i]);
    }
    const Event& e = log.events[recs[r].event_idx];
    for (std::size_t i = 0; i < feat_dim_; ++i) {
      tokens.at(r, config_.time_dim + i) = e.feat[i];
    }
  }
  // remaining rows stay zero padding
  return tokens;
}

Var Backbone::encode(Tape& tape, std::span<const Var> theta,
                     const ParamStore& manifest, const Matrix& tokens) const {
  Var h = tape.constant(tokens);
  for (std::size_t b = 0; b < config_.mixer_blocks; ++b) {
    const auto blk =
        mixer_block_vars(theta, manifest, "enc" + std::to_string(b));
    h = mixer_block_forward(blk, h);
  }
  Var pooled = mean_rows(h);
  return linear(pooled, theta[manifest.index_of("out.w")],
                theta[manifest.index_of("out.b")]);
}

Var Backbone::logit(Tape& tape, std::span<const Var> theta,
                    const ParamStore& manifest, const Matrix& tokens_src,
                    const Matrix& tokens_dst) const {
  Var z = concat_cols(encode(tape, theta, manifest, tokens_src),
                      encode(tape, theta, manifest, tokens_dst));
  Var h = gelu(linear(z, theta[manifest.index_of("dec.w1")],
                      theta[manifest.index_of("dec.b1")]));
  return linear(h, theta[manifest.index_of("dec.w2")],
                theta[manifest.index_of("dec.b2")]);
}

Var Backbone::instance_logit(Tape& tape, std::span<const Var> theta,
                             const ParamStore& manifest,
                             const TemporalNeighborIndex& index,
                             const EventLog& log,
                             const LinkInstance& inst) const {
  return logit(tape, theta, manifest,
               build_tokens(index, log, inst.src, inst.time),
               build_tokens(index, log, inst.dst, inst.time));
}

std::vector<double> Backbone::score(
    const ParamStore& params, const TemporalNeighborIndex& index,
    const EventLog& log, const std::vector<LinkInstance>& instances) const {
  std::vector<double> logits;
  logits.reserve(instances.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < instances.size(); begin += kChunk) {
    const std::size_t end = std::min(begin + kChunk, instances.size());
    Tape tape;
    std::vector<Var> theta;
    theta.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
      theta.push_back(tape.constant(params.value(i)));
    }
    for (std::size_t i = begin; i < end; ++i) {
      logits.push_back(
          instance_logit(tape, theta, params, index, log, instances[i])
              .scalar());
    }
  }
  return logits;
}

std::vector<LinkInstance> make_instances(const EventLog& split,
                                         std::uint64_t negative_seed) {
  std::vector<LinkInstance> out;
  out.reserve(2 * split.size());
  for (const Event& e : split.events) {
    out.push_back(LinkInstance{e.src, e.dst, e.time, 1.0});
  }
  for (const Event& n : sample_negatives(split, negative_seed)) {
    out.push_back(LinkInstance{n.src, n.dst, n.time, 0.0});
  }
  return out;
}

}  // namespace dgu
