#pragma once

#include <cstdint>
#include <vector>

#include "dgu/event_log.hpp"
#include "dgu/mixer.hpp"
#include "dgu/neighbor_index.hpp"
#include "dgu/tape.hpp"

namespace dgu {

struct BackboneConfig {
  std::size_t neighbor_k{10};
  std::size_t time_dim{16};
  std::size_t hidden_dim{32};
  std::size_t mixer_blocks{2};
  double lr{1e-4};
  std::size_t epochs{50};
  std::size_t batch_size{64};
  std::size_t patience{5};
  std::uint64_t seed{1};
};

// A link-prediction instance; label 1 means the edge exists at `time`.
struct LinkInstance {
  NodeId src{0};
  NodeId dst{0};
  double time{0.0};
  double label{1.0};
};

// Fixed cosine time features: component i is cos(dt * w_i) with
// w_i = alpha^(-(i-1)/beta), alpha = beta = sqrt(d). Never trained.
std::vector<double> time_encode(double dt, std::size_t d);

// Continuous-time link predictor: per node, the recent-k neighbor events
// become a k x (time_dim + feat_dim) token matrix (time encoding of the lag
// joined with the edge features, zero-padded to k rows), pass through the
// mixer blocks, are mean-pooled and projected; a two-layer decoder scores a
// node pair from the joined embeddings.
class Backbone {
 public:
  Backbone(BackboneConfig config, std::size_t feat_dim);

  const BackboneConfig& config() const { return config_; }
  std::size_t feat_dim() const { return feat_dim_; }
  std::size_t token_cols() const { return token_cols_; }

  ParamStore init_params(std::uint64_t seed) const;

  Matrix build_tokens(const TemporalNeighborIndex& index, const EventLog& log,
                      NodeId node, double t) const;

  Var encode(Tape& tape, std::span<const Var> theta,
             const ParamStore& manifest, const Matrix& tokens) const;

  Var logit(Tape& tape, std::span<const Var> theta, const ParamStore& manifest,
            const Matrix& tokens_src, const Matrix& tokens_dst) const;

  Var instance_logit(Tape& tape, std::span<const Var> theta,
                     const ParamStore& manifest,
                     const TemporalNeighborIndex& index, const EventLog& log,
                     const LinkInstance& inst) const;

  // Plain-value scoring for evaluation; same code path, constant leaves.
  std::vector<double> score(const ParamStore& params,
                            const TemporalNeighborIndex& index,
                            const EventLog& log,
                            const std::vector<LinkInstance>& instances) const;

 private:
  BackboneConfig config_;
  std::size_t feat_dim_{0};
  std::size_t token_cols_{0};
  std::vector<double> omega_;  // frozen time-encoding frequencies
};

// Positives (label 1) from the split joined with seeded same-source
// negatives (label 0); every method is scored on identical instance sets
// when given the same seed.
std::vector<LinkInstance> make_instances(const EventLog& split,
                                         std::uint64_t negative_seed);

}  // namespace dgu
