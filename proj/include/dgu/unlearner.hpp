#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgu/backbone.hpp"
#include "dgu/event_log.hpp"
#include "dgu/neighbor_index.hpp"
#include "dgu/sampling.hpp"
#include "dgu/trainer.hpp"

namespace dgu {

// How the unlearning-generalization regularizer compares distributions:
// against the constant desired predictions (the literal reading) or against
// the model's own predictions on the unlearned events.
enum class UlgMode { kDesiredConstant, kModelPredictions };

struct UnlearnConfig {
  double alpha{1.0};   // weight of the re/val distribution regularizer
  double beta{0.1};    // weight of the unlearning loss
  double gamma{0.1};   // weight of the counterpart regularizer
  int cmd_k{2};        // central-moment order
  std::size_t channels{32};     // gradient reshaping width
  std::size_t hidden_tok{32};
  std::size_t hidden_cha{32};
  double lr{1e-3};
  std::size_t steps{200};
  std::uint64_t seed{3};
  double desired_label{0.0};
  UlgMode ulg_mode{UlgMode::kDesiredConstant};
  // Sets larger than this are subsampled once with a seeded draw.
  std::size_t max_set_size{4096};
};

// Central moment discrepancy of order k between two scalar prediction
// batches: |E a - E b| + sum_{i=2..k} |E (a-Ea)^i - E (b-Eb)^i|.
Var cmd(Tape& tape, Var a, Var b, int k);
double cmd(const std::vector<double>& a, const std::vector<double>& b, int k);

// total = re + alpha*reg + beta*ul + gamma*ulg
double combine_total(double loss_re, double loss_reg, double loss_ul,
                     double loss_ulg, double alpha, double beta, double gamma);

// Zero-pads a flat gradient to a multiple of `channels` and reshapes it
// row-major; the inverse drops the pad.
struct ReshapedGradient {
  Matrix matrix;
  std::size_t pad{0};
};
ReshapedGradient reshape_gradient(const std::vector<double>& flat,
                                  std::size_t channels);
std::vector<double> inverse_reshape(const Matrix& m, std::size_t n);

// Smallest power of two >= the gradient's max magnitude (and >= 1). The
// transformer runs on the gradient divided by this scale and its output is
// multiplied back; both operations are exact in IEEE754, so the identity
// network still maps the gradient to itself bit for bit while the trainable
// corrections only ever need order-one magnitudes.
double pow2_scale(const std::vector<double>& flat);

// Sum over the unlearned events of the BCE between the frozen model's
// prediction and the desired label, differentiated at theta*. Lookups use
// the remaining-data index. The result is a constant thereafter.
std::vector<double> initial_gradient(const Backbone& backbone,
                                     const ParamStore& theta_star,
                                     const std::vector<Event>& ul_events,
                                     double desired_label,
                                     const TemporalNeighborIndex& index,
                                     const EventLog& full_log);

// The two-block token/channel mixer that maps a reshaped gradient to a
// parameter update of the same shape.
class GradientTransformer {
 public:
  GradientTransformer(const UnlearnConfig& config, std::size_t n_params);

  std::size_t n_params() const { return n_params_; }
  std::size_t rows() const { return rows_; }
  std::size_t pad() const { return pad_; }

  ParamStore init_phi(std::uint64_t seed) const;
  bool manifest_matches(const ParamStore& phi) const;

  Var transform(Tape& tape, std::span<const Var> phi,
                const ParamStore& manifest, Var h_in) const;
  Matrix transform(const ParamStore& phi, const Matrix& h_in) const;

 private:
  UnlearnConfig config_;
  std::size_t n_params_{0};
  std::size_t rows_{0};
  std::size_t pad_{0};
};

struct StepTrace {
  std::size_t step{0};
  double loss_re{0.0};
  double loss_reg{0.0};
  double loss_ul{0.0};
  double loss_ulg{0.0};
  double total{0.0};
};

struct UnlearnedModel {
  std::vector<double> delta;  // flat parameter update
  ParamStore params;          // theta* + delta
  ParamStore phi;
  std::vector<StepTrace> trace;
  std::size_t counterpart_warnings{0};
};

void save_trace_csv(const std::vector<StepTrace>& trace,
                    const std::string& path);

// The four loss terms evaluated at displaced parameters. Holds the fixed
// evaluation sets (unlearned events, validation instances, counterparts) and
// rotates a fresh remaining-data batch per step. Loss weights are explicit
// so the fine-tuning baselines can reuse the same machinery.
class UnlearnObjective {
 public:
  struct Weights {
    double re{1.0};
    double reg{0.0};
    double ul{0.0};
    double ulg{0.0};
  };

  UnlearnObjective(const Backbone& backbone, const EventLog& full_log,
                   const TemporalNeighborIndex& index_removed,
                   const UnlearnRequest& request, const EventLog& val,
                   const UnlearnConfig& config, Weights weights,
                   std::size_t re_batch_size);

  struct Evaluation {
    Var total;
    StepTrace components;
  };
  Evaluation evaluate(Tape& tape, std::span<const Var> theta,
                      const ParamStore& manifest, std::size_t step);

  bool counterparts_empty() const { return cp_instances_.empty(); }

 private:
  const Backbone& backbone_;
  const EventLog& full_log_;
  const TemporalNeighborIndex& index_;
  UnlearnConfig config_;
  Weights weights_;
  std::size_t re_batch_size_;
  std::vector<LinkInstance> ul_instances_;
  std::vector<LinkInstance> val_instances_;
  std::vector<LinkInstance> cp_instances_;
  std::vector<LinkInstance> re_pool_;
  NodeId neg_lo_{0};
  NodeId neg_hi_{0};
};

// Trains the transformation network against the total loss
// re + alpha*reg + beta*ul + gamma*ulg at theta* + Delta, keeping theta*
// frozen; returns the best-loss checkpoint with the full trace.
UnlearnedModel train_unlearner(const Backbone& backbone,
                               const TrainedModel& model,
                               const UnlearnRequest& request,
                               const EventLog& val,
                               const TemporalNeighborIndex& index_removed,
                               const EventLog& full_log,
                               const UnlearnConfig& config);

// One forward pass of an already-trained transformation network on a new
// request: gradient, reshape, transform, apply. No optimization.
UnlearnedModel apply_future_request(const Backbone& backbone,
                                    const TrainedModel& model,
                                    const ParamStore& phi,
                                    const std::vector<Event>& ul_new,
                                    const TemporalNeighborIndex& index,
                                    const EventLog& full_log,
                                    const UnlearnConfig& config);

// Value shapes allocated by one transform pass plus the phi parameter
// shapes; the memory-contract audit asserts the smallest dimension of every
// one of them stays bounded by the mixer widths.
std::vector<std::pair<std::size_t, std::size_t>> audit_transform_shapes(
    const UnlearnConfig& config, std::size_t n_params);

}  // namespace dgu
