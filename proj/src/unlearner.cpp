#include "dgu/unlearner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <stdexcept>

#include "dgu/metrics.hpp"

namespace dgu {

namespace {

std::vector<LinkInstance> subsample(std::vector<LinkInstance> instances,
                                    std::size_t cap, std::uint64_t seed) {
  if (instances.size() <= cap) return instances;
  Rng rng(seed);
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + rng.index(instances.size() - i);
    std::swap(instances[i], instances[j]);
  }
  instances.resize(cap);
  return instances;
}

}  // namespace

Var cmd(Tape& tape, Var a, Var b, int k) {
  (void)tape;
  if (k < 1) throw std::invalid_argument("cmd: k must be >= 1");
  if (a.value().size() == 0 || b.value().size() == 0) {
    throw std::invalid_argument("cmd: empty prediction batch");
  }
  Var ma = mean_all(a);
  Var mb = mean_all(b);
  Var out = abs_val(sub(ma, mb));
  for (int i = 2; i <= k; ++i) {
    Var ca = mean_all(pow_int(sub_scalar(a, ma), i));
    Var cb = mean_all(pow_int(sub_scalar(b, mb), i));
    out = add(out, abs_val(sub(ca, cb)));
  }
  return out;
}

double cmd(const std::vector<double>& a, const std::vector<double>& b, int k) {
  Tape tape;
  Var va = tape.constant(Matrix(a.size(), 1, a));
  Var vb = tape.constant(Matrix(b.size(), 1, b));
  return cmd(tape, va, vb, k).scalar();
}

double combine_total(double loss_re, double loss_reg, double loss_ul,
                     double loss_ulg, double alpha, double beta, double gamma) {
  return loss_re + alpha * loss_reg + beta * loss_ul + gamma * loss_ulg;
}

ReshapedGradient reshape_gradient(const std::vector<double>& flat,
                                  std::size_t channels) {
  if (channels < 1) throw std::invalid_argument("reshape_gradient: channels");
  if (flat.empty()) throw std::invalid_argument("reshape_gradient: empty");
  const std::size_t rows = (flat.size() + channels - 1) / channels;
  ReshapedGradient out;
  out.pad = rows * channels - flat.size();
  Matrix m(rows, channels);
  for (std::size_t i = 0; i < flat.size(); ++i) m[i] = flat[i];
  out.matrix = std::move(m);
  return out;
}

std::vector<double> inverse_reshape(const Matrix& m, std::size_t n) {
  if (n > m.size()) {
    throw std::invalid_argument("inverse_reshape: n exceeds matrix size");
  }
  return std::vector<double>(m.data(), m.data() + n);
}

double pow2_scale(const std::vector<double>& flat) {
  double max_abs = 0.0;
  for (double v : flat) max_abs = std::max(max_abs, std::fabs(v));
  if (!(max_abs > 1.0)) return 1.0;
  return std::exp2(std::ceil(std::log2(max_abs)));
}

std::vector<double> initial_gradient(const Backbone& backbone,
                                     const ParamStore& theta_star,
                                     const std::vector<Event>& ul_events,
                                     double desired_label,
                                     const TemporalNeighborIndex& index,
                                     const EventLog& full_log) {
  if (ul_events.empty()) {
    throw std::invalid_argument("initial_gradient: empty unlearning request");
  }
  Tape tape;
  BoundParams bp = tape.bind(theta_star);
  std::vector<Var> logits;
  logits.reserve(ul_events.size());
  std::vector<double> labels(ul_events.size(), desired_label);
  for (const Event& e : ul_events) {
    logits.push_back(backbone.instance_logit(
        tape, bp.vars, theta_star, index, full_log,
        LinkInstance{e.src, e.dst, e.time, desired_label}));
  }
  // Eq-style sum over events, not the mean.
  Var loss = scale(bce_with_logits(stack_scalars(tape, logits), labels),
                   static_cast<double>(ul_events.size()));
  auto grads = tape.backward(loss, bp);
  std::vector<double> flat;
  flat.reserve(theta_star.total_size());
  for (const Matrix& g : grads) {
    flat.insert(flat.end(), g.vec().begin(), g.vec().end());
  }
  for (double v : flat) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("initial_gradient: non-finite gradient");
    }
  }
  return flat;
}

GradientTransformer::GradientTransformer(const UnlearnConfig& config,
                                         std::size_t n_params)
    : config_(config), n_params_(n_params) {
  if (config_.channels < 1) {
    throw std::invalid_argument("GradientTransformer: channels must be >= 1");
  }
  rows_ = (n_params_ + config_.channels - 1) / config_.channels;
  pad_ = rows_ * config_.channels - n_params_;
}

ParamStore GradientTransformer::init_phi(std::uint64_t seed) const {
  Rng rng(mix_seed(seed, "transformer-init"));
  ParamStore store;
  const MixerBlockDims dims{rows_, config_.channels, config_.hidden_tok,
                            config_.hidden_cha};
  // Zero second projections start the network at the identity, so the first
  // update applied is the raw gradient itself.
  mixer_block_init(store, "u0", dims, rng, /*zero_second_proj=*/true);
  mixer_block_init(store, "u1", dims, rng, /*zero_second_proj=*/true);
  return store;
}

bool GradientTransformer::manifest_matches(const ParamStore& phi) const {
  return init_phi(0).same_manifest(phi);
}

Var GradientTransformer::transform(Tape& tape, std::span<const Var> phi,
                                   const ParamStore& manifest,
                                   Var h_in) const {
  if (h_in.rows() != rows_ || h_in.cols() != config_.channels) {
    throw std::invalid_argument("transform: input " +
                                h_in.value().shape_str() + " does not match " +
                                std::to_string(rows_) + "x" +
                                std::to_string(config_.channels));
  }
  Var h = mixer_block_forward(mixer_block_vars(phi, manifest, "u0"), h_in);
  return mixer_block_forward(mixer_block_vars(phi, manifest, "u1"), h);
}

Matrix GradientTransformer::transform(const ParamStore& phi,
                                      const Matrix& h_in) const {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(phi.count());
  for (std::size_t i = 0; i < phi.count(); ++i) {
    vars.push_back(tape.constant(phi.value(i)));
  }
  return transform(tape, vars, phi, tape.constant(h_in)).value();
}

void save_trace_csv(const std::vector<StepTrace>& trace,
                    const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "step,loss_re,loss_reg,loss_ul,loss_ulg,total\n";
  char buf[64];
  for (const auto& t : trace) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g",
                  t.step, t.loss_re, t.loss_reg, t.loss_ul, t.loss_ulg,
                  t.total);
    os << buf << "\n";
  }
}

UnlearnObjective::UnlearnObjective(const Backbone& backbone,
                                   const EventLog& full_log,
                                   const TemporalNeighborIndex& index_removed,
                                   const UnlearnRequest& request,
                                   const EventLog& val,
                                   const UnlearnConfig& config, Weights weights,
                                   std::size_t re_batch_size)
    : backbone_(backbone),
      full_log_(full_log),
      index_(index_removed),
      config_(config),
      weights_(weights),
      re_batch_size_(re_batch_size) {
  for (const Event& e : request.ul_events) {
    ul_instances_.push_back(
        LinkInstance{e.src, e.dst, e.time, config.desired_label});
  }
  ul_instances_ =
      subsample(std::move(ul_instances_), config.max_set_size,
                mix_seed(config.seed, "ul-subsample"));
  val_instances_ = subsample(
      make_instances(val, mix_seed(config.seed, "objective-val-negatives")),
      config.max_set_size, mix_seed(config.seed, "val-subsample"));
  for (const Event& e : request.counterparts) {
    cp_instances_.push_back(LinkInstance{e.src, e.dst, e.time, 1.0});
  }
  cp_instances_ =
      subsample(std::move(cp_instances_), config.max_set_size,
                mix_seed(config.seed, "cp-subsample"));
  for (const Event& e : request.re_events.events) {
    re_pool_.push_back(LinkInstance{e.src, e.dst, e.time, 1.0});
  }
  if (full_log.bipartite) {
    neg_lo_ = full_log.first_item;
    neg_hi_ = full_log.num_nodes;
  } else {
    neg_lo_ = 0;
    neg_hi_ = full_log.num_nodes;
  }
}

UnlearnObjective::Evaluation UnlearnObjective::evaluate(
    Tape& tape, std::span<const Var> theta, const ParamStore& manifest,
    std::size_t step) {
  Evaluation out;
  Var zero = tape.constant(Matrix::zeros(1, 1));
  // Each step draws its own stream so an evaluation is a pure function of
  // (theta, step).
  Rng rng(mix_seed(config_.seed, "objective-step-" + std::to_string(step)));

  // Remaining-data batch: fresh positives with paired negatives each step.
  // Also feeds the distribution regularizer, so it is built whenever either
  // term carries weight.
  Var loss_re = zero;
  Var probs_re;
  if (weights_.re != 0.0 || weights_.reg != 0.0) {
    const std::size_t bsz = std::min(re_batch_size_, re_pool_.size());
    std::vector<Var> logits;
    std::vector<double> labels;
    logits.reserve(2 * bsz);
    for (std::size_t i = 0; i < bsz; ++i) {
      const std::size_t j = rng.index(re_pool_.size());
      const LinkInstance& pos = re_pool_[j];
      logits.push_back(backbone_.instance_logit(tape, theta, manifest, index_,
                                                full_log_, pos));
      labels.push_back(1.0);
      NodeId nd = pos.dst;
      while (nd == pos.dst || nd == pos.src) {
        nd = neg_lo_ + static_cast<NodeId>(rng.below(
                           static_cast<std::uint64_t>(neg_hi_ - neg_lo_)));
      }
      logits.push_back(backbone_.instance_logit(
          tape, theta, manifest, index_, full_log_,
          LinkInstance{pos.src, nd, pos.time, 0.0}));
      labels.push_back(0.0);
    }
    Var stacked = stack_scalars(tape, logits);
    loss_re = bce_with_logits(stacked, labels);
    probs_re = sigmoid(stacked);
  }

  // Unlearning loss: mean BCE against the desired label.
  const bool need_ul_probs =
      weights_.ulg != 0.0 && config_.ulg_mode == UlgMode::kModelPredictions &&
      !cp_instances_.empty();
  Var loss_ul = zero;
  Var probs_ul;
  if (weights_.ul != 0.0 || need_ul_probs) {
    std::vector<Var> logits;
    std::vector<double> labels;
    logits.reserve(ul_instances_.size());
    for (const LinkInstance& inst : ul_instances_) {
      logits.push_back(backbone_.instance_logit(tape, theta, manifest, index_,
                                                full_log_, inst));
      labels.push_back(config_.desired_label);
    }
    Var stacked = stack_scalars(tape, logits);
    loss_ul = bce_with_logits(stacked, labels);
    probs_ul = sigmoid(stacked);
  }

  // Distribution regularizer between remaining and validation predictions.
  Var loss_reg = zero;
  if (weights_.reg != 0.0) {
    std::vector<Var> logits;
    logits.reserve(val_instances_.size());
    for (const LinkInstance& inst : val_instances_) {
      logits.push_back(backbone_.instance_logit(tape, theta, manifest, index_,
                                                full_log_, inst));
    }
    Var probs_val = sigmoid(stack_scalars(tape, logits));
    loss_reg = cmd(tape, probs_re, probs_val, config_.cmd_k);
  }

  // Counterpart regularizer; silently zero only when no counterpart exists.
  Var loss_ulg = zero;
  if (weights_.ulg != 0.0 && !cp_instances_.empty()) {
    std::vector<Var> logits;
    logits.reserve(cp_instances_.size());
    for (const LinkInstance& inst : cp_instances_) {
      logits.push_back(backbone_.instance_logit(tape, theta, manifest, index_,
                                                full_log_, inst));
    }
    Var probs_cp = sigmoid(stack_scalars(tape, logits));
    if (config_.ulg_mode == UlgMode::kDesiredConstant) {
      Var desired = tape.constant(Matrix::full(
          ul_instances_.size(), 1, config_.desired_label));
      loss_ulg = cmd(tape, desired, probs_cp, config_.cmd_k);
    } else {
      loss_ulg = cmd(tape, probs_ul, probs_cp, config_.cmd_k);
    }
  }

  out.components.step = step;
  out.components.loss_re = loss_re.scalar();
  out.components.loss_reg = loss_reg.scalar();
  out.components.loss_ul = loss_ul.scalar();
  out.components.loss_ulg = loss_ulg.scalar();
  out.total = add(add(scale(loss_re, weights_.re), scale(loss_reg, weights_.reg)),
                  add(scale(loss_ul, weights_.ul), scale(loss_ulg, weights_.ulg)));
  out.components.total = out.total.scalar();
  if (!std::isfinite(out.components.total)) {
    throw std::runtime_error(
        "unlearn objective: non-finite loss at step " + std::to_string(step) +
        " (re=" + std::to_string(out.components.loss_re) +
        " reg=" + std::to_string(out.components.loss_reg) +
        " ul=" + std::to_string(out.components.loss_ul) +
        " ulg=" + std::to_string(out.components.loss_ulg) + ")");
  }
  return out;
}

UnlearnedModel train_unlearner(const Backbone& backbone,
                               const TrainedModel& model,
                               const UnlearnRequest& request,
                               const EventLog& val,
                               const TemporalNeighborIndex& index_removed,
                               const EventLog& full_log,
                               const UnlearnConfig& config) {
  const ParamStore& theta_star = model.params;
  const std::size_t n = theta_star.total_size();

  const std::vector<double> grad =
      initial_gradient(backbone, theta_star, request.ul_events,
                       config.desired_label, index_removed, full_log);
  const double scale_s = pow2_scale(grad);
  const ReshapedGradient h_in = reshape_gradient(grad, config.channels);
  const Matrix h_scaled = dgu::scale(h_in.matrix, 1.0 / scale_s);

  const GradientTransformer transformer(config, n);
  ParamStore phi = transformer.init_phi(config.seed);
  ParamStore best_phi = phi;
  double best_total = std::numeric_limits<double>::infinity();

  UnlearnObjective objective(
      backbone, full_log, index_removed, request, val, config,
      UnlearnObjective::Weights{1.0, config.alpha, config.beta, config.gamma},
      model.config.batch_size);

  AdamState adam = AdamState::init(phi);
  const AdamConfig adam_cfg{config.lr, 0.9, 0.999, 1e-8};
  std::vector<StepTrace> trace;
  trace.reserve(config.steps);

  for (std::size_t step = 0; step < config.steps; ++step) {
    Tape tape;
    BoundParams bp = tape.bind(phi);
    Var h_out =
        transformer.transform(tape, bp.vars, phi, tape.constant(h_scaled));
    Var delta_flat = scale(flatten_head(h_out, n), scale_s);
    std::vector<Var> theta;
    theta.reserve(theta_star.count());
    for (std::size_t i = 0; i < theta_star.count(); ++i) {
      const Matrix& base = theta_star.value(i);
      theta.push_back(add(tape.constant(base),
                          slice_reshape(delta_flat, theta_star.offset(i),
                                        base.rows(), base.cols())));
    }
    auto eval = objective.evaluate(tape, theta, theta_star, step);
    trace.push_back(eval.components);
    if (eval.components.total < best_total) {
      best_total = eval.components.total;
      best_phi = phi;
    }
    auto grads = tape.backward(eval.total, bp);
    adam_step(phi, grads, adam, adam_cfg);
  }

  UnlearnedModel out;
  out.phi = std::move(best_phi);
  out.delta = inverse_reshape(
      dgu::scale(transformer.transform(out.phi, h_scaled), scale_s), n);
  std::vector<double> updated = theta_star.flatten();
  for (std::size_t i = 0; i < n; ++i) updated[i] += out.delta[i];
  out.params = theta_star;
  out.params.unflatten(updated);
  out.trace = std::move(trace);
  out.counterpart_warnings = request.counterpart_skipped;
  return out;
}

UnlearnedModel apply_future_request(const Backbone& backbone,
                                    const TrainedModel& model,
                                    const ParamStore& phi,
                                    const std::vector<Event>& ul_new,
                                    const TemporalNeighborIndex& index,
                                    const EventLog& full_log,
                                    const UnlearnConfig& config) {
  if (ul_new.empty()) {
    throw std::invalid_argument("apply_future_request: empty request");
  }
  const std::size_t n = model.params.total_size();
  const GradientTransformer transformer(config, n);
  if (!transformer.manifest_matches(phi)) {
    throw std::invalid_argument(
        "apply_future_request: transformer manifest mismatch");
  }
  const std::vector<double> grad = initial_gradient(
      backbone, model.params, ul_new, config.desired_label, index, full_log);
  const double scale_s = pow2_scale(grad);
  const ReshapedGradient h_in = reshape_gradient(grad, config.channels);
  const Matrix h_scaled = dgu::scale(h_in.matrix, 1.0 / scale_s);

  UnlearnedModel out;
  out.phi = phi;
  out.delta = inverse_reshape(
      dgu::scale(transformer.transform(phi, h_scaled), scale_s), n);
  std::vector<double> updated = model.params.flatten();
  for (std::size_t i = 0; i < n; ++i) updated[i] += out.delta[i];
  out.params = model.params;
  out.params.unflatten(updated);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> audit_transform_shapes(
    const UnlearnConfig& config, std::size_t n_params) {
  const GradientTransformer transformer(config, n_params);
  ParamStore phi = transformer.init_phi(1);
  Tape tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < phi.count(); ++i) {
    vars.push_back(tape.constant(phi.value(i)));
  }
  Matrix h_in(transformer.rows(), config.channels);
  (void)transformer.transform(tape, vars, phi, tape.constant(h_in));
  auto shapes = tape.node_shapes();
  for (std::size_t i = 0; i < phi.count(); ++i) {
    shapes.emplace_back(phi.value(i).rows(), phi.value(i).cols());
  }
  return shapes;
}

}  // namespace dgu
