#include "dgu/baselines.hpp"

#include <chrono>

namespace dgu {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

BaselineResult finetune_impl(const std::string& method,
                             const Backbone& backbone,
                             const TrainedModel& model,
                             const UnlearnRequest& request,
                             const EventLog& val,
                             const TemporalNeighborIndex& index_removed,
                             const EventLog& full_log,
                             const UnlearnConfig& config, double lr,
                             UnlearnObjective::Weights weights) {
  const auto start = std::chrono::steady_clock::now();
  BaselineResult result;
  result.method = method;
  result.params = model.params;

  UnlearnObjective objective(backbone, full_log, index_removed, request, val,
                             config, weights, model.config.batch_size);
  AdamState adam = AdamState::init(result.params);
  const AdamConfig adam_cfg{lr, 0.9, 0.999, 1e-8};
  for (std::size_t step = 0; step < config.steps; ++step) {
    Tape tape;
    BoundParams bp = tape.bind(result.params);
    auto eval = objective.evaluate(tape, bp.vars, result.params, step);
    result.trace.push_back(eval.components);
    auto grads = tape.backward(eval.total, bp);
    adam_step(result.params, grads, adam, adam_cfg);
  }
  result.seconds = seconds_since(start);
  return result;
}

}  // namespace

BaselineResult retrain(const EventLog& re_events, const EventLog& val,
                       const TemporalNeighborIndex& index_removed,
                       const EventLog& full_log, const BackboneConfig& config,
                       std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  BackboneConfig cfg = config;
  cfg.seed = seed;
  TrainedModel model =
      train_from_scratch(re_events, val, index_removed, full_log, cfg);
  BaselineResult result;
  result.method = "retrain";
  result.params = std::move(model.params);
  result.history = std::move(model.history);
  result.seconds = seconds_since(start);
  return result;
}

BaselineResult finetune(const Backbone& backbone, const TrainedModel& model,
                        const UnlearnRequest& request, const EventLog& val,
                        const TemporalNeighborIndex& index_removed,
                        const EventLog& full_log, const UnlearnConfig& config,
                        double lr) {
  return finetune_impl("finetune", backbone, model, request, val,
                       index_removed, full_log, config, lr,
                       UnlearnObjective::Weights{1.0, 0.0, 1.0, 0.0});
}

BaselineResult finetune_ul(const Backbone& backbone, const TrainedModel& model,
                           const UnlearnRequest& request, const EventLog& val,
                           const TemporalNeighborIndex& index_removed,
                           const EventLog& full_log,
                           const UnlearnConfig& config, double lr) {
  return finetune_impl("finetune-ul", backbone, model, request, val,
                       index_removed, full_log, config, lr,
                       UnlearnObjective::Weights{0.0, 0.0, 1.0, 0.0});
}

}  // namespace dgu
