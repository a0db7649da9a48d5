#pragma once

#include <string>

#include "dgu/unlearner.hpp"

namespace dgu {

struct BaselineResult {
  std::string method;
  ParamStore params;
  double seconds{0.0};
  std::vector<StepTrace> trace;     // fine-tuning variants
  std::vector<EpochStats> history;  // retraining
};

// Gold standard: training from scratch on the remaining data, timed with
// the shared instrumentation.
BaselineResult retrain(const EventLog& re_events, const EventLog& val,
                       const TemporalNeighborIndex& index_removed,
                       const EventLog& full_log, const BackboneConfig& config,
                       std::uint64_t seed);

// Adam directly on theta starting from theta*, with loss re + ul (finetune)
// or ul alone (finetune-ul), on the same step budget as the transformation
// network.
BaselineResult finetune(const Backbone& backbone, const TrainedModel& model,
                        const UnlearnRequest& request, const EventLog& val,
                        const TemporalNeighborIndex& index_removed,
                        const EventLog& full_log, const UnlearnConfig& config,
                        double lr);

BaselineResult finetune_ul(const Backbone& backbone, const TrainedModel& model,
                           const UnlearnRequest& request, const EventLog& val,
                           const TemporalNeighborIndex& index_removed,
                           const EventLog& full_log,
                           const UnlearnConfig& config, double lr);

}  // namespace dgu
