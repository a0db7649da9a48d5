#pragma once

#include <string>

#include "dgu/adam.hpp"
#include "dgu/backbone.hpp"
#include "dgu/event_log.hpp"
#include "dgu/neighbor_index.hpp"

namespace dgu {

struct EpochStats {
  std::size_t epoch{0};
  double train_loss{0.0};
  double val_auc{0.0};
};

struct TrainedModel {
  ParamStore params;
  BackboneConfig config;
  std::size_t feat_dim{0};
  std::vector<EpochStats> history;

  void save(const std::string& params_path,
            const std::string& sidecar_path) const;
  static TrainedModel load(const std::string& params_path,
                           const std::string& sidecar_path);
};

// Chronological mini-batch training with one resampled negative per
// positive, mean BCE, Adam, and early stopping on validation AUC. Returns
// the best-validation checkpoint. Fully deterministic under config.seed.
TrainedModel train_from_scratch(const EventLog& train, const EventLog& val,
                                const TemporalNeighborIndex& index,
                                const EventLog& full_log,
                                const BackboneConfig& config);

}  // namespace dgu
