#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dgu/baselines.hpp"
#include "dgu/metrics.hpp"
#include "dgu/synth.hpp"
#include "dgu/unlearner.hpp"

namespace dgu {

struct RequestParams {
  std::size_t m{20};
  std::size_t depth{1};
  std::size_t k{10};
};

struct SeedSet {
  std::uint64_t data{1};
  std::uint64_t model{2};
  std::uint64_t unlearn{3};
  std::uint64_t eval{4};
};

// A full experiment description; a run is a pure function of this record
// (wall-clock fields aside).
struct RunConfig {
  std::string dataset_path;  // empty: generate the planted synthetic stream
  std::string dataset_format{"generic"};
  SynthConfig synth;
  double r_train{0.70};
  double r_val{0.15};
  double r_test{0.15};
  BackboneConfig backbone;
  UnlearnConfig unlearn;
  RequestParams request;
  double finetune_lr{-1.0};  // negative: use the backbone learning rate
  SeedSet seeds;
  std::string outdir{"out"};

  double effective_finetune_lr() const {
    return finetune_lr > 0.0 ? finetune_lr : backbone.lr;
  }
};

RunConfig run_config_from_json_file(const std::string& path);
std::string run_config_to_json(const RunConfig& config);
void save_run_config(const RunConfig& config, const std::string& path);
// Applies the key/value pairs of a config file over an existing record.
void overlay_config_file(RunConfig& config, const std::string& path);
std::uint64_t config_fingerprint(const RunConfig& config);

struct PreparedData {
  EventLog full;
  SplitSpec split;
  UnlearnRequest request;
  TemporalNeighborIndex index_full;
  TemporalNeighborIndex index_removed;
};

// Loads or synthesizes the dataset, splits it chronologically, samples the
// unlearning request and its counterparts, and builds both neighbor indexes.
PreparedData prepare_data(const RunConfig& config);

struct MethodEval {
  std::string method;
  double acc_re{0.0};
  double acc_ul{0.0};
  double auc_te{0.0};
  double delta_acc_re{0.0};
  double abs_delta_acc_ul{0.0};
  double delta_auc_te{0.0};
  double seconds{0.0};
  double speedup{0.0};
  std::string classifier;  // "original" | "unlearned" | "-"
};

struct CompareOutcome {
  std::uint64_t fingerprint{0};
  MethodEval original;                // the model before unlearning
  std::vector<MethodEval> methods;    // retrain, gradtrans, finetune, finetune-ul
  TimingReport timing;
  TrainedModel model;                 // theta*
  UnlearnedModel unlearned;           // gradient-transformation result
  ParamStore retrained_params;

  const MethodEval& method(const std::string& name) const;
};

// Trains the original model, runs the four unlearning methods on one
// request and evaluates them all on identical instance sets.
CompareOutcome run_compare(const RunConfig& config, const PreparedData& data,
                           std::ostream* progress = nullptr);

struct FutureOutcome {
  double apply_seconds{0.0};
  double retrain_seconds{0.0};
  double speedup{0.0};
  double acc_ul_ours{0.0};
  double acc_ul_retrain{0.0};
  double abs_delta_acc_ul{0.0};
  double auc_te_ours{0.0};
  double auc_te_retrain{0.0};
};

// Replays the recorded initial events as a fresh request through the
// already-trained transformation network, against a fresh retraining oracle.
FutureOutcome run_future(const RunConfig& config, const PreparedData& data,
                         const TrainedModel& model, const ParamStore& phi,
                         std::ostream* progress = nullptr);

// Serialization of results: one JSON document per run plus flat CSV rows
// and a long-format (method, dataset, metric, value) table for charting.
void save_compare_report(const CompareOutcome& outcome, const RunConfig& config,
                         const std::string& dir);
void save_future_report(const FutureOutcome& outcome, const RunConfig& config,
                        const std::string& dir);

void save_request_json(const UnlearnRequest& request, const std::string& path);
UnlearnRequest load_request_json(const std::string& path,
                                 const EventLog& train);

}  // namespace dgu
