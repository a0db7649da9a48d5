#pragma once

#include <map>
#include <string>
#include <vector>

#include "dgu/backbone.hpp"
#include "dgu/event_log.hpp"
#include "dgu/neighbor_index.hpp"
#include "dgu/param_store.hpp"

namespace dgu {

// Exact rank-based AUC: (#(pos > neg) + 0.5 * #(pos == neg)) / (|pos|*|neg|).
double auc(const std::vector<double>& pos_scores,
           const std::vector<double>& neg_scores);

// AUC over a labeled instance set scored with the given model.
double auc_instances(const Backbone& backbone, const ParamStore& params,
                     const TemporalNeighborIndex& index, const EventLog& log,
                     const std::vector<LinkInstance>& instances);

// Accuracy over split positives plus seeded negatives at the probability
// threshold (default 0.5). An instance is predicted an edge when its
// probability is >= threshold.
double accuracy_split(const Backbone& backbone, const ParamStore& params,
                      const TemporalNeighborIndex& index, const EventLog& log,
                      const EventLog& split, std::uint64_t negative_seed,
                      double threshold = 0.5);

// Fraction of unlearned events predicted as non-edges, i.e. accuracy against
// the desired unlearning label 0.
double acc_unlearn(const Backbone& backbone, const ParamStore& params,
                   const TemporalNeighborIndex& index, const EventLog& log,
                   const std::vector<Event>& ul_events, double threshold = 0.5);

enum class ModelClass { kOriginal, kUnlearned };

// 1-nearest-neighbour verdict over thresholded test predictions: unlearned
// iff the candidate agrees with the retrained model more often than with the
// original one; ties go to original.
ModelClass classify_unlearned(const std::vector<int>& y_our,
                              const std::vector<int>& y_ori,
                              const std::vector<int>& y_ret);

std::vector<int> threshold_predictions(const std::vector<double>& logits,
                                       double threshold = 0.5);

struct TimingEntry {
  std::string method;
  double seconds{0.0};
};

// Mean seconds per method plus speed-up relative to retraining. Raw entries
// are preserved for audit.
struct TimingReport {
  std::map<std::string, double> mean_seconds;
  std::map<std::string, double> speedup;
  std::vector<TimingEntry> raw;
};

TimingReport timing_report(const std::vector<TimingEntry>& runs);

double sigmoid_prob(double logit);

}  // namespace dgu
