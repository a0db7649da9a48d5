#include "dgu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dgu {

double sigmoid_prob(double logit) {
  if (logit >= 0.0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

double auc(const std::vector<double>& pos_scores,
           const std::vector<double>& neg_scores) {
  if (pos_scores.empty() || neg_scores.empty()) {
    throw std::invalid_argument("auc: empty score vector");
  }
  std::vector<double> neg = neg_scores;
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : pos_scores) {
    const auto lower =
        std::lower_bound(neg.begin(), neg.end(), p) - neg.begin();
    const auto upper =
        std::upper_bound(neg.begin(), neg.end(), p) - neg.begin();
    wins += static_cast<double>(lower) +
            0.5 * static_cast<double>(upper - lower);
  }
  return wins / (static_cast<double>(pos_scores.size()) *
                 static_cast<double>(neg.size()));
}

double auc_instances(const Backbone& backbone, const ParamStore& params,
                     const TemporalNeighborIndex& index, const EventLog& log,
                     const std::vector<LinkInstance>& instances) {
  const auto logits = backbone.score(params, index, log, instances);
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    (instances[i].label > 0.5 ? pos : neg).push_back(logits[i]);
  }
  return auc(pos, neg);
}

double accuracy_split(const Backbone& backbone, const ParamStore& params,
                      const TemporalNeighborIndex& index, const EventLog& log,
                      const EventLog& split, std::uint64_t negative_seed,
                      double threshold) {
  if (split.empty()) throw std::invalid_argument("accuracy_split: empty split");
  const auto instances = make_instances(split, negative_seed);
  const auto logits = backbone.score(params, index, log, instances);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const int pred = sigmoid_prob(logits[i]) >= threshold ? 1 : 0;
    const int label = instances[i].label > 0.5 ? 1 : 0;
    if (pred == label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

double acc_unlearn(const Backbone& backbone, const ParamStore& params,
                   const TemporalNeighborIndex& index, const EventLog& log,
                   const std::vector<Event>& ul_events, double threshold) {
  if (ul_events.empty()) throw std::invalid_argument("acc_unlearn: empty set");
  std::vector<LinkInstance> instances;
  instances.reserve(ul_events.size());
  for (const Event& e : ul_events) {
    instances.push_back(LinkInstance{e.src, e.dst, e.time, 0.0});
  }
  const auto logits = backbone.score(params, index, log, instances);
  std::size_t non_edges = 0;
  for (double z : logits) {
    if (sigmoid_prob(z) < threshold) ++non_edges;
  }
  return static_cast<double>(non_edges) / static_cast<double>(logits.size());
}

ModelClass classify_unlearned(const std::vector<int>& y_our,
                              const std::vector<int>& y_ori,
                              const std::vector<int>& y_ret) {
  if (y_our.size() != y_ori.size() || y_our.size() != y_ret.size() ||
      y_our.empty()) {
    throw std::invalid_argument("classify_unlearned: length mismatch");
  }
  std::size_t agree_ret = 0, agree_ori = 0;
  for (std::size_t i = 0; i < y_our.size(); ++i) {
    if (y_our[i] == y_ret[i]) ++agree_ret;
    if (y_our[i] == y_ori[i]) ++agree_ori;
  }
  return agree_ret > agree_ori ? ModelClass::kUnlearned : ModelClass::kOriginal;
}

std::vector<int> threshold_predictions(const std::vector<double>& logits,
                                       double threshold) {
  std::vector<int> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = sigmoid_prob(logits[i]) >= threshold ? 1 : 0;
  }
  return out;
}

TimingReport timing_report(const std::vector<TimingEntry>& runs) {
  TimingReport report;
  report.raw = runs;
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : runs) {
    acc[r.method].first += r.seconds;
    acc[r.method].second += 1;
  }
  if (!acc.count("retrain")) {
    throw std::invalid_argument("timing_report: no retraining entry");
  }
  for (const auto& [method, sum_count] : acc) {
    report.mean_seconds[method] =
        sum_count.first / static_cast<double>(sum_count.second);
  }
  const double t_retrain = report.mean_seconds.at("retrain");
  for (const auto& [method, mean] : report.mean_seconds) {
    report.speedup[method] = t_retrain / mean;
  }
  return report;
}

}  // namespace dgu
