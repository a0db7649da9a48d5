#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dgu/metrics.hpp"
#include "dgu/rng.hpp"
#include "dgu/synth.hpp"
#include "dgu/trainer.hpp"

using namespace dgu;

TEST_CASE("rank-based auc") {
  CHECK(auc({0.9, 0.8}, {0.1, 0.2}) == 1.0);
  CHECK(auc({0.3, 0.7}, {0.3, 0.7}) == 0.5);  // identical multisets tie out
  CHECK(auc({0.7, 0.3}, {0.5}) == 0.5);       // one win, one loss of two pairs
  CHECK_THROWS_AS(auc({}, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(auc({0.1}, {}), std::invalid_argument);
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  Rng rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos(1 + rng.index(30)), neg(1 + rng.index(30));
    for (auto& v : pos) v = rng.uniform(-4.0, 4.0);
    for (auto& v : neg) v = rng.uniform(-4.0, 4.0);
    const double base = auc(pos, neg);
    const double a = rng.uniform(0.5, 3.0);
    const double b = rng.uniform(-2.0, 2.0);
    auto warp = [a, b](double x) { return std::exp(a * x) + b + x * a; };
    std::vector<double> pos_w = pos, neg_w = neg;
    for (auto& v : pos_w) v = warp(v);
    for (auto& v : neg_w) v = warp(v);
    CHECK(auc(pos_w, neg_w) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("accuracy of a constant always-edge predictor is one half") {
  SynthConfig sc;
  sc.nodes = 16;
  sc.events = 150;
  sc.seed = 3;
  EventLog log = synth_events(sc);
  auto index = TemporalNeighborIndex::build(log);

  BackboneConfig cfg;
  cfg.neighbor_k = 3;
  cfg.time_dim = 4;
  cfg.hidden_dim = 4;
  cfg.mixer_blocks = 1;
  Backbone backbone(cfg, log.feat_dim);
  ParamStore params = backbone.init_params(8);
  // force a huge positive decoder bias: every probability ~0.99+
  params.at("dec.b2")[0] = 50.0;
  Matrix& w2 = params.at("dec.w2");
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = 0.0;

  const double acc =
      accuracy_split(backbone, params, index, log, log, /*seed=*/5);
  CHECK(acc == 0.5);  // all positives right, all negatives wrong

  // every unlearned event predicted as an edge: zero unlearning accuracy
  CHECK(acc_unlearn(backbone, params, index, log, log.events) == 0.0);
}

TEST_CASE("accuracy is threshold semantics, not score magnitude") {
  // thresholded predictions only change when probabilities cross 0.5
  std::vector<double> logits{-3.0, -0.2, 0.2, 4.0};
  auto preds = threshold_predictions(logits);
  CHECK(preds == std::vector<int>({0, 0, 1, 1}));
  std::vector<double> scaled;
  for (double z : logits) scaled.push_back(3.0 * z);  // monotone, sign kept
  CHECK(threshold_predictions(scaled) == preds);
}

TEST_CASE("prediction-similarity classifier") {
  // agreement with retrain wins somewhere: unlearned
  CHECK(classify_unlearned({1, 0, 1}, {1, 1, 1}, {1, 0, 1}) ==
        ModelClass::kUnlearned);
  // full three-way agreement is a tie: original
  CHECK(classify_unlearned({1, 0}, {1, 0}, {1, 0}) == ModelClass::kOriginal);
  // agreement 0.8 vs 0.6 over ten entries
  std::vector<int> our{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  std::vector<int> ret{1, 1, 1, 1, 0, 0, 0, 0, 0, 1};  // agrees on 8
  std::vector<int> ori{1, 1, 1, 0, 0, 1, 0, 0, 1, 1};  // agrees on 6
  CHECK(classify_unlearned(our, ori, ret) == ModelClass::kUnlearned);
  CHECK_THROWS_AS(classify_unlearned({1}, {1, 0}, {1, 0}),
                  std::invalid_argument);
}

TEST_CASE("timing report speedups") {
  TimingReport report = timing_report({{"retrain", 100.0},
                                       {"gradtrans", 20.0},
                                       {"retrain", 110.0},
                                       {"gradtrans", 22.0}});
  CHECK(report.mean_seconds.at("retrain") == doctest::Approx(105.0));
  CHECK(report.speedup.at("gradtrans") == doctest::Approx(105.0 / 21.0));
  CHECK(report.speedup.at("retrain") == 1.0);
  CHECK(report.raw.size() == 4);  // raw seconds preserved for audit
  CHECK_THROWS_AS(timing_report({{"gradtrans", 5.0}}), std::invalid_argument);
}
