#include <cmath>
#include <iostream>
#include "dgu/pipeline.hpp"
using namespace dgu;
int main() {
  RunConfig cfg;
  cfg.synth.nodes = 50; cfg.synth.events = 2000;
  cfg.backbone.lr = 1e-3; cfg.backbone.epochs = 30; cfg.backbone.patience = 30;
  PreparedData data = prepare_data(cfg);
  BackboneConfig bcfg = cfg.backbone; bcfg.seed = cfg.seeds.model;
  TrainedModel model = train_from_scratch(data.split.train, data.split.val, data.index_full, data.full, bcfg);
  Backbone backbone(cfg.backbone, data.full.feat_dim);
  auto grad = initial_gradient(backbone, model.params, data.request.ul_events, 0.0, data.index_removed, data.full);
  double linf = 0, l2 = 0;
  for (double v : grad) { linf = std::max(linf, std::fabs(v)); l2 += v * v; }
  auto theta = model.params.flatten();
  double tinf = 0, t2 = 0;
  for (double v : theta) { tinf = std::max(tinf, std::fabs(v)); t2 += v * v; }
  std::cout << "n=" << grad.size() << " |S_ul|=" << data.request.ul_events.size()
            << "\ngrad: linf=" << linf << " l2=" << std::sqrt(l2)
            << "\ntheta: linf=" << tinf << " l2=" << std::sqrt(t2) << "\n";
  return 0;
}
