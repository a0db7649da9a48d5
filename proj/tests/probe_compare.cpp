// Scratch probe: one compare pass at acceptance scale, printing everything
// needed to calibrate the experiment configuration. Not part of the suite.
#include <cstdlib>
#include <iostream>

#include "dgu/pipeline.hpp"

using namespace dgu;

int main(int argc, char** argv) {
  RunConfig cfg;
  cfg.synth.nodes = 50;
  cfg.synth.events = 2000;
  cfg.request.m = 20;
  cfg.request.depth = 1;
  cfg.request.k = 10;
  cfg.backbone.lr = 1e-3;
  cfg.backbone.epochs = 30;
  cfg.backbone.patience = 30;
  cfg.unlearn.steps = 40;
  cfg.unlearn.lr = 1e-2;
  cfg.finetune_lr = 1e-2;

  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    const double v = std::atof(argv[i + 1]);
    if (key == "--seed") {
      cfg.seeds = SeedSet{static_cast<std::uint64_t>(v),
                          static_cast<std::uint64_t>(v) + 1,
                          static_cast<std::uint64_t>(v) + 2,
                          static_cast<std::uint64_t>(v) + 3};
    } else if (key == "--epochs") { cfg.backbone.epochs = cfg.backbone.patience = static_cast<std::size_t>(v); }
    else if (key == "--steps") { cfg.unlearn.steps = static_cast<std::size_t>(v); }
    else if (key == "--blr") { cfg.backbone.lr = v; }
    else if (key == "--ulr") { cfg.unlearn.lr = v; }
    else if (key == "--ftlr") { cfg.finetune_lr = v; }
    else if (key == "--beta") { cfg.unlearn.beta = v; }
    else if (key == "--patience") { cfg.backbone.patience = static_cast<std::size_t>(v); }
  }

  PreparedData data = prepare_data(cfg);
  std::cout << "train=" << data.split.train.size()
            << " val=" << data.split.val.size()
            << " test=" << data.split.test.size()
            << " |S_ul|=" << data.request.ul_events.size()
            << " |S_re|=" << data.request.re_events.size()
            << " |cp|=" << data.request.counterparts.size() << "\n";

  CompareOutcome out = run_compare(cfg, data, &std::cerr);
  auto show = [](const MethodEval& m) {
    std::cout << m.method << ": acc_re=" << m.acc_re << " acc_ul=" << m.acc_ul
              << " auc_te=" << m.auc_te << " dAUC=" << m.delta_auc_te
              << " |dAccUL|=" << m.abs_delta_acc_ul << " t=" << m.seconds
              << "s x" << m.speedup << " cls=" << m.classifier << "\n";
  };
  show(out.original);
  for (const auto& m : out.methods) show(m);

  FutureOutcome fut = run_future(cfg, data, out.model, out.unlearned.phi);
  std::cout << "future: ours_acc_ul=" << fut.acc_ul_ours
            << " retrain_acc_ul=" << fut.acc_ul_retrain
            << " |d|=" << fut.abs_delta_acc_ul
            << " auc_ours=" << fut.auc_te_ours
            << " auc_ret=" << fut.auc_te_retrain
            << " apply=" << fut.apply_seconds << "s"
            << " retrain=" << fut.retrain_seconds << "s"
            << " x" << fut.speedup << "\n";
  return 0;
}
