#include "dgu/trainer.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dgu/metrics.hpp"
#include "dgu/rng.hpp"
#include "dgu/sampling.hpp"

namespace dgu {

namespace {

using nlohmann::json;

json config_to_json(const BackboneConfig& c) {
  return json{{"neighbor_k", c.neighbor_k}, {"time_dim", c.time_dim},
              {"hidden_dim", c.hidden_dim}, {"mixer_blocks", c.mixer_blocks},
              {"lr", c.lr},                 {"epochs", c.epochs},
              {"batch_size", c.batch_size}, {"patience", c.patience},
              {"seed", c.seed}};
}

BackboneConfig config_from_json(const json& j) {
  BackboneConfig c;
  c.neighbor_k = j.at("neighbor_k").get<std::size_t>();
  c.time_dim = j.at("time_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.mixer_blocks = j.at("mixer_blocks").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void TrainedModel::save(const std::string& params_path,
                        const std::string& sidecar_path) const {
  params.save(params_path);
  json j;
  j["config"] = config_to_json(config);
  j["feat_dim"] = feat_dim;
  json hist = json::array();
  for (const auto& e : history) {
    hist.push_back(
        {{"epoch", e.epoch}, {"loss", e.train_loss}, {"val_auc", e.val_auc}});
  }
  j["history"] = hist;
  std::ofstream os(sidecar_path);
  if (!os) throw std::runtime_error("cannot open " + sidecar_path);
  os << j.dump(2) << "\n";
}

TrainedModel TrainedModel::load(const std::string& params_path,
                                const std::string& sidecar_path) {
  TrainedModel m;
  m.params = ParamStore::load(params_path);
  std::ifstream is(sidecar_path);
  if (!is) throw std::runtime_error("cannot open " + sidecar_path);
  json j;
  is >> j;
  m.config = config_from_json(j.at("config"));
  m.feat_dim = j.at("feat_dim").get<std::size_t>();
  for (const auto& e : j.at("history")) {
    m.history.push_back(EpochStats{e.at("epoch").get<std::size_t>(),
                                   e.at("loss").get<double>(),
                                   e.at("val_auc").get<double>()});
  }
  return m;
}

TrainedModel train_from_scratch(const EventLog& train, const EventLog& val,
                                const TemporalNeighborIndex& index,
                                const EventLog& full_log,
                                const BackboneConfig& config) {
  if (train.empty()) {
    throw std::invalid_argument("train_from_scratch: empty training log");
  }
  if ((train.bipartite && train.num_nodes - train.first_item < 2) ||
      (!train.bipartite && train.num_nodes < 3)) {
    throw std::invalid_argument(
        "train_from_scratch: too few candidate destinations for negatives");
  }
  const Backbone backbone(config, train.feat_dim);
  ParamStore params = backbone.init_params(config.seed);
  const std::size_t param_count = params.total_size();
  AdamState adam = AdamState::init(params);
  const AdamConfig adam_cfg{config.lr, 0.9, 0.999, 1e-8};

  // Validation instances are fixed once so every epoch is scored on the
  // same set.
  const auto val_instances =
      make_instances(val, mix_seed(config.seed, "val-negatives"));

  TrainedModel best;
  best.config = config;
  best.feat_dim = train.feat_dim;
  double best_auc = -1.0;
  std::size_t since_best = 0;

  const auto [lo, hi] = train.bipartite
                            ? std::pair<NodeId, NodeId>{train.first_item,
                                                        train.num_nodes}
                            : std::pair<NodeId, NodeId>{0, train.num_nodes};

  std::vector<EpochStats> history;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng neg_rng(mix_seed(config.seed, "train-negatives-epoch-" +
                                          std::to_string(epoch)));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < train.size();
         begin += config.batch_size) {
      const std::size_t end =
          std::min(begin + config.batch_size, train.size());
      Tape tape;
      BoundParams bp = tape.bind(params);
      std::vector<Var> logits;
      std::vector<double> labels;
      logits.reserve(2 * (end - begin));
      labels.reserve(2 * (end - begin));
      for (std::size_t i = begin; i < end; ++i) {
        const Event& e = train.events[i];
        logits.push_back(backbone.instance_logit(
            tape, bp.vars, params, index, full_log,
            LinkInstance{e.src, e.dst, e.time, 1.0}));
        labels.push_back(1.0);
        NodeId nd = e.dst;
        while (nd == e.dst || nd == e.src) {
          nd = lo + static_cast<NodeId>(
                        neg_rng.below(static_cast<std::uint64_t>(hi - lo)));
        }
        logits.push_back(backbone.instance_logit(
            tape, bp.vars, params, index, full_log,
            LinkInstance{e.src, nd, e.time, 0.0}));
        labels.push_back(0.0);
      }
      Var loss = bce_with_logits(stack_scalars(tape, logits), labels);
      const double loss_value = loss.scalar();
      if (!std::isfinite(loss_value)) {
        throw std::runtime_error(
            "train_from_scratch: non-finite loss at epoch " +
            std::to_string(epoch) + " batch " + std::to_string(batches));
      }
      epoch_loss += loss_value;
      ++batches;
      auto grads = tape.backward(loss, bp);
      adam_step(params, grads, adam, adam_cfg);
    }
    const double val_auc =
        auc_instances(backbone, params, index, full_log, val_instances);
    history.push_back(EpochStats{epoch, epoch_loss / static_cast<double>(batches),
                                 val_auc});

    if (val_auc > best_auc) {
      best_auc = val_auc;
      best.params = params;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  best.history = std::move(history);
  if (best.params.count() == 0) best.params = params;
  if (best.params.total_size() != param_count) {
    throw std::logic_error("train_from_scratch: parameter count changed");
  }
  return best;
}

}  // namespace dgu
