#include "dgu/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace dgu {

namespace {

using nlohmann::json;

double now_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

json to_json(const RunConfig& c) {
  json j;
  j["dataset_path"] = c.dataset_path;
  j["dataset_format"] = c.dataset_format;
  j["synth"] = {{"nodes", c.synth.nodes},
                {"events", c.synth.events},
                {"seed", c.synth.seed},
                {"pattern_prob", c.synth.pattern_prob},
                {"window", c.synth.window},
                {"groups", c.synth.groups}};
  j["ratios"] = {{"train", c.r_train}, {"val", c.r_val}, {"test", c.r_test}};
  j["backbone"] = {{"neighbor_k", c.backbone.neighbor_k},
                   {"time_dim", c.backbone.time_dim},
                   {"hidden_dim", c.backbone.hidden_dim},
                   {"mixer_blocks", c.backbone.mixer_blocks},
                   {"lr", c.backbone.lr},
                   {"epochs", c.backbone.epochs},
                   {"batch_size", c.backbone.batch_size},
                   {"patience", c.backbone.patience}};
  j["unlearn"] = {{"alpha", c.unlearn.alpha},
                  {"beta", c.unlearn.beta},
                  {"gamma", c.unlearn.gamma},
                  {"cmd_k", c.unlearn.cmd_k},
                  {"channels", c.unlearn.channels},
                  {"hidden_tok", c.unlearn.hidden_tok},
                  {"hidden_cha", c.unlearn.hidden_cha},
                  {"lr", c.unlearn.lr},
                  {"steps", c.unlearn.steps},
                  {"desired_label", c.unlearn.desired_label},
                  {"ulg_mode", c.unlearn.ulg_mode == UlgMode::kDesiredConstant
                                   ? "desired"
                                   : "model"},
                  {"max_set_size", c.unlearn.max_set_size}};
  j["request"] = {{"m", c.request.m}, {"depth", c.request.depth},
                  {"k", c.request.k}};
  j["finetune_lr"] = c.finetune_lr;
  j["seeds"] = {{"data", c.seeds.data},
                {"model", c.seeds.model},
                {"unlearn", c.seeds.unlearn},
                {"eval", c.seeds.eval}};
  j["outdir"] = c.outdir;
  return j;
}

void from_json_into(const json& j, RunConfig& c) {
  if (j.contains("dataset_path")) c.dataset_path = j["dataset_path"];
  if (j.contains("dataset_format")) c.dataset_format = j["dataset_format"];
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    if (s.contains("nodes")) c.synth.nodes = s["nodes"].get<NodeId>();
    if (s.contains("events")) c.synth.events = s["events"].get<std::size_t>();
    if (s.contains("seed")) c.synth.seed = s["seed"].get<std::uint64_t>();
    if (s.contains("pattern_prob")) c.synth.pattern_prob = s["pattern_prob"];
    if (s.contains("window")) c.synth.window = s["window"].get<std::size_t>();
    if (s.contains("groups")) c.synth.groups = s["groups"].get<std::size_t>();
  }
  if (j.contains("ratios")) {
    const auto& r = j["ratios"];
    if (r.contains("train")) c.r_train = r["train"];
    if (r.contains("val")) c.r_val = r["val"];
    if (r.contains("test")) c.r_test = r["test"];
  }
  if (j.contains("backbone")) {
    const auto& b = j["backbone"];
    if (b.contains("neighbor_k")) c.backbone.neighbor_k = b["neighbor_k"].get<std::size_t>();
    if (b.contains("time_dim")) c.backbone.time_dim = b["time_dim"].get<std::size_t>();
    if (b.contains("hidden_dim")) c.backbone.hidden_dim = b["hidden_dim"].get<std::size_t>();
    if (b.contains("mixer_blocks")) c.backbone.mixer_blocks = b["mixer_blocks"].get<std::size_t>();
    if (b.contains("lr")) c.backbone.lr = b["lr"];
    if (b.contains("epochs")) c.backbone.epochs = b["epochs"].get<std::size_t>();
    if (b.contains("batch_size")) c.backbone.batch_size = b["batch_size"].get<std::size_t>();
    if (b.contains("patience")) c.backbone.patience = b["patience"].get<std::size_t>();
  }
  if (j.contains("unlearn")) {
    const auto& u = j["unlearn"];
    if (u.contains("alpha")) c.unlearn.alpha = u["alpha"];
    if (u.contains("beta")) c.unlearn.beta = u["beta"];
    if (u.contains("gamma")) c.unlearn.gamma = u["gamma"];
    if (u.contains("cmd_k")) c.unlearn.cmd_k = u["cmd_k"].get<int>();
    if (u.contains("channels")) c.unlearn.channels = u["channels"].get<std::size_t>();
    if (u.contains("hidden_tok")) c.unlearn.hidden_tok = u["hidden_tok"].get<std::size_t>();
    if (u.contains("hidden_cha")) c.unlearn.hidden_cha = u["hidden_cha"].get<std::size_t>();
    if (u.contains("lr")) c.unlearn.lr = u["lr"];
    if (u.contains("steps")) c.unlearn.steps = u["steps"].get<std::size_t>();
    if (u.contains("desired_label")) c.unlearn.desired_label = u["desired_label"];
    if (u.contains("ulg_mode")) {
      c.unlearn.ulg_mode = (u["ulg_mode"] == "model")
                               ? UlgMode::kModelPredictions
                               : UlgMode::kDesiredConstant;
    }
    if (u.contains("max_set_size")) c.unlearn.max_set_size = u["max_set_size"].get<std::size_t>();
  }
  if (j.contains("request")) {
    const auto& r = j["request"];
    if (r.contains("m")) c.request.m = r["m"].get<std::size_t>();
    if (r.contains("depth")) c.request.depth = r["depth"].get<std::size_t>();
    if (r.contains("k")) c.request.k = r["k"].get<std::size_t>();
  }
  if (j.contains("finetune_lr")) c.finetune_lr = j["finetune_lr"];
  if (j.contains("seeds")) {
    const auto& s = j["seeds"];
    if (s.contains("data")) c.seeds.data = s["data"].get<std::uint64_t>();
    if (s.contains("model")) c.seeds.model = s["model"].get<std::uint64_t>();
    if (s.contains("unlearn")) c.seeds.unlearn = s["unlearn"].get<std::uint64_t>();
    if (s.contains("eval")) c.seeds.eval = s["eval"].get<std::uint64_t>();
  }
  if (j.contains("outdir")) c.outdir = j["outdir"];
}

std::string dataset_name(const RunConfig& c) {
  if (c.dataset_path.empty()) return "synthetic";
  return std::filesystem::path(c.dataset_path).stem().string();
}

json method_to_json(const MethodEval& m) {
  return json{{"method", m.method},
              {"acc_re", m.acc_re},
              {"acc_ul", m.acc_ul},
              {"auc_te", m.auc_te},
              {"delta_acc_re", m.delta_acc_re},
              {"abs_delta_acc_ul", m.abs_delta_acc_ul},
              {"delta_auc_te", m.delta_auc_te},
              {"seconds", m.seconds},
              {"speedup", m.speedup},
              {"classifier", m.classifier}};
}

}  // namespace

RunConfig run_config_from_json_file(const std::string& path) {
  RunConfig c;
  overlay_config_file(c, path);
  return c;
}

std::string run_config_to_json(const RunConfig& config) {
  return to_json(config).dump(2);
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << run_config_to_json(config) << "\n";
}

void overlay_config_file(RunConfig& config, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  json j;
  is >> j;
  from_json_into(j, config);
}

std::uint64_t config_fingerprint(const RunConfig& config) {
  json j = to_json(config);
  j.erase("outdir");  // where results land does not change what they are
  const std::string s = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

PreparedData prepare_data(const RunConfig& config) {
  PreparedData data;
  if (config.dataset_path.empty()) {
    SynthConfig sc = config.synth;
    sc.seed = config.seeds.data;
    data.full = synth_events(sc);
  } else if (config.dataset_format == "tsv") {
    data.full = load_event_log(config.dataset_path);
  } else {
    data.full = parse_event_csv(config.dataset_path,
                                config.dataset_format == "jodie"
                                    ? CsvFormat::kJodie
                                    : CsvFormat::kGeneric);
  }
  data.full.validate();
  data.split =
      chronological_split(data.full, config.r_train, config.r_val, config.r_test);
  data.request = sample_unlearning_request(
      data.split.train, config.request.m, config.request.depth,
      config.request.k, mix_seed(config.seeds.data, "request"));
  data.request.counterparts =
      sample_counterparts(data.request, data.full,
                          mix_seed(config.seeds.data, "counterparts"),
                          &data.request.counterpart_skipped);
  data.index_full = TemporalNeighborIndex::build(data.full);
  data.index_removed =
      TemporalNeighborIndex::build(data.full, data.request.ul_idx_set());
  return data;
}

const MethodEval& CompareOutcome::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw std::out_of_range("CompareOutcome: no method " + name);
}

CompareOutcome run_compare(const RunConfig& config, const PreparedData& data,
                           std::ostream* progress) {
  CompareOutcome out;
  out.fingerprint = config_fingerprint(config);
  const Backbone backbone(config.backbone, data.full.feat_dim);

  auto log_line = [&](const std::string& line) {
    if (progress) *progress << line << "\n" << std::flush;
  };

  // The model to be unlearned, trained on the full training split.
  BackboneConfig bcfg = config.backbone;
  bcfg.seed = config.seeds.model;
  log_line("training original model");
  TrainedModel model = train_from_scratch(data.split.train, data.split.val,
                                          data.index_full, data.full, bcfg);

  // Gold standard.
  log_line("retraining on remaining data");
  BaselineResult rt =
      retrain(data.request.re_events, data.split.val, data.index_removed,
              data.full, config.backbone, config.seeds.model);

  // Gradient transformation.
  log_line("training gradient transformation");
  UnlearnConfig ucfg = config.unlearn;
  ucfg.seed = config.seeds.unlearn;
  const auto gt_start = std::chrono::steady_clock::now();
  UnlearnedModel um = train_unlearner(backbone, model, data.request,
                                      data.split.val, data.index_removed,
                                      data.full, ucfg);
  const double gt_seconds = now_seconds(gt_start);

  // Fine-tuning baselines on the same step budget.
  log_line("running fine-tuning baselines");
  BaselineResult ft =
      finetune(backbone, model, data.request, data.split.val,
               data.index_removed, data.full, ucfg, config.effective_finetune_lr());
  BaselineResult ftul =
      finetune_ul(backbone, model, data.request, data.split.val,
                  data.index_removed, data.full, ucfg,
                  config.effective_finetune_lr());

  // Shared evaluation: identical instance sets for every method.
  log_line("evaluating");
  const auto test_instances =
      make_instances(data.split.test, mix_seed(config.seeds.eval, "test"));
  const std::uint64_t re_seed = mix_seed(config.seeds.eval, "re");

  auto eval_params = [&](const std::string& name, const ParamStore& params,
                         const TemporalNeighborIndex& index,
                         double seconds) {
    MethodEval ev;
    ev.method = name;
    ev.acc_re = accuracy_split(backbone, params, index, data.full,
                               data.request.re_events, re_seed);
    ev.acc_ul =
        acc_unlearn(backbone, params, index, data.full, data.request.ul_events);
    ev.auc_te =
        auc_instances(backbone, params, index, data.full, test_instances);
    ev.seconds = seconds;
    ev.classifier = "-";
    return ev;
  };

  out.original = eval_params("original", model.params, data.index_full, 0.0);
  MethodEval ev_rt =
      eval_params("retrain", rt.params, data.index_removed, rt.seconds);
  MethodEval ev_gt =
      eval_params("gradtrans", um.params, data.index_removed, gt_seconds);
  MethodEval ev_ft =
      eval_params("finetune", ft.params, data.index_removed, ft.seconds);
  MethodEval ev_ftul =
      eval_params("finetune-ul", ftul.params, data.index_removed, ftul.seconds);

  const auto y_ori = threshold_predictions(
      backbone.score(model.params, data.index_full, data.full, test_instances));
  const auto y_ret = threshold_predictions(
      backbone.score(rt.params, data.index_removed, data.full, test_instances));
  auto verdict = [&](const ParamStore& params) {
    const auto y = threshold_predictions(
        backbone.score(params, data.index_removed, data.full, test_instances));
    return classify_unlearned(y, y_ori, y_ret) == ModelClass::kUnlearned
               ? "unlearned"
               : "original";
  };
  ev_gt.classifier = verdict(um.params);
  ev_ft.classifier = verdict(ft.params);
  ev_ftul.classifier = verdict(ftul.params);

  std::vector<TimingEntry> timings{{"retrain", rt.seconds},
                                   {"gradtrans", gt_seconds},
                                   {"finetune", ft.seconds},
                                   {"finetune-ul", ftul.seconds}};
  out.timing = timing_report(timings);

  for (MethodEval* ev : {&ev_rt, &ev_gt, &ev_ft, &ev_ftul}) {
    ev->delta_acc_re = ev->acc_re - ev_rt.acc_re;
    ev->abs_delta_acc_ul = std::fabs(ev->acc_ul - ev_rt.acc_ul);
    ev->delta_auc_te = ev->auc_te - ev_rt.auc_te;
    ev->speedup = out.timing.speedup.at(ev->method);
  }
  out.methods = {ev_rt, ev_gt, ev_ft, ev_ftul};
  out.model = std::move(model);
  out.unlearned = std::move(um);
  out.retrained_params = std::move(rt.params);
  return out;
}

FutureOutcome run_future(const RunConfig& config, const PreparedData& data,
                         const TrainedModel& model, const ParamStore& phi,
                         std::ostream* progress) {
  FutureOutcome out;
  const Backbone backbone(config.backbone, data.full.feat_dim);
  const std::vector<Event>& ul_new = data.request.initial_events;
  if (ul_new.empty()) {
    throw std::invalid_argument("run_future: request has no initial events");
  }
  std::unordered_set<std::size_t> skip;
  for (const Event& e : ul_new) skip.insert(e.idx);
  const auto index_new = TemporalNeighborIndex::build(data.full, skip);

  EventLog re_new;
  re_new.num_nodes = data.split.train.num_nodes;
  re_new.feat_dim = data.split.train.feat_dim;
  re_new.bipartite = data.split.train.bipartite;
  re_new.first_item = data.split.train.first_item;
  for (const Event& e : data.split.train.events) {
    if (!skip.count(e.idx)) re_new.events.push_back(e);
  }

  if (progress) *progress << "applying future request\n" << std::flush;
  UnlearnConfig ucfg = config.unlearn;
  ucfg.seed = config.seeds.unlearn;
  const auto apply_start = std::chrono::steady_clock::now();
  UnlearnedModel um = apply_future_request(backbone, model, phi, ul_new,
                                           index_new, data.full, ucfg);
  out.apply_seconds = now_seconds(apply_start);

  if (progress) *progress << "retraining for the future request\n" << std::flush;
  BaselineResult rt = retrain(re_new, data.split.val, index_new, data.full,
                              config.backbone, config.seeds.model);
  out.retrain_seconds = rt.seconds;
  out.speedup = out.retrain_seconds / out.apply_seconds;

  out.acc_ul_ours =
      acc_unlearn(backbone, um.params, index_new, data.full, ul_new);
  out.acc_ul_retrain =
      acc_unlearn(backbone, rt.params, index_new, data.full, ul_new);
  out.abs_delta_acc_ul = std::fabs(out.acc_ul_ours - out.acc_ul_retrain);

  const auto test_instances =
      make_instances(data.split.test, mix_seed(config.seeds.eval, "test"));
  out.auc_te_ours =
      auc_instances(backbone, um.params, index_new, data.full, test_instances);
  out.auc_te_retrain =
      auc_instances(backbone, rt.params, index_new, data.full, test_instances);
  return out;
}

void save_compare_report(const CompareOutcome& outcome, const RunConfig& config,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string dataset = dataset_name(config);

  json j;
  j["dataset"] = dataset;
  j["config_fingerprint"] = outcome.fingerprint;
  j["seeds"] = {{"data", config.seeds.data},
                {"model", config.seeds.model},
                {"unlearn", config.seeds.unlearn},
                {"eval", config.seeds.eval}};
  j["original"] = method_to_json(outcome.original);
  json methods = json::array();
  for (const auto& m : outcome.methods) methods.push_back(method_to_json(m));
  j["methods"] = methods;
  json raw = json::array();
  for (const auto& t : outcome.timing.raw) {
    raw.push_back({{"method", t.method}, {"seconds", t.seconds}});
  }
  j["timing_raw"] = raw;
  {
    std::ofstream os(dir + "/report.json");
    if (!os) throw std::runtime_error("cannot open " + dir + "/report.json");
    os << j.dump(2) << "\n";
  }

  // Wide CSV: one row per method.
  {
    std::ofstream os(dir + "/compare.csv");
    os << "method,acc_re,acc_ul,auc_te,delta_acc_re,abs_delta_acc_ul,"
          "delta_auc_te,seconds,speedup,classifier\n";
    auto row = [&os](const MethodEval& m) {
      os << m.method << ',' << m.acc_re << ',' << m.acc_ul << ',' << m.auc_te
         << ',' << m.delta_acc_re << ',' << m.abs_delta_acc_ul << ','
         << m.delta_auc_te << ',' << m.seconds << ',' << m.speedup << ','
         << m.classifier << "\n";
    };
    row(outcome.original);
    for (const auto& m : outcome.methods) row(m);
  }

  // Long-format CSV for charting: one row per (method, metric).
  {
    std::ofstream os(dir + "/plot.csv");
    os << "method,dataset,metric,value\n";
    auto rows = [&](const MethodEval& m) {
      os << m.method << ',' << dataset << ",acc_re," << m.acc_re << "\n";
      os << m.method << ',' << dataset << ",acc_ul," << m.acc_ul << "\n";
      os << m.method << ',' << dataset << ",auc_te," << m.auc_te << "\n";
      os << m.method << ',' << dataset << ",seconds," << m.seconds << "\n";
    };
    rows(outcome.original);
    for (const auto& m : outcome.methods) rows(m);
  }

  save_run_config(config, dir + "/config-snapshot.json");
}

void save_future_report(const FutureOutcome& outcome, const RunConfig& config,
                        const std::string& dir) {
  std::filesystem::create_directories(dir);
  json j;
  j["dataset"] = dataset_name(config);
  j["config_fingerprint"] = config_fingerprint(config);
  j["apply_seconds"] = outcome.apply_seconds;
  j["retrain_seconds"] = outcome.retrain_seconds;
  j["speedup"] = outcome.speedup;
  j["acc_ul_ours"] = outcome.acc_ul_ours;
  j["acc_ul_retrain"] = outcome.acc_ul_retrain;
  j["abs_delta_acc_ul"] = outcome.abs_delta_acc_ul;
  j["auc_te_ours"] = outcome.auc_te_ours;
  j["auc_te_retrain"] = outcome.auc_te_retrain;
  std::ofstream os(dir + "/future-report.json");
  if (!os) throw std::runtime_error("cannot open " + dir + "/future-report.json");
  os << j.dump(2) << "\n";
}

void save_request_json(const UnlearnRequest& request, const std::string& path) {
  json j;
  json ul = json::array();
  for (const Event& e : request.ul_events) ul.push_back(e.idx);
  j["ul_idx"] = ul;
  json seeds = json::array();
  for (const Event& e : request.initial_events) seeds.push_back(e.idx);
  j["initial_idx"] = seeds;
  json cps = json::array();
  for (const Event& e : request.counterparts) {
    cps.push_back({{"src", e.src}, {"dst", e.dst}, {"time", e.time},
                   {"idx", e.idx}});
  }
  j["counterparts"] = cps;
  j["counterpart_skipped"] = request.counterpart_skipped;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << j.dump(2) << "\n";
}

UnlearnRequest load_request_json(const std::string& path,
                                 const EventLog& train) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  json j;
  is >> j;
  UnlearnRequest req;
  std::unordered_set<std::size_t> ul_ids;
  for (const auto& v : j.at("ul_idx")) ul_ids.insert(v.get<std::size_t>());
  std::unordered_set<std::size_t> seed_ids;
  for (const auto& v : j.at("initial_idx")) seed_ids.insert(v.get<std::size_t>());

  req.re_events.num_nodes = train.num_nodes;
  req.re_events.feat_dim = train.feat_dim;
  req.re_events.bipartite = train.bipartite;
  req.re_events.first_item = train.first_item;
  for (const Event& e : train.events) {
    if (ul_ids.count(e.idx)) {
      req.ul_events.push_back(e);
    } else {
      req.re_events.events.push_back(e);
    }
    if (seed_ids.count(e.idx)) req.initial_events.push_back(e);
  }
  if (req.ul_events.size() != ul_ids.size()) {
    throw std::runtime_error("load_request_json: request does not match log");
  }
  for (const auto& c : j.at("counterparts")) {
    Event e;
    e.src = c.at("src").get<NodeId>();
    e.dst = c.at("dst").get<NodeId>();
    e.time = c.at("time").get<double>();
    e.idx = c.at("idx").get<std::size_t>();
    req.counterparts.push_back(e);
  }
  req.counterpart_skipped = j.value("counterpart_skipped", 0);
  return req;
}

}  // namespace dgu
