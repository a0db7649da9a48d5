#include "dgu/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "dgu/rng.hpp"

namespace dgu {

EventLog synth_events(const SynthConfig& config) {
  if (config.nodes < 4 || config.events < 10) {
    throw std::invalid_argument("synth_events: graph too small");
  }
  const std::size_t groups =
      std::min<std::size_t>(config.groups,
                            static_cast<std::size_t>(config.nodes) / 2);
  const NodeId group_size = config.nodes / static_cast<NodeId>(groups);

  Rng rng(mix_seed(config.seed, "synth"));
  EventLog log;
  log.num_nodes = config.nodes;
  log.feat_dim = 1;

  struct Edge {
    NodeId u, v;
  };
  std::deque<Edge> window;

  auto pick_distinct = [&rng](NodeId lo, NodeId hi, NodeId& u, NodeId& v) {
    u = lo + static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(hi - lo)));
    do {
      v = lo + static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(hi - lo)));
    } while (v == u);
  };

  for (std::size_t step = 0; step < config.events; ++step) {
    const std::size_t g = step * groups / config.events;
    const NodeId lo = static_cast<NodeId>(g) * group_size;
    const NodeId hi = (g + 1 == groups) ? config.nodes
                                        : lo + group_size;

    NodeId u = 0, v = 0;
    if (rng.uniform() < config.pattern_prob) {
      // close a wedge seen in the recent window, staying inside the active
      // group
      std::vector<Edge> wedges;
      for (std::size_t i = 0; i < window.size(); ++i) {
        for (std::size_t j = i + 1; j < window.size(); ++j) {
          const Edge& a = window[i];
          const Edge& b = window[j];
          NodeId shared = -1, x = -1, y = -1;
          if (a.u == b.u) { shared = a.u; x = a.v; y = b.v; }
          else if (a.u == b.v) { shared = a.u; x = a.v; y = b.u; }
          else if (a.v == b.u) { shared = a.v; x = a.u; y = b.v; }
          else if (a.v == b.v) { shared = a.v; x = a.u; y = b.u; }
          if (shared < 0 || x == y) continue;
          if (x < lo || x >= hi || y < lo || y >= hi) continue;
          wedges.push_back(Edge{x, y});
        }
      }
      if (!wedges.empty()) {
        const Edge w = wedges[rng.index(wedges.size())];
        u = w.u;
        v = w.v;
      } else {
        pick_distinct(lo, hi, u, v);
      }
    } else {
      pick_distinct(0, config.nodes, u, v);
    }

    Event e;
    e.src = u;
    e.dst = v;
    e.time = static_cast<double>(step + 1);
    e.feat = {rng.uniform()};
    e.idx = step;
    log.events.push_back(std::move(e));

    window.push_back(Edge{u, v});
    if (window.size() > config.window) window.pop_front();
  }
  return log;
}

void save_generic_csv(const EventLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "src,dst,time";
  for (std::size_t i = 0; i < log.feat_dim; ++i) os << ",f" << i;
  os << "\n";
  char buf[40];
  for (const Event& e : log.events) {
    os << e.src << ',' << e.dst << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", e.time);
    os << buf;
    for (double f : e.feat) {
      std::snprintf(buf, sizeof(buf), "%.17g", f);
      os << ',' << buf;
    }
    os << "\n";
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace dgu
