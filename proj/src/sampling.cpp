#include "dgu/sampling.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "dgu/rng.hpp"

namespace dgu {

namespace {

struct Triple {
  NodeId src;
  NodeId dst;
  std::uint64_t time_bits;
  bool operator==(const Triple& o) const {
    return src == o.src && dst == o.dst && time_bits == o.time_bits;
  }
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 0x100000001B3ULL;
    };
    mix(static_cast<std::uint64_t>(t.src));
    mix(static_cast<std::uint64_t>(t.dst));
    mix(t.time_bits);
    return static_cast<std::size_t>(h);
  }
};

std::uint64_t time_bits(double t) {
  std::uint64_t b;
  std::memcpy(&b, &t, sizeof(b));
  return b;
}

// Destination candidate range: the item partition when bipartite, else all
// nodes.
std::pair<NodeId, NodeId> dst_range(const EventLog& log) {
  if (log.bipartite) return {log.first_item, log.num_nodes};
  return {0, log.num_nodes};
}

}  // namespace

std::vector<Event> sample_negatives(const EventLog& log, std::uint64_t seed) {
  if (log.num_nodes < 2) {
    throw std::invalid_argument("sample_negatives: need at least 2 nodes");
  }
  const auto [lo, hi] = dst_range(log);
  Rng rng(seed);
  std::vector<Event> negatives;
  negatives.reserve(log.size());
  for (const Event& e : log.events) {
    // Count candidates excluding the true destination and the source.
    NodeId excluded = (e.src >= lo && e.src < hi) ? 2 : 1;
    if (hi - lo - excluded < 1) {
      throw std::invalid_argument(
          "sample_negatives: only one possible destination for node " +
          std::to_string(e.src));
    }
    NodeId dst = e.dst;
    while (dst == e.dst || dst == e.src) {
      dst = lo + static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(hi - lo)));
    }
    Event neg;
    neg.src = e.src;
    neg.dst = dst;
    neg.time = e.time;
    neg.idx = e.idx;
    negatives.push_back(std::move(neg));
  }
  return negatives;
}

std::unordered_set<std::size_t> UnlearnRequest::ul_idx_set() const {
  std::unordered_set<std::size_t> s;
  s.reserve(ul_events.size());
  for (const Event& e : ul_events) s.insert(e.idx);
  return s;
}

UnlearnRequest sample_unlearning_request(const EventLog& train, std::size_t m,
                                         std::size_t depth, std::size_t k,
                                         std::uint64_t seed) {
  const std::size_t n = train.size();
  if (m < 1 || m > n) {
    throw std::invalid_argument("sample_unlearning_request: m=" +
                                std::to_string(m) + " outside [1, " +
                                std::to_string(n) + "]");
  }
  // Partial Fisher-Yates over event positions for an unbiased m-subset.
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }

  std::unordered_map<std::size_t, const Event*> by_idx;
  by_idx.reserve(n);
  for (const Event& e : train.events) by_idx.emplace(e.idx, &e);

  UnlearnRequest req;
  std::unordered_set<std::size_t> selected;
  for (std::size_t i = 0; i < m; ++i) {
    const Event& e = train.events[order[i]];
    selected.insert(e.idx);
    req.initial_events.push_back(e);
  }
  std::sort(req.initial_events.begin(), req.initial_events.end(),
            [](const Event& a, const Event& b) { return a.idx < b.idx; });

  const TemporalNeighborIndex index = TemporalNeighborIndex::build(train);
  std::vector<std::size_t> frontier(selected.begin(), selected.end());
  std::sort(frontier.begin(), frontier.end());
  for (std::size_t round = 0; round < depth; ++round) {
    std::vector<std::size_t> added;
    for (std::size_t idx : frontier) {
      const Event& e = *by_idx.at(idx);
      for (NodeId endpoint : {e.src, e.dst}) {
        for (const NeighborRecord& r : index.recent(endpoint, e.time, k)) {
          if (selected.insert(r.event_idx).second) added.push_back(r.event_idx);
        }
      }
    }
    if (added.empty()) break;
    std::sort(added.begin(), added.end());
    frontier = std::move(added);
  }

  req.re_events.num_nodes = train.num_nodes;
  req.re_events.feat_dim = train.feat_dim;
  req.re_events.bipartite = train.bipartite;
  req.re_events.first_item = train.first_item;
  for (const Event& e : train.events) {
    if (selected.count(e.idx)) {
      req.ul_events.push_back(e);
    } else {
      req.re_events.events.push_back(e);
    }
  }
  return req;
}

std::vector<Event> sample_counterparts(const UnlearnRequest& req,
                                       const EventLog& full_log,
                                       std::uint64_t seed,
                                       std::size_t* skipped) {
  const auto [lo, hi] = dst_range(full_log);
  if (hi - lo < 2) {
    throw std::invalid_argument(
        "sample_counterparts: need at least 2 candidate destinations");
  }
  std::unordered_set<Triple, TripleHash> known;
  known.reserve(full_log.size());
  for (const Event& e : full_log.events) {
    known.insert(Triple{e.src, e.dst, time_bits(e.time)});
  }

  Rng rng(seed);
  std::vector<Event> counterparts;
  std::size_t skip_count = 0;
  for (const Event& e : req.ul_events) {
    bool found = false;
    const auto attempts = static_cast<std::size_t>(full_log.num_nodes);
    for (std::size_t a = 0; a < attempts && !found; ++a) {
      const NodeId dst =
          lo + static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(hi - lo)));
      if (dst == e.src || dst == e.dst) continue;
      if (known.count(Triple{e.src, dst, time_bits(e.time)})) continue;
      Event c;
      c.src = e.src;
      c.dst = dst;
      c.time = e.time;
      c.idx = e.idx;
      counterparts.push_back(std::move(c));
      found = true;
    }
    if (!found) ++skip_count;
  }
  if (skipped) *skipped = skip_count;
  return counterparts;
}

}  // namespace dgu
