#include "dgu/neighbor_index.hpp"

#include <algorithm>
#include <stdexcept>

namespace dgu {

TemporalNeighborIndex TemporalNeighborIndex::build(
    const EventLog& log, const std::unordered_set<std::size_t>& skip) {
  TemporalNeighborIndex index;
  index.per_node_.resize(static_cast<std::size_t>(log.num_nodes));
  for (const Event& e : log.events) {
    if (!skip.empty() && skip.count(e.idx)) continue;
    index.per_node_[static_cast<std::size_t>(e.src)].push_back(
        NeighborRecord{e.dst, e.time, e.idx});
    index.per_node_[static_cast<std::size_t>(e.dst)].push_back(
        NeighborRecord{e.src, e.time, e.idx});
  }
  // The event stream is time-ordered, so each per-node list already is;
  // sort anyway to keep the invariant independent of input ordering.
  for (auto& list : index.per_node_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const NeighborRecord& a, const NeighborRecord& b) {
                       if (a.time != b.time) return a.time < b.time;
                       return a.event_idx < b.event_idx;
                     });
  }
  return index;
}

std::vector<NeighborRecord> TemporalNeighborIndex::recent(
    NodeId node, double t, std::size_t k) const {
  if (k < 1) throw std::invalid_argument("recent: k must be >= 1");
  std::vector<NeighborRecord> out;
  if (node < 0 || static_cast<std::size_t>(node) >= per_node_.size()) {
    return out;
  }
  const auto& list = per_node_[static_cast<std::size_t>(node)];
  // First record with time >= t; everything before it is strictly earlier.
  auto it = std::lower_bound(
      list.begin(), list.end(), t,
      [](const NeighborRecord& r, double value) { return r.time < value; });
  const std::size_t available = static_cast<std::size_t>(it - list.begin());
  const std::size_t take = std::min(k, available);
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back(list[available - 1 - i]);
  }
  return out;
}

}  // namespace dgu
