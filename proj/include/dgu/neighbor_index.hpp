#pragma once

#include <unordered_set>
#include <vector>

#include "dgu/event_log.hpp"

namespace dgu {

struct NeighborRecord {
  NodeId neighbor{0};
  double time{0.0};
  std::size_t event_idx{0};
};

// Per-node interaction history sorted by (time, idx). Lookups at time t see
// only records strictly before t. Immutable after construction; lookups are
// read-only and safe to run in parallel.
class TemporalNeighborIndex {
 public:
  // skip holds event idx values to leave out (e.g. an unlearning request).
  static TemporalNeighborIndex build(
      const EventLog& log,
      const std::unordered_set<std::size_t>& skip = {});

  // Up to k records with time < t, newest first. Unknown nodes yield an
  // empty list.
  std::vector<NeighborRecord> recent(NodeId node, double t, std::size_t k) const;

 private:
  std::vector<std::vector<NeighborRecord>> per_node_;
};

}  // namespace dgu
