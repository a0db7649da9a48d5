#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "dgu/event_log.hpp"
#include "dgu/neighbor_index.hpp"

namespace dgu {

// One negative per positive: same source and timestamp, destination drawn
// uniformly from the valid partition with the true destination rejected.
std::vector<Event> sample_negatives(const EventLog& log, std::uint64_t seed);

// A batch unlearning request over a training log.
struct UnlearnRequest {
  std::vector<Event> ul_events;       // sorted by idx
  EventLog re_events;                 // train minus ul, order preserved
  std::vector<Event> initial_events;  // the sampled seeds, kept for replay
  std::vector<Event> counterparts;    // never-occurred sibling events
  std::size_t counterpart_skipped{0};

  std::unordered_set<std::size_t> ul_idx_set() const;
};

// Samples m seed events uniformly without replacement, then expands them for
// `depth` rounds: each round adds the recent-k neighbor events of every
// endpoint of every event currently in the request, looked up at that
// event's timestamp.
UnlearnRequest sample_unlearning_request(const EventLog& train, std::size_t m,
                                         std::size_t depth, std::size_t k,
                                         std::uint64_t seed);

// One counterpart per unlearned event: same source and timestamp, new
// destination, rejecting any (src,dst,time) triple present anywhere in the
// full log. Events with no valid substitute are skipped and counted.
std::vector<Event> sample_counterparts(const UnlearnRequest& req,
                                       const EventLog& full_log,
                                       std::uint64_t seed,
                                       std::size_t* skipped = nullptr);

}  // namespace dgu
