#pragma once

#include <cstdint>

#include "dgu/event_log.hpp"

namespace dgu {

// Planted synthetic interaction stream. Nodes are partitioned into groups
// that take turns being active; while a group is active, most edges close a
// wedge observed in the recent event window (two endpoints that just shared
// a neighbor connect next), the rest are uniform noise pairs. Destination
// recency is therefore a genuine, learnable link-prediction signal, and a
// model retrained without part of the stream still generalizes to it.
struct SynthConfig {
  NodeId nodes{50};
  std::size_t events{2000};
  std::uint64_t seed{7};
  double pattern_prob{0.9};
  std::size_t window{60};
  std::size_t groups{10};
};

EventLog synth_events(const SynthConfig& config);

// Writes the generic `src,dst,time,f0` CSV consumed by the ingestion path.
void save_generic_csv(const EventLog& log, const std::string& path);

}  // namespace dgu
