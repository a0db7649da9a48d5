#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dgu {

using NodeId = std::int64_t;

// One add-edge interaction. idx is the event's ordinal position in its log
// and doubles as a stable identity when events move between sub-logs.
struct Event {
  NodeId src{0};
  NodeId dst{0};
  double time{0.0};
  std::vector<double> feat;
  std::size_t idx{0};
};

enum class CsvFormat { kJodie, kGeneric };

// A continuous-time dynamic graph as a pure event stream: the initial graph
// is always empty and events are sorted by (time, idx).
struct EventLog {
  std::vector<Event> events;
  NodeId num_nodes{0};
  std::size_t feat_dim{0};
  bool bipartite{false};
  // First node id of the destination partition when bipartite.
  NodeId first_item{0};

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }

  void validate() const;
};

struct SplitSpec {
  EventLog train;
  EventLog val;
  EventLog test;
  double val_start_time{0.0};
  double test_start_time{0.0};
};

// Parses a JODIE-style interaction CSV (`user_id,item_id,timestamp,
// state_label,f0,...`, item ids offset past the users so the partitions are
// disjoint) or a generic edge CSV (`src,dst,time[,f0,...]`). Rows are kept in
// file order, then stably re-sorted by timestamp; exact duplicate rows are
// retained (interaction logs are multigraphs).
EventLog parse_event_csv(const std::string& path, CsvFormat format);

// Line-oriented text form used by golden-file tests: a metadata header line
// followed by one tab-separated event per line. Round-trips exactly.
void save_event_log(const EventLog& log, const std::string& path);
EventLog load_event_log(const std::string& path);

// First floor(r_train*N) events to train, next floor(r_val*N) to val, the
// remainder to test. Every split must end up non-empty.
SplitSpec chronological_split(const EventLog& log, double r_train, double r_val,
                              double r_test);

}  // namespace dgu
