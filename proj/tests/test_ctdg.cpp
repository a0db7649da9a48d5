#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "dgu/event_log.hpp"
#include "dgu/neighbor_index.hpp"
#include "dgu/rng.hpp"
#include "dgu/sampling.hpp"

using namespace dgu;

namespace {

void write_file(const std::string& path, const std::string& body) {
  std::ofstream os(path);
  os << body;
}

EventLog make_log(std::vector<std::tuple<NodeId, NodeId, double>> triples,
                  NodeId num_nodes) {
  EventLog log;
  log.num_nodes = num_nodes;
  for (auto [s, d, t] : triples) {
    Event e;
    e.src = s;
    e.dst = d;
    e.time = t;
    e.idx = log.events.size();
    log.events.push_back(e);
  }
  return log;
}

// Independent closure oracle: expand the seed set by scanning the whole log
// for events that touch an endpoint of a selected event and fall inside its
// recent-k window, repeating `depth` times.
std::set<std::size_t> brute_force_closure(const EventLog& train,
                                          const std::vector<Event>& seeds,
                                          std::size_t depth, std::size_t k) {
  std::set<std::size_t> selected;
  for (const Event& e : seeds) selected.insert(e.idx);
  for (std::size_t round = 0; round < depth; ++round) {
    std::set<std::size_t> next = selected;
    for (std::size_t idx : selected) {
      const Event& e = train.events[idx];
      for (NodeId endpoint : {e.src, e.dst}) {
        // collect every earlier event touching this endpoint
        std::vector<const Event*> touching;
        for (const Event& o : train.events) {
          if (o.time < e.time && (o.src == endpoint || o.dst == endpoint)) {
            touching.push_back(&o);
          }
        }
        // newest k of them
        const std::size_t take = std::min(k, touching.size());
        for (std::size_t i = 0; i < take; ++i) {
          next.insert(touching[touching.size() - 1 - i]->idx);
        }
      }
    }
    selected = std::move(next);
  }
  return selected;
}

}  // namespace

TEST_CASE("parse generic single row") {
  const char* path = "ctdg_single.csv";
  write_file(path, "src,dst,time,f0\n0,100,5.0,0.5\n");
  EventLog log = parse_event_csv(path, CsvFormat::kGeneric);
  REQUIRE(log.size() == 1);
  CHECK(log.events[0].src == 0);
  CHECK(log.events[0].dst == 100);
  CHECK(log.events[0].time == 5.0);
  REQUIRE(log.feat_dim == 1);
  CHECK(log.events[0].feat[0] == 0.5);
  CHECK(log.num_nodes == 101);
  CHECK_FALSE(log.bipartite);
  std::remove(path);
}

TEST_CASE("parse header-only file") {
  const char* path = "ctdg_empty.csv";
  write_file(path, "src,dst,time,f0,f1\n");
  EventLog log = parse_event_csv(path, CsvFormat::kGeneric);
  CHECK(log.size() == 0);
  CHECK(log.feat_dim == 2);
  std::remove(path);
}

TEST_CASE("rows are stably re-sorted by time") {
  const char* path = "ctdg_sort.csv";
  write_file(path, "src,dst,time\n0,1,5.0\n2,3,3.0\n4,5,3.0\n");
  EventLog log = parse_event_csv(path, CsvFormat::kGeneric);
  REQUIRE(log.size() == 3);
  CHECK(log.events[0].time == 3.0);
  CHECK(log.events[0].src == 2);  // stable: first 3.0 row stays first
  CHECK(log.events[1].src == 4);
  CHECK(log.events[2].time == 5.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(log.events[i].idx == i);
  std::remove(path);
}

TEST_CASE("duplicate rows are retained") {
  const char* path = "ctdg_dup.csv";
  write_file(path, "src,dst,time\n0,1,2.0\n0,1,2.0\n");
  EventLog log = parse_event_csv(path, CsvFormat::kGeneric);
  CHECK(log.size() == 2);
  std::remove(path);
}

TEST_CASE("parse errors carry the line number") {
  const char* path = "ctdg_bad.csv";
  write_file(path, "src,dst,time\n0,1,1.0\nnope,2,3.0\n");
  CHECK_THROWS_WITH_AS(parse_event_csv(path, CsvFormat::kGeneric),
                       doctest::Contains("line 3"), std::runtime_error);
  write_file(path, "src,dst,time\n0,1,-4.0\n");
  CHECK_THROWS_AS(parse_event_csv(path, CsvFormat::kGeneric),
                  std::domain_error);
  std::remove(path);
}

TEST_CASE("jodie items are offset past the users") {
  const char* path = "ctdg_jodie.csv";
  write_file(path,
             "user_id,item_id,timestamp,state_label,f0\n"
             "0,0,1.0,0,0.1\n"
             "2,1,2.0,0,0.2\n");
  EventLog log = parse_event_csv(path, CsvFormat::kJodie);
  CHECK(log.bipartite);
  CHECK(log.first_item == 3);  // users 0..2
  CHECK(log.events[0].dst == 3);
  CHECK(log.events[1].dst == 4);
  CHECK(log.num_nodes == 5);
  std::remove(path);
}

TEST_CASE("event log text form round-trips") {
  EventLog log = make_log({{0, 1, 1.25}, {1, 2, 2.5}, {0, 2, 2.5}}, 3);
  log.feat_dim = 0;
  const char* path = "ctdg_roundtrip.tsv";
  save_event_log(log, path);
  EventLog back = load_event_log(path);
  REQUIRE(back.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(back.events[i].src == log.events[i].src);
    CHECK(back.events[i].dst == log.events[i].dst);
    CHECK(back.events[i].time == log.events[i].time);
    CHECK(back.events[i].idx == log.events[i].idx);
  }
  CHECK(back.num_nodes == log.num_nodes);
  std::remove(path);
}

TEST_CASE("chronological split sizes") {
  {
    EventLog log;
    log.num_nodes = 2;
    for (std::size_t i = 0; i < 100; ++i) {
      Event e{0, 1, static_cast<double>(i), {}, i};
      log.events.push_back(e);
    }
    SplitSpec s = chronological_split(log, 0.70, 0.15, 0.15);
    CHECK(s.train.size() == 70);
    CHECK(s.val.size() == 15);
    CHECK(s.test.size() == 15);
  }
  {
    EventLog log;
    log.num_nodes = 2;
    for (std::size_t i = 0; i < 10; ++i) {
      Event e{0, 1, static_cast<double>(i), {}, i};
      log.events.push_back(e);
    }
    SplitSpec s = chronological_split(log, 0.70, 0.15, 0.15);
    CHECK(s.train.size() == 7);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 2);
    CHECK(s.val_start_time == 7.0);
    CHECK(s.test_start_time == 8.0);
  }
  {
    EventLog log = make_log({{0, 1, 0.0}, {0, 1, 1.0}}, 2);
    CHECK_THROWS_AS(chronological_split(log, 0.70, 0.15, 0.15),
                    std::invalid_argument);
  }
}

TEST_CASE("split partition reassembles the log exactly") {
  Rng rng(31);
  EventLog log;
  log.num_nodes = 9;
  for (std::size_t i = 0; i < 57; ++i) {
    Event e;
    e.src = static_cast<NodeId>(rng.index(9));
    do {
      e.dst = static_cast<NodeId>(rng.index(9));
    } while (e.dst == e.src);
    e.time = static_cast<double>(i / 3);
    e.idx = i;
    log.events.push_back(e);
  }
  SplitSpec s = chronological_split(log, 0.6, 0.2, 0.2);
  std::vector<Event> joined;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    joined.insert(joined.end(), part->events.begin(), part->events.end());
  }
  REQUIRE(joined.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(joined[i].idx == log.events[i].idx);
    CHECK(joined[i].src == log.events[i].src);
  }
}

TEST_CASE("recent neighbor lookups") {
  EventLog log = make_log({{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 3.0}}, 4);
  auto index = TemporalNeighborIndex::build(log);

  auto r = index.recent(0, 3.5, 2);
  REQUIRE(r.size() == 2);
  CHECK(r[0].neighbor == 3);
  CHECK(r[0].time == 3.0);
  CHECK(r[1].neighbor == 2);

  CHECK(index.recent(0, 1.0, 2).empty());  // strict inequality at the bound
  CHECK(index.recent(0, 10.0, 99).size() == 3);
  CHECK(index.recent(77, 10.0, 3).empty());  // unknown node
}

TEST_CASE("negative sampling contracts") {
  EventLog log = make_log({{0, 1, 1.0}}, 4);
  auto negs = sample_negatives(log, 7);
  REQUIRE(negs.size() == 1);
  CHECK(negs[0].src == 0);
  CHECK(negs[0].dst != 1);
  CHECK(negs[0].dst != 0);
  CHECK(negs[0].time == 1.0);

  auto negs2 = sample_negatives(log, 7);
  CHECK(negs[0].dst == negs2[0].dst);  // same seed, same draw

  // bipartite: all negatives land in the item partition
  EventLog bip = make_log({{0, 3, 1.0}, {1, 4, 2.0}, {2, 5, 3.0}}, 6);
  bip.bipartite = true;
  bip.first_item = 3;
  auto bnegs = sample_negatives(bip, 13);
  for (const Event& e : bnegs) CHECK(e.dst >= 3);

  // a 2-node log has no alternative destination
  EventLog tiny = make_log({{0, 1, 1.0}}, 2);
  CHECK_THROWS_AS(sample_negatives(tiny, 1), std::invalid_argument);
}

TEST_CASE("unlearning request with depth zero is the seeds") {
  EventLog log = make_log(
      {{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 3.0}, {3, 4, 4.0}, {4, 5, 5.0}}, 6);
  UnlearnRequest req = sample_unlearning_request(log, 2, 0, 10, 99);
  CHECK(req.ul_events.size() == 2);
  CHECK(req.initial_events.size() == 2);
  CHECK(req.re_events.size() == 3);
  for (const Event& e : req.ul_events) {
    bool is_seed = false;
    for (const Event& s : req.initial_events) is_seed |= (s.idx == e.idx);
    CHECK(is_seed);
  }
}

TEST_CASE("closure over a chain pulls in the upstream event") {
  // chain (a,b,1),(b,c,2),(c,d,3); seeding (c,d,3) at depth 1 reaches (b,c,2)
  EventLog log = make_log({{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 3.0}}, 4);
  // draw seeds until the sampler picks exactly the last event
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    UnlearnRequest probe = sample_unlearning_request(log, 1, 0, 2, seed);
    if (probe.ul_events[0].idx != 2) continue;
    UnlearnRequest req = sample_unlearning_request(log, 1, 1, 2, seed);
    std::set<std::size_t> got;
    for (const Event& e : req.ul_events) got.insert(e.idx);
    const std::set<std::size_t> expected =
        brute_force_closure(log, probe.ul_events, 1, 2);
    CHECK(got == expected);
    CHECK(got == std::set<std::size_t>{1, 2});
    return;
  }
  FAIL("no seed selected the chain tail");
}

TEST_CASE("closure matches the brute-force oracle on a random log") {
  Rng rng(5);
  EventLog log;
  log.num_nodes = 8;
  for (std::size_t i = 0; i < 20; ++i) {
    Event e;
    e.src = static_cast<NodeId>(rng.index(8));
    do {
      e.dst = static_cast<NodeId>(rng.index(8));
    } while (e.dst == e.src);
    e.time = static_cast<double>(i);
    e.idx = i;
    log.events.push_back(e);
  }
  for (std::size_t depth : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
    UnlearnRequest req = sample_unlearning_request(log, 3, depth, 2, 17);
    std::set<std::size_t> got;
    for (const Event& e : req.ul_events) got.insert(e.idx);
    CHECK(got == brute_force_closure(log, req.initial_events, depth, 2));
  }
}

TEST_CASE("closure grows monotonically and reaches a fixed point") {
  Rng rng(6);
  EventLog log;
  log.num_nodes = 6;
  for (std::size_t i = 0; i < 20; ++i) {
    Event e;
    e.src = static_cast<NodeId>(rng.index(6));
    do {
      e.dst = static_cast<NodeId>(rng.index(6));
    } while (e.dst == e.src);
    e.time = static_cast<double>(i);
    e.idx = i;
    log.events.push_back(e);
  }
  std::set<std::size_t> prev;
  std::size_t stable_size = 0;
  for (std::size_t depth = 0; depth <= 24; ++depth) {
    UnlearnRequest req = sample_unlearning_request(log, 2, depth, 3, 4);
    std::set<std::size_t> cur;
    for (const Event& e : req.ul_events) cur.insert(e.idx);
    CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    CHECK(req.ul_events.size() + req.re_events.size() == log.size());
    prev = cur;
    stable_size = cur.size();
  }
  // one more round changes nothing once the closure saturates
  UnlearnRequest again = sample_unlearning_request(log, 2, 25, 3, 4);
  CHECK(again.ul_events.size() == stable_size);
  CHECK_THROWS_AS(sample_unlearning_request(log, 21, 0, 3, 4),
                  std::invalid_argument);
}

TEST_CASE("counterparts avoid every observed triple") {
  Rng rng(8);
  EventLog log;
  log.num_nodes = 7;
  for (std::size_t i = 0; i < 30; ++i) {
    Event e;
    e.src = static_cast<NodeId>(rng.index(7));
    do {
      e.dst = static_cast<NodeId>(rng.index(7));
    } while (e.dst == e.src);
    e.time = static_cast<double>(i % 11);
    e.idx = i;
    log.events.push_back(e);
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  for (std::size_t i = 0; i < log.events.size(); ++i) log.events[i].idx = i;

  UnlearnRequest req = sample_unlearning_request(log, 5, 1, 3, 2);
  std::size_t skipped = 0;
  auto cps = sample_counterparts(req, log, 3, &skipped);
  CHECK(cps.size() + skipped == req.ul_events.size());
  CHECK(cps.size() <= req.ul_events.size());
  for (const Event& c : cps) {
    for (const Event& e : log.events) {
      const bool same =
          (e.src == c.src && e.dst == c.dst && e.time == c.time);
      CHECK_FALSE(same);
    }
  }
  auto cps2 = sample_counterparts(req, log, 3, nullptr);
  REQUIRE(cps2.size() == cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    CHECK(cps[i].dst == cps2[i].dst);
  }
}

TEST_CASE("counterpart keeps endpoint and timestamp") {
  // ul event (0,1,6); candidates limited; (0,2,6) absent from the log
  EventLog log = make_log({{0, 1, 6.0}, {1, 2, 7.0}, {2, 0, 8.0}}, 3);
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    UnlearnRequest probe = sample_unlearning_request(log, 1, 0, 2, seed);
    if (probe.ul_events[0].idx != 0) continue;
    auto cps = sample_counterparts(probe, log, 11);
    REQUIRE(cps.size() == 1);
    CHECK(cps[0].src == 0);
    CHECK(cps[0].dst == 2);
    CHECK(cps[0].time == 6.0);
    return;
  }
  FAIL("no seed selected event 0");
}

TEST_CASE("request sampling is reproducible") {
  Rng rng(9);
  EventLog log;
  log.num_nodes = 10;
  for (std::size_t i = 0; i < 40; ++i) {
    Event e;
    e.src = static_cast<NodeId>(rng.index(10));
    do {
      e.dst = static_cast<NodeId>(rng.index(10));
    } while (e.dst == e.src);
    e.time = static_cast<double>(i);
    e.idx = i;
    log.events.push_back(e);
  }
  UnlearnRequest a = sample_unlearning_request(log, 4, 2, 3, 1234);
  UnlearnRequest b = sample_unlearning_request(log, 4, 2, 3, 1234);
  REQUIRE(a.ul_events.size() == b.ul_events.size());
  for (std::size_t i = 0; i < a.ul_events.size(); ++i) {
    CHECK(a.ul_events[i].idx == b.ul_events[i].idx);
  }
}
