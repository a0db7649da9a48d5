#include "dgu/event_log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dgu {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                             ": bad number '" + s + "'");
  }
}

NodeId parse_node(const std::string& s, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                             ": bad node id '" + s + "'");
  }
}

void sort_and_index(EventLog& log) {
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  for (std::size_t i = 0; i < log.events.size(); ++i) log.events[i].idx = i;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void EventLog::validate() const {
  double prev_time = -1.0;
  std::size_t prev_idx = 0;
  bool first = true;
  for (const Event& e : events) {
    if (e.src == e.dst) {
      throw std::runtime_error("EventLog: self-loop on node " +
                               std::to_string(e.src));
    }
    if (e.src < 0 || e.src >= num_nodes || e.dst < 0 || e.dst >= num_nodes) {
      throw std::runtime_error("EventLog: node id out of range");
    }
    if (e.feat.size() != feat_dim) {
      throw std::runtime_error("EventLog: feature length mismatch at event " +
                               std::to_string(e.idx));
    }
    if (!first) {
      if (e.time < prev_time) throw std::runtime_error("EventLog: time order");
      if (e.idx <= prev_idx) throw std::runtime_error("EventLog: idx order");
    }
    prev_time = e.time;
    prev_idx = e.idx;
    first = false;
  }
}

EventLog parse_event_csv(const std::string& path, CsvFormat format) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);

  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error("parse error at line 1: missing header in " + path);
  }
  const auto header = split_line(line, ',');
  const std::size_t lead_cols = (format == CsvFormat::kJodie) ? 4 : 3;
  if (header.size() < lead_cols) {
    throw std::runtime_error("parse error at line 1: expected at least " +
                             std::to_string(lead_cols) + " columns");
  }
  const std::size_t feat_dim = header.size() - lead_cols;

  EventLog log;
  log.feat_dim = feat_dim;
  log.bipartite = (format == CsvFormat::kJodie);

  NodeId max_src = -1;
  NodeId max_dst = -1;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_line(line, ',');
    if (cells.size() != header.size()) {
      throw std::runtime_error("parse error at line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(cells.size()));
    }
    Event e;
    e.src = parse_node(cells[0], line_no);
    e.dst = parse_node(cells[1], line_no);
    e.time = parse_double(cells[2], line_no);
    if (e.time < 0.0) {
      throw std::domain_error("negative timestamp at line " +
                              std::to_string(line_no));
    }
    // jodie column 3 is the state label; unused for link prediction
    e.feat.reserve(feat_dim);
    for (std::size_t i = lead_cols; i < cells.size(); ++i) {
      e.feat.push_back(parse_double(cells[i], line_no));
    }
    max_src = std::max(max_src, e.src);
    max_dst = std::max(max_dst, e.dst);
    log.events.push_back(std::move(e));
  }

  if (format == CsvFormat::kJodie) {
    // Make user and item id ranges disjoint.
    const NodeId num_users = max_src + 1;
    log.first_item = num_users;
    for (Event& e : log.events) e.dst += num_users;
    log.num_nodes = num_users + max_dst + 1;
  } else {
    log.num_nodes = std::max(max_src, max_dst) + 1;
    log.first_item = 0;
  }
  if (log.events.empty()) log.num_nodes = 0;

  for (const Event& e : log.events) {
    if (e.src == e.dst) {
      throw std::domain_error("self-loop edge (" + std::to_string(e.src) +
                              ") in " + path);
    }
  }
  sort_and_index(log);
  return log;
}

void save_event_log(const EventLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "# num_nodes=" << log.num_nodes << " feat_dim=" << log.feat_dim
     << " bipartite=" << (log.bipartite ? 1 : 0)
     << " first_item=" << log.first_item << "\n";
  for (const Event& e : log.events) {
    os << e.src << '\t' << e.dst << '\t' << format_double(e.time) << '\t'
       << e.idx;
    for (double f : e.feat) os << '\t' << format_double(f);
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

EventLog load_event_log(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw std::runtime_error("bad event log header in " + path);
  }
  EventLog log;
  {
    std::stringstream ss(line.substr(2));
    std::string kv;
    while (ss >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      const std::string val = kv.substr(eq + 1);
      if (key == "num_nodes") log.num_nodes = std::stoll(val);
      else if (key == "feat_dim") log.feat_dim = std::stoul(val);
      else if (key == "bipartite") log.bipartite = (val == "1");
      else if (key == "first_item") log.first_item = std::stoll(val);
    }
  }
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_line(line, '\t');
    if (cells.size() != 4 + log.feat_dim) {
      throw std::runtime_error("parse error at line " + std::to_string(line_no));
    }
    Event e;
    e.src = parse_node(cells[0], line_no);
    e.dst = parse_node(cells[1], line_no);
    e.time = parse_double(cells[2], line_no);
    e.idx = static_cast<std::size_t>(parse_node(cells[3], line_no));
    for (std::size_t i = 4; i < cells.size(); ++i) {
      e.feat.push_back(parse_double(cells[i], line_no));
    }
    log.events.push_back(std::move(e));
  }
  return log;
}

SplitSpec chronological_split(const EventLog& log, double r_train, double r_val,
                              double r_test) {
  if (r_train <= 0.0 || r_val <= 0.0 || r_test <= 0.0) {
    throw std::invalid_argument("chronological_split: ratios must be positive");
  }
  if (std::fabs(r_train + r_val + r_test - 1.0) > 1e-9) {
    throw std::invalid_argument("chronological_split: ratios must sum to 1");
  }
  const std::size_t n = log.size();
  if (n < 3) {
    throw std::invalid_argument(
        "chronological_split: need at least 3 events, got " +
        std::to_string(n));
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(r_train * static_cast<double>(n)));
  const auto n_val =
      static_cast<std::size_t>(std::floor(r_val * static_cast<double>(n)));
  const std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0) {
    throw std::invalid_argument("chronological_split: a split came out empty");
  }

  auto make_sub = [&log](std::size_t begin, std::size_t end) {
    EventLog sub;
    sub.num_nodes = log.num_nodes;
    sub.feat_dim = log.feat_dim;
    sub.bipartite = log.bipartite;
    sub.first_item = log.first_item;
    sub.events.assign(log.events.begin() + static_cast<std::ptrdiff_t>(begin),
                      log.events.begin() + static_cast<std::ptrdiff_t>(end));
    return sub;
  };

  SplitSpec spec;
  spec.train = make_sub(0, n_train);
  spec.val = make_sub(n_train, n_train + n_val);
  spec.test = make_sub(n_train + n_val, n);
  spec.val_start_time = spec.val.events.front().time;
  spec.test_start_time = spec.test.events.front().time;
  return spec;
}

}  // namespace dgu
