#include "mulch/events.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace mulch {

void validate(const EventStream& s) {
  if (s.n_nodes < 0) throw std::invalid_argument("event stream: negative node count");
  if (s.duration < 0.0) throw std::invalid_argument("event stream: negative duration");
  double prev = 0.0;
  for (std::size_t idx = 0; idx < s.events.size(); ++idx) {
    const Event& e = s.events[idx];
    if (e.sender == e.receiver)
      throw std::invalid_argument("event stream: self-loop at position " + std::to_string(idx));
    if (e.sender < 0 || e.sender >= s.n_nodes || e.receiver < 0 || e.receiver >= s.n_nodes)
      throw std::invalid_argument("event stream: node index out of range at position " +
                                  std::to_string(idx));
    if (e.time < 0.0)
      throw std::invalid_argument("event stream: negative time at position " + std::to_string(idx));
    if (idx > 0 && e.time < prev)
      throw std::invalid_argument("event stream: times not sorted at position " +
                                  std::to_string(idx));
    if (e.time > s.duration)
      throw std::invalid_argument("event stream: time beyond duration at position " +
                                  std::to_string(idx));
    prev = e.time;
  }
}

void validate(const Membership& z) {
  if (z.num_blocks <= 0) throw std::invalid_argument("membership: block count must be positive");
  for (std::size_t i = 0; i < z.labels.size(); ++i)
    if (z.labels[i] < 0 || z.labels[i] >= z.num_blocks)
      throw std::invalid_argument("membership: label out of range at node " + std::to_string(i));
}

std::vector<std::vector<int>> block_members(const Membership& z) {
  validate(z);
  std::vector<std::vector<int>> members(z.num_blocks);
  for (std::size_t i = 0; i < z.labels.size(); ++i)
    members[z.labels[i]].push_back(static_cast<int>(i));
  return members;
}

CountMatrix count_matrix(const EventStream& s) {
  CountMatrix m;
  m.n = s.n_nodes;
  m.data.assign(static_cast<std::size_t>(s.n_nodes) * s.n_nodes, 0);
  for (const Event& e : s.events) ++m.at(e.sender, e.receiver);
  return m;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

LoadedEvents parse_events_csv(std::istream& in, const LoadOptions& opts) {
  LoadedEvents out;
  std::unordered_map<std::string, int> index_of;
  auto dense_id = [&](const std::string& name) {
    auto [it, inserted] = index_of.emplace(name, static_cast<int>(out.node_ids.size()));
    if (inserted) out.node_ids.push_back(name);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  bool saw_row = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_row(line);
    if (fields.size() != 3)
      throw std::runtime_error("events csv: expected 3 columns at line " + std::to_string(line_no));
    double t = 0.0;
    if (!parse_double(fields[2], t)) {
      // A non-numeric time in the first data row is an (optional) header.
      if (!saw_row) continue;
      throw std::runtime_error("events csv: bad time value at line " + std::to_string(line_no));
    }
    saw_row = true;
    if (t < 0.0)
      throw std::runtime_error("events csv: negative time at line " + std::to_string(line_no));
    if (fields[0] == fields[1]) {
      if (opts.drop_self_loops) continue;
      throw std::runtime_error("events csv: self-loop at line " + std::to_string(line_no));
    }
    Event e;
    e.sender = dense_id(fields[0]);
    e.receiver = dense_id(fields[1]);
    e.time = t;
    out.stream.events.push_back(e);
  }
  if (out.stream.events.empty()) throw std::runtime_error("events csv: no events");

  std::stable_sort(out.stream.events.begin(), out.stream.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  out.stream.n_nodes = static_cast<int>(out.node_ids.size());
  const double max_t = out.stream.events.back().time;
  out.stream.duration = opts.duration.value_or(max_t);
  if (out.stream.duration < max_t)
    throw std::runtime_error("events csv: duration override below last event time");
  validate(out.stream);
  return out;
}

LoadedEvents load_events(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open events file: " + path);
  return parse_events_csv(in, opts);
}

void save_events(const EventStream& s, const std::string& path,
                 const std::vector<std::string>& node_ids) {
  validate(s);
  if (!node_ids.empty() && static_cast<int>(node_ids.size()) != s.n_nodes)
    throw std::invalid_argument("save_events: id map size does not match node count");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "sender,receiver,time\n";
  char buf[32];
  for (const Event& e : s.events) {
    std::snprintf(buf, sizeof buf, "%.17g", e.time);
    if (node_ids.empty())
      out << e.sender << ',' << e.receiver << ',' << buf << '\n';
    else
      out << node_ids[e.sender] << ',' << node_ids[e.receiver] << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("failed writing events file: " + path);
}

EventStream rescale_timestamps(const EventStream& s, double target_max) {
  validate(s);
  if (s.events.empty()) throw std::invalid_argument("rescale_timestamps: empty stream");
  if (!(target_max > 0.0)) throw std::invalid_argument("rescale_timestamps: target must be positive");
  const double lo = s.events.front().time;
  const double hi = s.events.back().time;
  if (hi == lo) throw std::invalid_argument("rescale_timestamps: all timestamps equal (zero span)");
  EventStream out = s;
  const double span = hi - lo;
  for (Event& e : out.events) e.time = (e.time - lo) / span * target_max;
  out.duration = target_max;
  return out;
}

TrainTestSplit split_train_test(const EventStream& s, std::size_t n_train) {
  validate(s);
  if (n_train == 0 || n_train >= s.events.size())
    throw std::invalid_argument("split_train_test: n_train must be in (0, number of events)");
  TrainTestSplit out;
  out.train.events.assign(s.events.begin(), s.events.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.train.n_nodes = s.n_nodes;
  out.train.duration = out.train.events.back().time;
  out.test.events.assign(s.events.begin() + static_cast<std::ptrdiff_t>(n_train), s.events.end());
  out.test.n_nodes = s.n_nodes;
  out.test.duration = s.duration;
  return out;
}

Membership assign_new_nodes(const Membership& train_membership, int n_total) {
  validate(train_membership);
  if (n_total < static_cast<int>(train_membership.labels.size()))
    throw std::invalid_argument("assign_new_nodes: n_total below training node count");
  std::vector<int> sizes(train_membership.num_blocks, 0);
  for (int label : train_membership.labels) ++sizes[label];
  int largest = 0;
  for (int b = 1; b < train_membership.num_blocks; ++b)
    if (sizes[b] > sizes[largest]) largest = b;  // ties keep the lowest index
  Membership out = train_membership;
  out.labels.resize(n_total, largest);
  return out;
}

}  // namespace mulch
