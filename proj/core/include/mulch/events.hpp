#pragma once

// Event-log data model: ingestion, timestamp rescaling, train/test splitting,
// count-matrix construction, and block memberships.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mulch {

// One directed interaction between two distinct nodes.
struct Event {
  int sender = 0;
  int receiver = 0;
  double time = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

// Time-ordered event log over dense node ids 0..n_nodes-1, observed on
// [0, duration]. Sorting is stable: equal timestamps keep input order.
struct EventStream {
  std::vector<Event> events;
  int n_nodes = 0;
  double duration = 0.0;
};

// Throws std::invalid_argument when the stream invariants are violated
// (index out of range, self-loop, negative/unsorted times, time > duration).
void validate(const EventStream& s);

// Block assignment of each node; labels lie in [0, num_blocks).
struct Membership {
  std::vector<int> labels;
  int num_blocks = 0;
};

void validate(const Membership& z);

// Per-block node index lists, in ascending node order.
[[nodiscard]] std::vector<std::vector<int>> block_members(const Membership& z);

struct CountMatrix {
  int n = 0;
  std::vector<std::int64_t> data;  // row-major, data[i*n + j]

  [[nodiscard]] std::int64_t at(int i, int j) const {
    return data[static_cast<std::size_t>(i) * n + j];
  }
  [[nodiscard]] std::int64_t& at(int i, int j) {
    return data[static_cast<std::size_t>(i) * n + j];
  }
};

[[nodiscard]] CountMatrix count_matrix(const EventStream& s);

struct LoadOptions {
  bool drop_self_loops = false;     // skip self-loop rows instead of failing
  std::optional<double> duration;   // horizon override; default is the max time
};

struct LoadedEvents {
  EventStream stream;
  std::vector<std::string> node_ids;  // dense index -> original id
};

// CSV columns sender,receiver,time; header row optional. Node ids may be
// arbitrary strings and are relabeled densely in order of first appearance.
[[nodiscard]] LoadedEvents load_events(const std::string& path, const LoadOptions& opts = {});
[[nodiscard]] LoadedEvents parse_events_csv(std::istream& in, const LoadOptions& opts = {});

// Writes the stream back as CSV with a header; node_ids, when nonempty, maps
// dense indices back to original ids.
void save_events(const EventStream& s, const std::string& path,
                 const std::vector<std::string>& node_ids = {});

// Affine map of [min_t, max_t] onto [0, target_max]; duration becomes target_max.
[[nodiscard]] EventStream rescale_timestamps(const EventStream& s, double target_max);

struct TrainTestSplit {
  EventStream train;  // first n_train events; duration = last train timestamp
  EventStream test;   // remaining events; duration = source duration
};

[[nodiscard]] TrainTestSplit split_train_test(const EventStream& s, std::size_t n_train);

// Extends a training membership to n_total nodes: appended nodes join the
// largest training block (ties -> lowest block index).
[[nodiscard]] Membership assign_new_nodes(const Membership& train_membership, int n_total);

}  // namespace mulch
