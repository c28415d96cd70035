#include "mulch/motifs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace mulch {
namespace {

// Cell tables indexed by 3*sender + receiver of a canonically labeled edge;
// -1 marks self-loops, which never occur in a classified triple.
constexpr std::array<int, 9> kRowOf = {-1, 5, 3, 4, -1, 1, 2, 0, -1};
constexpr std::array<int, 9> kColOf = {-1, 0, 2, 1, -1, 4, 3, 5, -1};

// Canonical (sender, receiver) of each column's third edge.
constexpr std::array<std::array<int, 2>, 6> kColEdge = {
    {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}}};

// Number of values in `sorted` lying in the index range (lo, hi].
[[nodiscard]] std::int64_t count_in(const std::vector<std::int32_t>& sorted,
                                    std::int32_t lo, std::int32_t hi) {
  return std::upper_bound(sorted.begin(), sorted.end(), hi) -
         std::upper_bound(sorted.begin(), sorted.end(), lo);
}

}  // namespace

std::int64_t MotifMatrix::total() const {
  return std::accumulate(cells.begin(), cells.end(), std::int64_t{0});
}

MotifMatrix count_temporal_motifs(const EventStream& s, double delta) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("count_temporal_motifs: delta must be > 0");
  }
  MotifMatrix out;
  out.delta = delta;
  const auto& ev = s.events;
  if (ev.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw std::length_error("count_temporal_motifs: stream too large");
  }
  const auto m = static_cast<std::int32_t>(ev.size());
  int n = s.n_nodes;
  for (std::int32_t i = 0; i < m; ++i) {
    if (i > 0 && ev[i].time < ev[i - 1].time) {
      throw std::invalid_argument("count_temporal_motifs: events must be time-ordered");
    }
    n = std::max(n, std::max(ev[i].sender, ev[i].receiver) + 1);
  }
  if (m < 3) return out;

  // Occurrence lists of event indices (ascending) per directed edge and per
  // endpoint; self-loops are left out everywhere since no cell matches them.
  std::unordered_map<std::int64_t, std::vector<std::int32_t>> by_edge;
  std::vector<std::vector<std::int32_t>> by_out(n), by_in(n);
  for (std::int32_t i = 0; i < m; ++i) {
    const auto& e = ev[i];
    if (e.sender == e.receiver) continue;
    by_edge[static_cast<std::int64_t>(e.sender) * n + e.receiver].push_back(i);
    by_out[e.sender].push_back(i);
    by_in[e.receiver].push_back(i);
  }
  const std::vector<std::int32_t> empty_list;
  const auto edge_list = [&](int a, int b) -> const std::vector<std::int32_t>& {
    const auto it = by_edge.find(static_cast<std::int64_t>(a) * n + b);
    return it == by_edge.end() ? empty_list : it->second;
  };

  std::int32_t hi = 0;  // last index with ev[hi].time <= ev[i].time + delta
  for (std::int32_t i = 0; i + 2 < m; ++i) {
    const Event& e1 = ev[i];
    if (e1.sender == e1.receiver) continue;
    hi = std::max(hi, i);
    while (hi + 1 < m && ev[hi + 1].time <= e1.time + delta) ++hi;
    const int u = e1.sender;
    const int v = e1.receiver;
    for (std::int32_t j = i + 1; j < hi; ++j) {
      const Event& e2 = ev[j];
      if (e2.sender == e2.receiver) continue;
      int w = -1;
      const auto label = [&](int node) {
        if (node == u) return 0;
        if (node == v) return 1;
        if (w < 0) w = node;
        return node == w ? 2 : -1;
      };
      const int ls = label(e2.sender);
      const int lr = label(e2.receiver);
      if (ls < 0 || lr < 0) continue;  // first two edges already span four nodes
      const int row = kRowOf[ls * 3 + lr];
      if (w >= 0) {
        // Third node fixed: each column's edge is concrete.
        const std::array<int, 3> node_of = {u, v, w};
        for (int col = 0; col < 6; ++col) {
          const auto [cs, cr] = kColEdge[col];
          out.at(row, col) += count_in(edge_list(node_of[cs], node_of[cr]), j, hi);
        }
      } else {
        // First two edges stay on {u, v}; columns 2-5 take any third node.
        const std::int64_t c_uv = count_in(edge_list(u, v), j, hi);
        const std::int64_t c_vu = count_in(edge_list(v, u), j, hi);
        out.at(row, 0) += c_uv;
        out.at(row, 1) += c_vu;
        out.at(row, 2) += count_in(by_out[u], j, hi) - c_uv;
        out.at(row, 3) += count_in(by_in[u], j, hi) - c_vu;
        out.at(row, 4) += count_in(by_out[v], j, hi) - c_vu;
        out.at(row, 5) += count_in(by_in[v], j, hi) - c_uv;
      }
    }
  }
  return out;
}

MapeResult motif_mape(const MotifMatrix& actual, const std::vector<MotifMatrix>& sims) {
  if (sims.empty()) {
    throw std::invalid_argument("motif_mape: need at least one simulated matrix");
  }
  for (const auto& sim : sims) {
    if (sim.delta != actual.delta) {
      throw std::invalid_argument("motif_mape: matrices use different deltas");
    }
  }
  MapeResult r;
  double sum = 0.0;
  int used = 0;
  for (int c = 0; c < 36; ++c) {
    const auto a = static_cast<double>(actual.cells[c]);
    if (a <= 0.0) {
      ++r.excluded_cells;
      continue;
    }
    double mean = 0.0;
    for (const auto& sim : sims) mean += static_cast<double>(sim.cells[c]);
    mean /= static_cast<double>(sims.size());
    sum += std::abs((a - mean) / a);
    ++used;
  }
  r.mape = used == 0 ? 0.0 : 100.0 * sum / used;
  return r;
}

}  // namespace mulch
