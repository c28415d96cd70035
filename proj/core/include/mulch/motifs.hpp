#pragma once

// δ-window temporal motif counting: every time-ordered triple of events that
// spans at most δ and touches at most three distinct nodes is classified into
// the standard 6×6 grid of 3-edge motifs, plus the MAPE generative-accuracy
// metric comparing an observed matrix against simulated ones.
//
// Canonical labeling: the first edge of a triple fixes node labels — its
// sender is 0, its receiver is 1, and the first later node outside {0,1} is 2.
// The grid cell is then determined by the labeled second and third edges:
//
//   row (second edge):  0: 2→1   1: 1→2   2: 2→0   3: 0→2   4: 1→0   5: 0→1
//   col (third edge):   0: 0→1   1: 1→0   2: 0→2   3: 2→0   4: 1→2   5: 2→1
//
// Under this layout the four two-node motifs occupy rows 4-5 × columns 0-1 and
// the eight triangles occupy rows 0-1 × columns 2-3 and rows 2-3 × columns
// 4-5; everything else is a star. Triples are ordered by stream position, so
// tied timestamps inherit the stream's stable order, and the window test
// t3 − t1 ≤ δ is inclusive. Self-loop events never match any cell.

#include <array>
#include <cstdint>
#include <vector>

#include "mulch/events.hpp"

namespace mulch {

struct MotifMatrix {
  std::array<std::int64_t, 36> cells{};  // row-major 6×6
  double delta = 0.0;

  [[nodiscard]] std::int64_t at(int row, int col) const {
    return cells[static_cast<std::size_t>(row) * 6 + col];
  }
  [[nodiscard]] std::int64_t& at(int row, int col) {
    return cells[static_cast<std::size_t>(row) * 6 + col];
  }
  [[nodiscard]] std::int64_t total() const;

  friend bool operator==(const MotifMatrix&, const MotifMatrix&) = default;
};

// Exact count over all index-ordered triples; requires delta > 0 and
// nondecreasing event times (validate(s) order). O(W log m) for W in-window
// event pairs via binary search over per-edge and per-node occurrence lists.
[[nodiscard]] MotifMatrix count_temporal_motifs(const EventStream& s, double delta);

struct MapeResult {
  double mape = 0.0;      // percent, averaged over the included cells
  int excluded_cells = 0; // cells with zero actual count, left out of the mean
};

// Mean absolute percentage error of the per-cell mean of `sims` against
// `actual`. Cells with zero actual count are excluded and the divisor reduced
// accordingly; if every cell is excluded the result is 0 over 36 exclusions.
// Throws std::invalid_argument when sims is empty or any delta differs.
[[nodiscard]] MapeResult motif_mape(const MotifMatrix& actual,
                                    const std::vector<MotifMatrix>& sims);

}  // namespace mulch
