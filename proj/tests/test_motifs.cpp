#include <array>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mulch/motifs.hpp"
#include "mulch/rng.hpp"
#include "oracles.hpp"

using namespace mulch;

namespace {

EventStream stream_of(int n, std::vector<Event> events) {
  EventStream s;
  s.n_nodes = n;
  s.events = std::move(events);
  s.duration = s.events.empty() ? 1.0 : s.events.back().time + 1.0;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("motifs");

TEST_CASE("ping-pong lands in the reciprocal two-node cell") {
  const auto s = stream_of(2, {{0, 1, 0.0}, {1, 0, 2.0}, {0, 1, 4.0}});
  const auto m = count_temporal_motifs(s, 5.0);
  CHECK(m.total() == 1);
  CHECK(m.at(4, 0) == 1);

  // window too short for the full triple
  CHECK(count_temporal_motifs(s, 1.5).total() == 0);
  // inclusive boundary: exactly delta apart still counts
  CHECK(count_temporal_motifs(s, 4.0).total() == 1);
}

TEST_CASE("hand-labeled triangle and star examples") {
  SUBCASE("cyclic triangle") {
    const auto s = stream_of(3, {{0, 1, 0.0}, {1, 2, 1.0}, {2, 0, 2.0}});
    const auto m = count_temporal_motifs(s, 10.0);
    CHECK(m.total() == 1);
    CHECK(m.at(1, 3) == 1);
  }
  SUBCASE("outbound star revisiting the first receiver") {
    const auto s = stream_of(3, {{0, 1, 0.0}, {0, 2, 1.0}, {0, 1, 2.0}});
    const auto m = count_temporal_motifs(s, 10.0);
    CHECK(m.total() == 1);
    CHECK(m.at(3, 0) == 1);
  }
  SUBCASE("repeated edge stays in the top-left star cell") {
    const auto s = stream_of(2, {{0, 1, 0.0}, {0, 1, 1.0}, {0, 1, 2.0}});
    const auto m = count_temporal_motifs(s, 10.0);
    CHECK(m.total() == 1);
    CHECK(m.at(5, 0) == 1);
  }
  SUBCASE("four distinct nodes contribute nothing") {
    const auto s = stream_of(6, {{0, 1, 0.0}, {2, 3, 1.0}, {4, 5, 2.0}});
    CHECK(count_temporal_motifs(s, 10.0).total() == 0);
  }
}

TEST_CASE("every overlapping triple is counted with multiplicity") {
  // four copies of the same edge: C(4,3) triples, all in cell (5,0)
  const auto s = stream_of(2, {{0, 1, 0.0}, {0, 1, 1.0}, {0, 1, 2.0}, {0, 1, 3.0}});
  const auto m = count_temporal_motifs(s, 10.0);
  CHECK(m.total() == 4);
  CHECK(m.at(5, 0) == 4);
}

TEST_CASE("self-loop events never participate") {
  EventStream s;
  s.n_nodes = 3;
  s.duration = 10.0;
  s.events = {{0, 1, 0.0}, {2, 2, 0.5}, {1, 0, 1.0}, {0, 1, 2.0}};
  const auto m = count_temporal_motifs(s, 10.0);
  CHECK(m.total() == 1);
  CHECK(m.at(4, 0) == 1);
}

TEST_CASE("random streams match the cubic reference counter") {
  auto rng = make_rng(83);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 4));
    const auto s = oracle::random_stream(n, 40, 12.0, rng);
    for (double delta : {0.4, 1.5, 6.0, 20.0}) {
      const auto fast = count_temporal_motifs(s, delta);
      const auto slow = oracle::brute_force_motifs(s, delta);
      CHECK(fast.delta == slow.delta);
      for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) CHECK(fast.at(r, c) == slow.at(r, c));
    }
  }
}

TEST_CASE("cell totals account for every in-window small triple") {
  auto rng = make_rng(89);
  const auto s = oracle::random_stream(5, 50, 15.0, rng);
  for (double delta : {1.0, 4.0, 16.0}) {
    CHECK(count_temporal_motifs(s, delta).total() == oracle::count_small_triples(s, delta));
  }
}

TEST_CASE("counts grow monotonically with the window") {
  auto rng = make_rng(97);
  const auto s = oracle::random_stream(4, 60, 20.0, rng);
  std::int64_t prev = 0;
  for (double delta : {0.5, 1.0, 2.0, 4.0, 8.0, 32.0}) {
    const auto total = count_temporal_motifs(s, delta).total();
    CHECK(total >= prev);
    prev = total;
  }
}

TEST_CASE("counts are invariant to node relabeling") {
  auto rng = make_rng(101);
  const auto s = oracle::random_stream(6, 50, 15.0, rng);
  // reverse the id space
  EventStream relabeled = s;
  for (auto& e : relabeled.events) {
    e.sender = 5 - e.sender;
    e.receiver = 5 - e.receiver;
  }
  const auto a = count_temporal_motifs(s, 4.0);
  const auto b = count_temporal_motifs(relabeled, 4.0);
  CHECK(a == b);
}

TEST_CASE("edge reversal permutes the grid the way the labels say") {
  // reversing every edge swaps the roles of the two endpoints of the first
  // edge, which permutes rows by [3,2,1,0,4,5] and columns by [0,1,5,4,3,2]
  constexpr std::array<int, 6> rho{3, 2, 1, 0, 4, 5};
  constexpr std::array<int, 6> gamma{0, 1, 5, 4, 3, 2};
  auto rng = make_rng(103);
  const auto s = oracle::random_stream(5, 45, 12.0, rng);
  EventStream reversed = s;
  for (auto& e : reversed.events) std::swap(e.sender, e.receiver);
  const auto a = count_temporal_motifs(s, 5.0);
  const auto b = count_temporal_motifs(reversed, 5.0);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c)
      CHECK(b.at(rho[static_cast<std::size_t>(r)], gamma[static_cast<std::size_t>(c)]) ==
            a.at(r, c));
}

TEST_CASE("argument validation") {
  const auto s = stream_of(2, {{0, 1, 0.0}, {1, 0, 1.0}});
  CHECK_THROWS_AS(static_cast<void>(count_temporal_motifs(s, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(static_cast<void>(count_temporal_motifs(s, -2.0)), std::invalid_argument);

  EventStream unsorted = s;
  std::swap(unsorted.events[0], unsorted.events[1]);
  CHECK_THROWS_AS(static_cast<void>(count_temporal_motifs(unsorted, 1.0)),
                  std::invalid_argument);

  CHECK(count_temporal_motifs(stream_of(2, {}), 1.0).total() == 0);
}

TEST_CASE("percentage error against simulated grids") {
  MotifMatrix actual;
  actual.delta = 2.0;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) actual.at(r, c) = (r + c) % 3 == 0 ? 0 : 10 * (r + 1);

  SUBCASE("identical simulations give zero error") {
    const auto res = motif_mape(actual, {actual, actual, actual});
    CHECK(res.mape == doctest::Approx(0.0).scale(1.0));
    int zero_cells = 0;
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c)
        if (actual.at(r, c) == 0) ++zero_cells;
    CHECK(res.excluded_cells == zero_cells);
  }

  SUBCASE("uniformly doubled counts give one hundred percent") {
    MotifMatrix doubled = actual;
    for (auto& v : doubled.cells) v *= 2;
    const auto res = motif_mape(actual, {doubled});
    CHECK(res.mape == doctest::Approx(100.0).epsilon(1e-12));
  }

  SUBCASE("per-cell mean over simulations comes first") {
    MotifMatrix lo = actual, hi = actual;
    for (auto& v : lo.cells) v -= v / 2;       // 0.5x (integer halves of even cells)
    for (auto& v : hi.cells) v += v - v / 2;   // symmetric partner: lo + hi = 2x actual
    const auto res = motif_mape(actual, {lo, hi});
    CHECK(res.mape == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }

  SUBCASE("all-zero actual excludes everything") {
    MotifMatrix zero;
    zero.delta = 2.0;
    const auto res = motif_mape(zero, {zero});
    CHECK(res.mape == 0.0);
    CHECK(res.excluded_cells == 36);
  }

  SUBCASE("delta mismatch and empty simulation list throw") {
    MotifMatrix other = actual;
    other.delta = 3.0;
    CHECK_THROWS_AS(static_cast<void>(motif_mape(actual, {other})), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(motif_mape(actual, {})), std::invalid_argument);
  }
}

TEST_SUITE_END();
