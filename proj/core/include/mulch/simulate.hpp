#pragma once

// Generative process: sample block memberships, then simulate each diagonal
// block pair and each off-diagonal block-pair couple as an independent
// multivariate Hawkes process via thinning with an adaptive bound.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "mulch/events.hpp"
#include "mulch/model.hpp"

namespace mulch {

struct SimConfig {
  std::vector<double> pi;               // block probabilities (simplex); size = K
  std::vector<double> betas;            // shared kernel decay rates
  std::vector<BlockPairParams> params;  // K*K grid, row-major
  double duration = 0.0;
  int n_nodes = 0;
  std::uint64_t seed = 0;
  std::optional<std::vector<int>> membership_override;
  bool allow_unstable = false;           // cap instead of refusing when radius >= 1
  std::int64_t max_events = 10'000'000;  // hard cap applied only to unstable runs

  [[nodiscard]] int k() const { return static_cast<int>(pi.size()); }
};

struct SimResult {
  Membership membership;
  EventStream stream;
  double spectral_radius = 0.0;
  bool truncated = false;  // an unstable run hit the event cap
};

// i.i.d. categorical block draws; pi must lie on the simplex.
[[nodiscard]] Membership sample_membership(const std::vector<double>& pi, int n,
                                           std::mt19937_64& rng);

// Exact thinning simulation of one couple over dimensions bp(a,b) u bp(b,a).
// Pass the same member vector (and parameters) twice for a diagonal pair;
// distinct blocks must have disjoint member sets. Events come out
// time-sorted with globally-indexed nodes. Stops early (setting *truncated)
// once max_events have been produced.
[[nodiscard]] std::vector<Event> simulate_block_pair(
    const BlockPairParams& theta_ab, const BlockPairParams& theta_ba,
    const std::vector<double>& betas, const std::vector<int>& members_a,
    const std::vector<int>& members_b, double duration, std::mt19937_64& rng,
    std::int64_t max_events = std::numeric_limits<std::int64_t>::max(),
    bool* truncated = nullptr);

// Full network draw: membership (sampled or overridden), then every couple
// simulated on its own deterministic RNG stream, merged and time-sorted.
// Throws for non-stationary parameters unless cfg.allow_unstable.
[[nodiscard]] SimResult generate_network(const SimConfig& cfg);

// Max over block-pair couples of the spectral radius of the couple's
// branching operator; the process is stationary iff this is < 1.
[[nodiscard]] double stationarity_check(const MulchModel& model);

}  // namespace mulch
