#pragma once

// Directed spectral clustering of the aggregate count matrix, plus the
// adjusted Rand index used to score recovered memberships.

#include <random>

#include "mulch/events.hpp"

namespace mulch {

// Clusters nodes from the top-k singular subspace of the count matrix: the
// embedding [U_k sqrt(S_k) | V_k sqrt(S_k)] is row-normalized and fed to
// k-means (seeded restarts drawn from `rng`). If the matrix has numerical
// rank r < k, the embedding uses r components and a warning is printed;
// all-zero input degenerates to a single cluster.
[[nodiscard]] Membership spectral_cluster(const CountMatrix& counts, int k, std::mt19937_64& rng);

// Hubert–Arabie adjusted Rand index in [-1, 1]; 1 iff the two labelings
// induce the same partition. Degenerate contingency tables (denominator 0)
// score 1 when the partitions coincide and 0 otherwise.
[[nodiscard]] double adjusted_rand_index(const Membership& z_true, const Membership& z_hat);

}  // namespace mulch
