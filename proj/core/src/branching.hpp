#pragma once

// Internal: block-constant reduction of a couple's branching structure.
// Node pairs within bp(a,b) are exchangeable, so the couple's branching
// operator maps block-constant vectors to block-constant vectors; its
// restriction to that subspace (2x2 off-diagonal, 1x1 diagonal) carries the
// exact spectral radius and the stationary per-pair event rates.

#include <cmath>
#include <limits>
#include <vector>

#include "mulch/model.hpp"

namespace mulch::detail {

struct CoupleReduction {
  bool has_pairs = false;
  // lambda_ab <- g_ab*lambda_ab + h_ab*lambda_ba + mu_ab (and mirrored).
  double g_ab = 0.0, h_ab = 0.0;
  double g_ba = 0.0, h_ba = 0.0;
  double radius = 0.0;
  // Stationary per-pair rates (events per unit time); NaN when radius >= 1.
  double rate_ab = std::numeric_limits<double>::quiet_NaN();
  double rate_ba = std::numeric_limits<double>::quiet_NaN();
};

// Couple (a,b) with a <= b; block_sizes[g] = number of nodes in block g.
[[nodiscard]] inline CoupleReduction reduce_couple(const MulchModel& m, int a, int b,
                                                   const std::vector<int>& block_sizes) {
  const auto idx = [](ExcitationType t) { return static_cast<std::size_t>(t); };
  const double na = block_sizes[a];
  const double nb = block_sizes[b];
  CoupleReduction r;
  if (a == b) {
    if (na < 2) return r;
    r.has_pairs = true;
    const auto& th = m.block_pair(a, a);
    r.g_ab = th.alpha[idx(ExcitationType::self)] + th.alpha[idx(ExcitationType::reciprocal)] +
             (na - 2) * (th.alpha[idx(ExcitationType::turn_continuation)] +
                         th.alpha[idx(ExcitationType::generalized_reciprocity)] +
                         th.alpha[idx(ExcitationType::allied_continuation)] +
                         th.alpha[idx(ExcitationType::allied_reciprocity)]);
    r.g_ba = r.g_ab;
    r.radius = r.g_ab;
    if (r.radius < 1.0) {
      r.rate_ab = th.mu / (1.0 - r.g_ab);
      r.rate_ba = r.rate_ab;
    }
    return r;
  }
  if (na < 1 || nb < 1) return r;
  r.has_pairs = true;
  const auto& ab = m.block_pair(a, b);
  const auto& ba = m.block_pair(b, a);
  r.g_ab = ab.alpha[idx(ExcitationType::self)] +
           (nb - 1) * ab.alpha[idx(ExcitationType::turn_continuation)] +
           (na - 1) * ab.alpha[idx(ExcitationType::allied_continuation)];
  r.h_ab = ab.alpha[idx(ExcitationType::reciprocal)] +
           (nb - 1) * ab.alpha[idx(ExcitationType::generalized_reciprocity)] +
           (na - 1) * ab.alpha[idx(ExcitationType::allied_reciprocity)];
  r.g_ba = ba.alpha[idx(ExcitationType::self)] +
           (na - 1) * ba.alpha[idx(ExcitationType::turn_continuation)] +
           (nb - 1) * ba.alpha[idx(ExcitationType::allied_continuation)];
  r.h_ba = ba.alpha[idx(ExcitationType::reciprocal)] +
           (na - 1) * ba.alpha[idx(ExcitationType::generalized_reciprocity)] +
           (nb - 1) * ba.alpha[idx(ExcitationType::allied_reciprocity)];
  // Eigenvalues of [[g_ab, h_ab], [h_ba, g_ba]] are real for nonnegative
  // entries; the larger one is the Perron root.
  const double mean = 0.5 * (r.g_ab + r.g_ba);
  const double disc = 0.25 * (r.g_ab - r.g_ba) * (r.g_ab - r.g_ba) + r.h_ab * r.h_ba;
  r.radius = mean + std::sqrt(disc);
  if (r.radius < 1.0) {
    const double det = (1.0 - r.g_ab) * (1.0 - r.g_ba) - r.h_ab * r.h_ba;
    r.rate_ab = ((1.0 - r.g_ba) * ab.mu + r.h_ab * ba.mu) / det;
    r.rate_ba = (r.h_ba * ab.mu + (1.0 - r.g_ab) * ba.mu) / det;
  }
  return r;
}

[[nodiscard]] inline std::vector<int> block_sizes_of(const Membership& z) {
  std::vector<int> sizes(z.num_blocks, 0);
  for (int label : z.labels) ++sizes[label];
  return sizes;
}

}  // namespace mulch::detail
