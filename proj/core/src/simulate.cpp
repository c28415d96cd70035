#include "mulch/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "branching.hpp"
#include "mulch/rng.hpp"

namespace mulch {
namespace {

constexpr std::uint64_t kMembershipStream = 0;
constexpr std::uint64_t kCoupleStreamBase = 1000;

void check_betas(const std::vector<double>& betas) {
  if (betas.empty()) throw std::invalid_argument("simulate: betas must be nonempty");
  for (double b : betas)
    if (!(b > 0.0)) throw std::invalid_argument("simulate: betas must be positive");
}

}  // namespace

Membership sample_membership(const std::vector<double>& pi, int n, std::mt19937_64& rng) {
  if (pi.empty()) throw std::invalid_argument("sample_membership: pi must be nonempty");
  double sum = 0.0;
  for (double p : pi) {
    if (p < 0.0) throw std::invalid_argument("sample_membership: pi entries must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-8)
    throw std::invalid_argument("sample_membership: pi must sum to 1");
  if (n < 0) throw std::invalid_argument("sample_membership: negative node count");

  Membership z;
  z.num_blocks = static_cast<int>(pi.size());
  z.labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z.labels.push_back(static_cast<int>(categorical(rng, pi)));
  return z;
}

std::vector<Event> simulate_block_pair(const BlockPairParams& theta_ab,
                                       const BlockPairParams& theta_ba,
                                       const std::vector<double>& betas,
                                       const std::vector<int>& members_a,
                                       const std::vector<int>& members_b, double duration,
                                       std::mt19937_64& rng, std::int64_t max_events,
                                       bool* truncated) {
  check_betas(betas);
  const std::size_t q = betas.size();
  if (theta_ab.c.size() != q || theta_ba.c.size() != q)
    throw std::invalid_argument("simulate_block_pair: kernel weight count must match betas");
  if (duration < 0.0) throw std::invalid_argument("simulate_block_pair: negative duration");
  if (truncated != nullptr) *truncated = false;

  const bool diagonal = members_a == members_b;
  const int na = static_cast<int>(members_a.size());
  const int nb = static_cast<int>(members_b.size());

  // Local node table: block a first, then block b (off-diagonal only).
  std::vector<int> nodes = members_a;
  if (!diagonal) nodes.insert(nodes.end(), members_b.begin(), members_b.end());
  const int ln = static_cast<int>(nodes.size());
  {
    std::unordered_map<int, int> seen;
    for (int v : nodes) {
      if (v < 0) throw std::invalid_argument("simulate_block_pair: negative node id");
      if (!seen.emplace(v, 0).second)
        throw std::invalid_argument(
            diagonal ? "simulate_block_pair: duplicate member id"
                     : "simulate_block_pair: member sets must be disjoint");
    }
  }

  struct Dim {
    int sender, receiver;  // local ids
    int side;              // 0 = pairs governed by theta_ab, 1 = theta_ba
  };
  std::vector<Dim> dims;
  if (diagonal) {
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j)
        if (i != j) dims.push_back({i, j, 0});
  } else {
    for (int i = 0; i < na; ++i)
      for (int j = na; j < ln; ++j) dims.push_back({i, j, 0});
    for (int i = na; i < ln; ++i)
      for (int j = 0; j < na; ++j) dims.push_back({i, j, 1});
  }
  const int nd = static_cast<int>(dims.size());
  if (nd == 0 || duration == 0.0) return {};

  std::vector<int> dim_id(static_cast<std::size_t>(ln) * ln, -1);
  for (int d = 0; d < nd; ++d)
    dim_id[static_cast<std::size_t>(dims[d].sender) * ln + dims[d].receiver] = d;

  const double* cs[2] = {theta_ab.c.data(), theta_ba.c.data()};
  const BlockPairParams* theta[2] = {&theta_ab, &theta_ba};

  std::vector<double> mud(nd);
  double mu_total = 0.0;
  for (int d = 0; d < nd; ++d) {
    mud[d] = theta[dims[d].side]->mu;
    mu_total += mud[d];
  }

  // Excitation state: s[d*q + j] = sum of alpha jumps onto dim d decayed to
  // state_time with rate betas[j]; agg[j] = sum_d c_d[j] * s[d][j] decayed to
  // agg_time >= state_time. agg alone drives the O(Q) bound and rejection
  // test; it is recomputed exactly from s at every accepted event, so
  // rounding drift cannot accumulate across events.
  std::vector<double> s(static_cast<std::size_t>(nd) * q, 0.0);
  std::vector<double> agg(q, 0.0);
  std::vector<double> decay(q);
  double state_time = 0.0;
  double agg_time = 0.0;
  double t = 0.0;
  double bound = mu_total;

  // All dims decayed to state_time by the last acceptance pass, so jump
  // updates add the raw alpha with no further decay.
  auto bump = [&](int sender, int receiver, ExcitationType type) {
    const int d = dim_id[static_cast<std::size_t>(sender) * ln + receiver];
    const int side = dims[d].side;
    const double a = theta[side]->alpha[static_cast<std::size_t>(type)];
    if (a == 0.0) return;
    double* sd = &s[static_cast<std::size_t>(d) * q];
    const double* c = cs[side];
    for (std::size_t j = 0; j < q; ++j) {
      sd[j] += a;
      agg[j] += c[j] * a;
    }
  };

  std::vector<Event> out;
  while (true) {
    if (bound <= 0.0) break;
    if (static_cast<std::int64_t>(out.size()) >= max_events) {
      if (truncated != nullptr) *truncated = true;
      break;
    }
    t += exponential(rng, bound);
    if (t > duration) break;

    double lam_total = mu_total;
    for (std::size_t j = 0; j < q; ++j) {
      agg[j] *= std::exp(-betas[j] * (t - agg_time));
      lam_total += betas[j] * agg[j];
    }
    agg_time = t;
    const double target = uniform01(rng) * bound;
    if (target >= lam_total) {  // reject; the decayed intensity is the new bound
      bound = lam_total;
      continue;
    }

    // Accept: decay every dim to t, recompute agg exactly, and locate the
    // dimension whose cumulative intensity covers the thinning draw.
    for (std::size_t j = 0; j < q; ++j) {
      decay[j] = std::exp(-betas[j] * (t - state_time));
      agg[j] = 0.0;
    }
    double cum = 0.0;
    int pick = -1;
    for (int d = 0; d < nd; ++d) {
      double* sd = &s[static_cast<std::size_t>(d) * q];
      const double* c = cs[dims[d].side];
      double lam_d = mud[d];
      for (std::size_t j = 0; j < q; ++j) {
        sd[j] *= decay[j];
        lam_d += c[j] * betas[j] * sd[j];
        agg[j] += c[j] * sd[j];
      }
      cum += lam_d;
      if (pick < 0 && target < cum) pick = d;
    }
    state_time = t;
    agg_time = t;
    if (pick < 0) {  // float slack at the acceptance boundary: treat as reject
      bound = mu_total;
      for (std::size_t j = 0; j < q; ++j) bound += betas[j] * agg[j];
      continue;
    }

    const Dim& ed = dims[pick];
    out.push_back({nodes[ed.sender], nodes[ed.receiver], t});

    const int x = ed.sender;
    const int y = ed.receiver;
    bump(x, y, ExcitationType::self);
    bump(y, x, ExcitationType::reciprocal);
    const int y_lo = (diagonal || y < na) ? 0 : na;
    const int y_hi = (diagonal || y < na) ? na : ln;
    for (int j = y_lo; j < y_hi; ++j) {
      if (j == x || j == y) continue;
      bump(x, j, ExcitationType::turn_continuation);
      bump(j, x, ExcitationType::allied_reciprocity);
    }
    const int x_lo = (diagonal || x < na) ? 0 : na;
    const int x_hi = (diagonal || x < na) ? na : ln;
    for (int j = x_lo; j < x_hi; ++j) {
      if (j == x || j == y) continue;
      bump(y, j, ExcitationType::generalized_reciprocity);
      bump(j, y, ExcitationType::allied_continuation);
    }

    bound = mu_total;
    for (std::size_t j = 0; j < q; ++j) bound += betas[j] * agg[j];
  }
  return out;
}

SimResult generate_network(const SimConfig& cfg) {
  const int k = cfg.k();
  if (k < 1) throw std::invalid_argument("generate_network: pi must be nonempty");
  if (cfg.n_nodes < 2) throw std::invalid_argument("generate_network: need at least 2 nodes");
  if (!(cfg.duration > 0.0)) throw std::invalid_argument("generate_network: duration must be > 0");
  check_betas(cfg.betas);
  if (cfg.params.size() != static_cast<std::size_t>(k) * k)
    throw std::invalid_argument("generate_network: params grid must be K*K");

  Membership z;
  if (cfg.membership_override.has_value()) {
    z.labels = *cfg.membership_override;
    z.num_blocks = k;
    if (z.labels.size() != static_cast<std::size_t>(cfg.n_nodes))
      throw std::invalid_argument("generate_network: membership override length must be n");
    validate(z);
  } else {
    auto rng = make_rng(cfg.seed, kMembershipStream);
    z = sample_membership(cfg.pi, cfg.n_nodes, rng);
  }

  MulchModel model;
  model.k = k;
  model.betas = cfg.betas;
  model.params = cfg.params;
  model.membership = z;
  validate(model);

  SimResult res;
  res.membership = z;
  res.spectral_radius = stationarity_check(model);
  const bool unstable = res.spectral_radius >= 1.0;
  if (unstable && !cfg.allow_unstable) {
    std::ostringstream msg;
    msg << "generate_network: non-stationary parameters (branching spectral radius "
        << res.spectral_radius << " >= 1); set allow_unstable to simulate with an event cap";
    throw std::runtime_error(msg.str());
  }

  const auto members = block_members(z);
  std::vector<Event> all;
  std::int64_t remaining =
      unstable ? cfg.max_events : std::numeric_limits<std::int64_t>::max();
  for (int a = 0; a < k && !res.truncated; ++a) {
    for (int b = a; b < k; ++b) {
      if (remaining <= 0) {
        res.truncated = true;
        break;
      }
      auto rng = make_rng(cfg.seed,
                          kCoupleStreamBase + static_cast<std::uint64_t>(a) * k + b);
      bool trunc = false;
      auto frag = simulate_block_pair(model.block_pair(a, b), model.block_pair(b, a),
                                      cfg.betas, members[a], members[b], cfg.duration, rng,
                                      remaining, &trunc);
      res.truncated = res.truncated || trunc;
      remaining -= static_cast<std::int64_t>(frag.size());
      all.insert(all.end(), frag.begin(), frag.end());
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const Event& l, const Event& r) { return l.time < r.time; });

  res.stream.events = std::move(all);
  res.stream.n_nodes = cfg.n_nodes;
  res.stream.duration = cfg.duration;
  validate(res.stream);
  return res;
}

double stationarity_check(const MulchModel& model) {
  validate(model);
  const auto sizes = detail::block_sizes_of(model.membership);
  double radius = 0.0;
  for (int a = 0; a < model.k; ++a)
    for (int b = a; b < model.k; ++b)
      radius = std::max(radius, detail::reduce_couple(model, a, b, sizes).radius);
  return radius;
}

}  // namespace mulch
