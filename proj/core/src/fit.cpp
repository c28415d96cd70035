#include "mulch/fit.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <utility>

#include "mulch/eval.hpp"
#include "mulch/optimize.hpp"
#include "mulch/rng.hpp"
#include "mulch/spectral.hpp"

namespace mulch {
namespace {

constexpr std::uint64_t kSpectralStream = 500;
constexpr std::uint64_t kFitStreamBase = 10'000;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_fit_betas(const std::vector<double>& betas) {
  if (betas.empty()) throw std::invalid_argument("fit: betas must be nonempty");
  for (double b : betas)
    if (!(b > 0.0)) throw std::invalid_argument("fit: betas must be positive");
}

// Sufficient statistics of one block pair: parameters enter the likelihood
// only through -mu*T*P, the six compensator weights v_sum, and the decayed
// excitation sums r at the pair's own events, so these are precomputed once
// per (data, membership) and reused across optimizer iterations.
struct BlockPairStats {
  double horizon = 0.0;
  std::int64_t n_pairs = 0;
  std::int64_t n_events = 0;
  std::size_t q = 0;
  std::array<std::vector<double>, kNumExcitationTypes> v_sum;  // [type][q]
  std::vector<double> r;  // n_events * 6 * q; r[(e*6 + type)*q + j]
};

// For each (time, slot) query, the decayed count of source times strictly
// earlier: out[slot*q + j] += sum_{s < t} e^{-betas[j] (t - s)}.
void decayed_sums(const std::vector<double>& sources,
                  const std::vector<std::pair<double, std::int64_t>>& queries,
                  const std::vector<double>& betas, std::vector<double>& out) {
  if (sources.empty() || queries.empty()) return;
  const std::size_t q = betas.size();
  std::vector<double> state(q, 0.0);
  double ref = 0.0;
  std::size_t p = 0;
  for (const auto& [t, slot] : queries) {
    while (p < sources.size() && sources[p] < t) {
      for (std::size_t j = 0; j < q; ++j)
        state[j] = state[j] * std::exp(-betas[j] * (sources[p] - ref)) + 1.0;
      ref = sources[p];
      ++p;
    }
    double* dst = &out[static_cast<std::size_t>(slot) * q];
    for (std::size_t j = 0; j < q; ++j) dst[j] = state[j] * std::exp(-betas[j] * (t - ref));
  }
}

BlockPairStats build_block_pair_stats(const EventStream& s, const Membership& z, int a, int b,
                                      const std::vector<double>& betas, double horizon) {
  const std::size_t q = betas.size();
  BlockPairStats st;
  st.horizon = horizon;
  st.q = q;
  for (auto& v : st.v_sum) v.assign(q, 0.0);

  std::int64_t na = 0;
  std::int64_t nb = 0;
  for (int label : z.labels) {
    if (label == a) ++na;
    if (label == b) ++nb;
  }
  st.n_pairs = a == b ? na * (na - 1) : na * nb;
  if (st.n_pairs == 0) return st;

  const bool diag = a == b;
  const std::int64_t n = static_cast<std::int64_t>(s.n_nodes);
  struct Own {
    int sender, receiver;
    double time;
  };
  std::vector<Own> own;     // events of bp(a,b), in stream order
  std::vector<Own> rev;     // events of bp(b,a); aliases `own` when a == b
  for (const Event& e : s.events) {
    const int zi = z.labels[e.sender];
    const int zj = z.labels[e.receiver];
    if (zi == a && zj == b) own.push_back({e.sender, e.receiver, e.time});
    if (!diag && zi == b && zj == a) rev.push_back({e.sender, e.receiver, e.time});
  }
  const std::vector<Own>& rev_ref = diag ? own : rev;
  st.n_events = static_cast<std::int64_t>(own.size());

  // Horizon-weighted compensator mass of each stream, aggregated in closed
  // form: every type's per-pair sum collapses to a multiple of V(bp(a,b)) or
  // V(bp(b,a)).
  std::vector<double> v_own(q, 0.0);
  std::vector<double> v_rev(q, 0.0);
  for (const Own& e : own)
    for (std::size_t j = 0; j < q; ++j) v_own[j] += 1.0 - std::exp(-betas[j] * (horizon - e.time));
  if (diag) {
    v_rev = v_own;
  } else {
    for (const Own& e : rev)
      for (std::size_t j = 0; j < q; ++j)
        v_rev[j] += 1.0 - std::exp(-betas[j] * (horizon - e.time));
  }
  const double recv_b = static_cast<double>(nb - (diag ? 1 : 0));  // receivers per sender
  const double send_a = static_cast<double>(na - (diag ? 1 : 0));  // senders per receiver
  for (std::size_t j = 0; j < q; ++j) {
    st.v_sum[0][j] = v_own[j];                 // self
    st.v_sum[1][j] = v_rev[j];                 // reciprocal
    st.v_sum[2][j] = (recv_b - 1.0) * v_own[j];  // turn continuation
    st.v_sum[3][j] = (recv_b - 1.0) * v_rev[j];  // generalized reciprocity
    st.v_sum[4][j] = (send_a - 1.0) * v_own[j];  // allied continuation
    st.v_sum[5][j] = (send_a - 1.0) * v_rev[j];  // allied reciprocity
  }
  if (own.empty()) return st;

  // Group own/reverse events into the per-pair and per-node streams that the
  // six excitation types aggregate over.
  std::unordered_map<std::int64_t, std::vector<double>> own_pair_times;
  std::unordered_map<std::int64_t, std::vector<double>> rev_pair_times;
  std::unordered_map<int, std::vector<std::int64_t>> by_sender;    // own event indices
  std::unordered_map<int, std::vector<std::int64_t>> by_receiver;  // own event indices
  std::unordered_map<int, std::vector<double>> rev_by_receiver_times;
  std::unordered_map<int, std::vector<double>> rev_by_sender_times;
  for (std::int64_t e = 0; e < st.n_events; ++e) {
    const Own& ev = own[static_cast<std::size_t>(e)];
    own_pair_times[static_cast<std::int64_t>(ev.sender) * n + ev.receiver].push_back(ev.time);
    by_sender[ev.sender].push_back(e);
    by_receiver[ev.receiver].push_back(e);
  }
  for (const Own& ev : rev_ref) {
    if (!diag)
      rev_pair_times[static_cast<std::int64_t>(ev.sender) * n + ev.receiver].push_back(ev.time);
    rev_by_receiver_times[ev.receiver].push_back(ev.time);
    rev_by_sender_times[ev.sender].push_back(ev.time);
  }
  const auto& rev_pairs = diag ? own_pair_times : rev_pair_times;

  const std::size_t eq = static_cast<std::size_t>(st.n_events) * q;
  std::vector<double> r_self(eq, 0.0);    // prior events of the pair itself
  std::vector<double> r_recip(eq, 0.0);   // prior events of the reversed pair
  std::vector<double> r_out(eq, 0.0);     // prior events sender -> block b
  std::vector<double> r_in(eq, 0.0);      // prior events block b -> sender
  std::vector<double> r_inja(eq, 0.0);    // prior events block a -> receiver
  std::vector<double> r_outja(eq, 0.0);   // prior events receiver -> block a

  std::vector<std::pair<double, std::int64_t>> queries;
  const auto queries_of = [&](const std::vector<std::int64_t>& idx) {
    queries.clear();
    for (std::int64_t e : idx) queries.emplace_back(own[static_cast<std::size_t>(e)].time, e);
  };

  // Per ordered pair: its own stream and the reversed pair's stream.
  {
    std::unordered_map<std::int64_t, std::vector<std::int64_t>> pair_events;
    for (std::int64_t e = 0; e < st.n_events; ++e) {
      const Own& ev = own[static_cast<std::size_t>(e)];
      pair_events[static_cast<std::int64_t>(ev.sender) * n + ev.receiver].push_back(e);
    }
    static const std::vector<double> kEmpty;
    for (const auto& [key, idx] : pair_events) {
      const std::int64_t sender = key / n;
      const std::int64_t receiver = key % n;
      queries_of(idx);
      decayed_sums(own_pair_times.at(key), queries, betas, r_self);
      const auto it = rev_pairs.find(receiver * n + sender);
      decayed_sums(it == rev_pairs.end() ? kEmpty : it->second, queries, betas, r_recip);
    }
  }
  // Per sender: everything it sent into block b, and what block b sent it.
  {
    static const std::vector<double> kEmpty;
    for (const auto& [node, idx] : by_sender) {
      queries_of(idx);
      std::vector<double> times;
      times.reserve(idx.size());
      for (std::int64_t e : idx) times.push_back(own[static_cast<std::size_t>(e)].time);
      decayed_sums(times, queries, betas, r_out);
      const auto it = rev_by_receiver_times.find(node);
      decayed_sums(it == rev_by_receiver_times.end() ? kEmpty : it->second, queries, betas, r_in);
    }
  }
  // Per receiver: everything block a sent it, and what it sent into block a.
  {
    static const std::vector<double> kEmpty;
    for (const auto& [node, idx] : by_receiver) {
      queries_of(idx);
      std::vector<double> times;
      times.reserve(idx.size());
      for (std::int64_t e : idx) times.push_back(own[static_cast<std::size_t>(e)].time);
      decayed_sums(times, queries, betas, r_inja);
      const auto it = rev_by_sender_times.find(node);
      decayed_sums(it == rev_by_sender_times.end() ? kEmpty : it->second, queries, betas,
                   r_outja);
    }
  }

  // Assemble per-type streams; the unions exclude the pair's own and
  // reversed streams, which subtracts exactly (clamped against rounding).
  st.r.assign(static_cast<std::size_t>(st.n_events) * kNumExcitationTypes * q, 0.0);
  for (std::int64_t e = 0; e < st.n_events; ++e) {
    const std::size_t base = static_cast<std::size_t>(e) * kNumExcitationTypes * q;
    const std::size_t eoff = static_cast<std::size_t>(e) * q;
    for (std::size_t j = 0; j < q; ++j) {
      const double self = r_self[eoff + j];
      const double recip = r_recip[eoff + j];
      st.r[base + 0 * q + j] = self;
      st.r[base + 1 * q + j] = recip;
      st.r[base + 2 * q + j] = std::max(0.0, r_out[eoff + j] - self);
      st.r[base + 3 * q + j] = std::max(0.0, r_in[eoff + j] - recip);
      st.r[base + 4 * q + j] = std::max(0.0, r_inja[eoff + j] - self);
      st.r[base + 5 * q + j] = std::max(0.0, r_outja[eoff + j] - recip);
    }
  }
  return st;
}

double stats_log_likelihood(const BlockPairStats& st, const std::vector<double>& betas,
                            double mu, const std::array<double, kNumExcitationTypes>& alpha,
                            const std::vector<double>& c, BlockPairGrad* grad) {
  const std::size_t q = st.q;
  if (grad != nullptr) {
    grad->d_mu = 0.0;
    grad->d_alpha.fill(0.0);
    grad->d_c.assign(q, 0.0);
  }
  if (st.n_pairs == 0) return 0.0;

  double ll = -mu * st.horizon * static_cast<double>(st.n_pairs);
  std::array<double, kNumExcitationTypes> a_dot_v{};
  for (std::size_t k = 0; k < kNumExcitationTypes; ++k) {
    for (std::size_t j = 0; j < q; ++j) a_dot_v[k] += c[j] * st.v_sum[k][j];
    ll -= alpha[k] * a_dot_v[k];
  }
  if (grad != nullptr) {
    grad->d_mu = -st.horizon * static_cast<double>(st.n_pairs);
    for (std::size_t k = 0; k < kNumExcitationTypes; ++k) {
      grad->d_alpha[k] = -a_dot_v[k];
      for (std::size_t j = 0; j < q; ++j) grad->d_c[j] -= alpha[k] * st.v_sum[k][j];
    }
  }

  std::array<double, kNumExcitationTypes> u{};
  for (std::int64_t e = 0; e < st.n_events; ++e) {
    const double* re = &st.r[static_cast<std::size_t>(e) * kNumExcitationTypes * q];
    double lam = mu;
    for (std::size_t k = 0; k < kNumExcitationTypes; ++k) {
      double uk = 0.0;
      for (std::size_t j = 0; j < q; ++j) uk += c[j] * betas[j] * re[k * q + j];
      u[k] = uk;
      lam += alpha[k] * uk;
    }
    if (!(lam > 0.0)) {
      std::ostringstream msg;
      msg << "block_pair_log_likelihood: nonpositive intensity at event " << e
          << " of the block pair (lambda = " << lam << ")";
      throw std::runtime_error(msg.str());
    }
    ll += std::log(lam);
    if (grad != nullptr) {
      const double inv = 1.0 / lam;
      grad->d_mu += inv;
      for (std::size_t k = 0; k < kNumExcitationTypes; ++k) grad->d_alpha[k] += u[k] * inv;
      for (std::size_t j = 0; j < q; ++j) {
        double tj = 0.0;
        for (std::size_t k = 0; k < kNumExcitationTypes; ++k) tj += alpha[k] * re[k * q + j];
        grad->d_c[j] += betas[j] * tj * inv;
      }
    }
  }
  return ll;
}

void check_block_pair_args(const EventStream& events, const Membership& z, int a, int b,
                           double horizon) {
  validate(events);
  validate(z);
  if (z.labels.size() != events.n_nodes)
    throw std::invalid_argument("fit: membership must cover every node of the stream");
  if (a < 0 || b < 0 || a >= z.num_blocks || b >= z.num_blocks)
    throw std::invalid_argument("fit: block pair index out of range");
  if (!events.events.empty() && horizon < events.events.back().time)
    throw std::invalid_argument("fit: horizon below the last event time");
}

BlockPairParams floor_params(const FitConfig& cfg, std::size_t q) {
  BlockPairParams p;
  p.mu = cfg.param_lower_bound;
  for (std::size_t k = 0; k < kNumExcitationTypes; ++k)
    p.alpha[k] = cfg.alpha_mask[k] ? cfg.param_lower_bound : 0.0;
  p.c.assign(q, 1.0 / static_cast<double>(q));
  return p;
}

FitBlockPairResult fit_block_pair_stats(const BlockPairStats& st, int a, int b,
                                        const FitConfig& cfg, int k_blocks,
                                        const std::optional<BlockPairParams>& warm_start) {
  const std::size_t q = cfg.betas.size();
  const double eps = cfg.param_lower_bound;
  FitBlockPairResult res;

  if (st.n_pairs == 0) {
    res.params = floor_params(cfg, q);
    res.converged = true;
    res.empty = true;
    res.log_likelihood = 0.0;
    return res;
  }
  if (st.n_events == 0) {
    // Without own events the likelihood is decreasing in every parameter, so
    // the floor is the exact constrained maximizer.
    res.params = floor_params(cfg, q);
    res.converged = true;
    res.log_likelihood =
        stats_log_likelihood(st, cfg.betas, res.params.mu, res.params.alpha, res.params.c,
                             nullptr);
    return res;
  }

  std::vector<std::size_t> free_alpha;
  for (std::size_t k = 0; k < kNumExcitationTypes; ++k)
    if (cfg.alpha_mask[k]) free_alpha.push_back(k);
  const std::size_t nvar = 1 + free_alpha.size() + q;

  std::vector<double> x0(nvar);
  if (warm_start.has_value()) {
    if (warm_start->c.size() != q)
      throw std::invalid_argument("fit_block_pair: warm start kernel size mismatch");
    x0[0] = std::max(warm_start->mu, eps);
    for (std::size_t i = 0; i < free_alpha.size(); ++i)
      x0[1 + i] = std::max(warm_start->alpha[free_alpha[i]], eps);
    for (std::size_t j = 0; j < q; ++j)
      x0[1 + free_alpha.size() + j] = std::max(warm_start->c[j], eps);
  } else {
    auto rng = make_rng(cfg.seed,
                        kFitStreamBase + static_cast<std::uint64_t>(a) * k_blocks + b);
    for (double& v : x0) v = uniform(rng, 0.01, 0.1);
  }

  const double scale = 1.0 / static_cast<double>(std::max<std::int64_t>(1, st.n_events));
  std::array<double, kNumExcitationTypes> alpha{};
  std::vector<double> c(q);
  BlockPairGrad g;
  const ObjectiveFn objective = [&](const std::vector<double>& x, std::vector<double>& gx) {
    const double mu = x[0];
    alpha.fill(0.0);
    for (std::size_t i = 0; i < free_alpha.size(); ++i) alpha[free_alpha[i]] = x[1 + i];
    double wsum = 0.0;
    for (std::size_t j = 0; j < q; ++j) wsum += x[1 + free_alpha.size() + j];
    for (std::size_t j = 0; j < q; ++j) c[j] = x[1 + free_alpha.size() + j] / wsum;
    const double ll = stats_log_likelihood(st, cfg.betas, mu, alpha, c, &g);
    gx[0] = -g.d_mu * scale;
    for (std::size_t i = 0; i < free_alpha.size(); ++i)
      gx[1 + i] = -g.d_alpha[free_alpha[i]] * scale;
    double c_dot = 0.0;
    for (std::size_t j = 0; j < q; ++j) c_dot += c[j] * g.d_c[j];
    for (std::size_t j = 0; j < q; ++j)
      gx[1 + free_alpha.size() + j] = -((g.d_c[j] - c_dot) / wsum) * scale;
    return -ll * scale;
  };

  LbfgsConfig opt;
  opt.max_iterations = cfg.optimizer_max_iters;
  opt.projected_grad_tol = cfg.optimizer_tol;
  const LbfgsResult sol =
      minimize_bounded(objective, x0, std::vector<double>(nvar, eps), opt);

  res.params.mu = sol.x[0];
  res.params.alpha.fill(0.0);
  for (std::size_t i = 0; i < free_alpha.size(); ++i)
    res.params.alpha[free_alpha[i]] = sol.x[1 + i];
  double wsum = 0.0;
  for (std::size_t j = 0; j < q; ++j) wsum += sol.x[1 + free_alpha.size() + j];
  res.params.c.resize(q);
  for (std::size_t j = 0; j < q; ++j) res.params.c[j] = sol.x[1 + free_alpha.size() + j] / wsum;
  res.log_likelihood = -sol.value / scale;
  res.converged = sol.converged;
  return res;
}

// Shared state of the refinement loop (and of fit_mulch's assembly).
struct RefineState {
  Membership z;
  std::vector<BlockPairParams> params;      // k*k
  std::vector<double> grid_ll;              // k*k, exact for current params & z
  std::vector<std::uint8_t> converged;      // k*k
  std::vector<std::uint8_t> empty;          // k*k
  std::vector<RefinementStep> trajectory;
};

double grid_total(const std::vector<double>& grid) {
  double total = 0.0;
  for (double v : grid) total += v;
  return total;
}

void for_each_pair(int k, int workers, const std::function<void(int, int)>& fn) {
  const int jobs = k * k;
  if (workers <= 1 || jobs <= 1) {
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) fn(a, b);
    return;
  }
  std::atomic<int> next{0};
  const int n_threads = std::min(workers, jobs);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (int job = next.fetch_add(1); job < jobs; job = next.fetch_add(1))
        fn(job / k, job % k);
    });
  }
  for (auto& th : pool) th.join();
}

// Refit every block pair from its current parameters, keeping the old ones
// wherever the refit fails to improve (so the total never decreases).
void refit_all(const EventStream& events, const FitConfig& cfg, RefineState& state) {
  const int k = state.z.num_blocks;
  for_each_pair(k, cfg.workers, [&](int a, int b) {
    const std::size_t slot = static_cast<std::size_t>(a) * k + b;
    const auto st = build_block_pair_stats(events, state.z, a, b, cfg.betas, events.duration);
    const auto fit =
        fit_block_pair_stats(st, a, b, cfg, k, std::optional<BlockPairParams>(state.params[slot]));
    state.converged[slot] = fit.converged ? 1 : 0;
    state.empty[slot] = fit.empty ? 1 : 0;
    if (fit.empty || fit.log_likelihood > state.grid_ll[slot]) {
      state.params[slot] = fit.params;
      state.grid_ll[slot] = fit.log_likelihood;
    }
  });
}

void run_refinement(const EventStream& events, const FitConfig& cfg, RefineState& state) {
  const int k = state.z.num_blocks;
  const int n = static_cast<int>(events.n_nodes);
  state.trajectory.push_back({0, grid_total(state.grid_ll)});

  std::vector<std::pair<std::size_t, double>> best_vals;
  std::vector<std::pair<std::size_t, double>> vals;
  for (int round = 0; round < cfg.max_refinement_iters; ++round) {
    int changes = 0;
    for (int v = 0; v < n; ++v) {
      const int h = state.z.labels[v];
      int best_g = h;
      double best_delta = 0.0;
      for (int g = 0; g < k; ++g) {
        if (g == h) continue;
        state.z.labels[v] = g;
        vals.clear();
        double delta = 0.0;
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) {
            if (a != g && a != h && b != g && b != h) continue;
            const std::size_t slot = static_cast<std::size_t>(a) * k + b;
            const auto st =
                build_block_pair_stats(events, state.z, a, b, cfg.betas, events.duration);
            const double ll = stats_log_likelihood(st, cfg.betas, state.params[slot].mu,
                                                   state.params[slot].alpha,
                                                   state.params[slot].c, nullptr);
            vals.emplace_back(slot, ll);
            delta += ll - state.grid_ll[slot];
          }
        }
        state.z.labels[v] = h;
        if (delta > best_delta) {  // strict: ties keep the current block
          best_delta = delta;
          best_g = g;
          best_vals = vals;
        }
      }
      if (best_g != h) {
        state.z.labels[v] = best_g;
        ++changes;
        for (const auto& [slot, ll] : best_vals) state.grid_ll[slot] = ll;
      }
    }
    if (changes == 0) {
      state.trajectory.push_back({0, grid_total(state.grid_ll)});
      break;
    }
    refit_all(events, cfg, state);
    state.trajectory.push_back({changes, grid_total(state.grid_ll)});
  }
}

FitConfig config_for_model(const MulchModel& model, const FitConfig& cfg) {
  FitConfig out = cfg;
  out.k = model.k;
  out.betas = model.betas;
  return out;
}

}  // namespace

double block_pair_log_likelihood(const BlockPairParams& theta, const std::vector<double>& betas,
                                 const EventStream& events, const Membership& z, int a, int b,
                                 double horizon, BlockPairGrad* grad) {
  check_fit_betas(betas);
  check_block_pair_args(events, z, a, b, horizon);
  if (theta.c.size() != betas.size())
    throw std::invalid_argument("block_pair_log_likelihood: kernel weight count mismatch");
  if (theta.mu < 0.0)
    throw std::invalid_argument("block_pair_log_likelihood: mu must be >= 0");
  for (double v : theta.alpha)
    if (v < 0.0) throw std::invalid_argument("block_pair_log_likelihood: alpha must be >= 0");
  for (double v : theta.c)
    if (v < 0.0)
      throw std::invalid_argument("block_pair_log_likelihood: kernel weights must be >= 0");
  const auto st = build_block_pair_stats(events, z, a, b, betas, horizon);
  return stats_log_likelihood(st, betas, theta.mu, theta.alpha, theta.c, grad);
}

double full_log_likelihood(const MulchModel& model, const EventStream& events, double horizon) {
  validate(model);
  double total = 0.0;
  for (int a = 0; a < model.k; ++a)
    for (int b = 0; b < model.k; ++b)
      total += block_pair_log_likelihood(model.block_pair(a, b), model.betas, events,
                                         model.membership, a, b, horizon);
  return total;
}

FitBlockPairResult fit_block_pair(const EventStream& events, const Membership& z, int a, int b,
                                  const FitConfig& cfg,
                                  const std::optional<BlockPairParams>& warm_start) {
  check_fit_betas(cfg.betas);
  check_block_pair_args(events, z, a, b, events.duration);
  if (!(cfg.param_lower_bound > 0.0))
    throw std::invalid_argument("fit_block_pair: parameter lower bound must be > 0");
  const auto st = build_block_pair_stats(events, z, a, b, cfg.betas, events.duration);
  return fit_block_pair_stats(st, a, b, cfg, z.num_blocks, warm_start);
}

RefineResult refine_memberships(const EventStream& events, const MulchModel& model,
                                const FitConfig& cfg) {
  validate(model);
  validate(events);
  if (model.membership.labels.size() != events.n_nodes)
    throw std::invalid_argument("refine_memberships: membership must cover every node");
  if (cfg.max_refinement_iters < 0)
    throw std::invalid_argument("refine_memberships: negative iteration cap");

  const FitConfig run_cfg = config_for_model(model, cfg);
  const int k = model.k;
  RefineState state;
  state.z = model.membership;
  state.params = model.params;
  state.grid_ll.assign(static_cast<std::size_t>(k) * k, 0.0);
  state.converged.assign(static_cast<std::size_t>(k) * k, 1);
  state.empty.assign(static_cast<std::size_t>(k) * k, 0);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const std::size_t slot = static_cast<std::size_t>(a) * k + b;
      const auto st = build_block_pair_stats(events, state.z, a, b, run_cfg.betas,
                                             events.duration);
      state.empty[slot] = st.n_pairs == 0 ? 1 : 0;
      state.grid_ll[slot] = stats_log_likelihood(st, run_cfg.betas, state.params[slot].mu,
                                                 state.params[slot].alpha,
                                                 state.params[slot].c, nullptr);
    }
  }
  run_refinement(events, run_cfg, state);

  RefineResult res;
  res.model.k = k;
  res.model.betas = run_cfg.betas;
  res.model.params = std::move(state.params);
  res.model.membership = std::move(state.z);
  res.trajectory = std::move(state.trajectory);
  return res;
}

FitResult fit_mulch(const EventStream& events, const FitConfig& cfg) {
  validate(events);
  check_fit_betas(cfg.betas);
  if (cfg.k < 1) throw std::invalid_argument("fit_mulch: K must be >= 1");
  if (events.n_nodes < static_cast<std::size_t>(cfg.k))
    throw std::invalid_argument("fit_mulch: need at least K nodes");
  if (cfg.max_refinement_iters < 0)
    throw std::invalid_argument("fit_mulch: negative iteration cap");

  const auto t_start = std::chrono::steady_clock::now();
  FitResult res;

  auto spectral_rng = make_rng(cfg.seed, kSpectralStream);
  const CountMatrix counts = count_matrix(events);
  res.spectral_membership = spectral_cluster(counts, cfg.k, spectral_rng);
  res.timings.spectral_seconds = seconds_since(t_start);

  const auto t_fit = std::chrono::steady_clock::now();
  const int k = cfg.k;
  RefineState state;
  state.z = res.spectral_membership;
  state.params.assign(static_cast<std::size_t>(k) * k, BlockPairParams{});
  state.grid_ll.assign(static_cast<std::size_t>(k) * k, 0.0);
  state.converged.assign(static_cast<std::size_t>(k) * k, 0);
  state.empty.assign(static_cast<std::size_t>(k) * k, 0);
  for_each_pair(k, cfg.workers, [&](int a, int b) {
    const std::size_t slot = static_cast<std::size_t>(a) * k + b;
    const auto st = build_block_pair_stats(events, state.z, a, b, cfg.betas, events.duration);
    const auto fit = fit_block_pair_stats(st, a, b, cfg, k, std::nullopt);
    state.params[slot] = fit.params;
    state.grid_ll[slot] = fit.log_likelihood;
    state.converged[slot] = fit.converged ? 1 : 0;
    state.empty[slot] = fit.empty ? 1 : 0;
  });
  res.timings.fit_seconds = seconds_since(t_fit);

  const auto t_refine = std::chrono::steady_clock::now();
  run_refinement(events, cfg, state);
  res.timings.refinement_seconds = seconds_since(t_refine);

  res.model.k = k;
  res.model.betas = cfg.betas;
  res.model.params = std::move(state.params);
  res.model.membership = std::move(state.z);
  res.pair_log_likelihood = std::move(state.grid_ll);
  res.train_log_likelihood = grid_total(res.pair_log_likelihood);
  res.trajectory = std::move(state.trajectory);
  res.pair_converged = std::move(state.converged);
  res.pair_empty = std::move(state.empty);
  res.timings.total_seconds = seconds_since(t_start);
  return res;
}

SelectKResult select_K(const EventStream& events, const std::vector<int>& k_candidates,
                       SelectMetric metric, int n_train, const FitConfig& base_cfg) {
  if (k_candidates.empty()) throw std::invalid_argument("select_K: empty candidate list");
  const TrainTestSplit split = split_train_test(events, static_cast<std::size_t>(n_train));

  SelectKResult res;
  res.scores.reserve(k_candidates.size());
  bool have_best = false;
  double best_score = 0.0;
  for (int k : k_candidates) {
    FitConfig cfg = base_cfg;
    cfg.k = k;
    const FitResult fit = fit_mulch(split.train, cfg);
    double score = 0.0;
    if (metric == SelectMetric::test_log_likelihood) {
      score = test_log_likelihood_per_event(fit.model, events,
                                            static_cast<std::size_t>(n_train));
    } else {
      AucConfig auc_cfg;
      auc_cfg.seed = base_cfg.seed;
      score = dynamic_link_prediction_auc(fit.model, events,
                                          static_cast<std::size_t>(n_train), auc_cfg)
                  .mean;
    }
    res.scores.push_back(score);
    if (!have_best || score > best_score || (score == best_score && k < res.k)) {
      have_best = true;
      best_score = score;
      res.k = k;
    }
  }
  return res;
}

}  // namespace mulch
