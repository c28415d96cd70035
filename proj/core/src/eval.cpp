#include "mulch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "branching.hpp"
#include "mulch/fit.hpp"
#include "mulch/rng.hpp"

namespace mulch {
namespace {

constexpr std::uint64_t kAucStream = 20'000;

// Extends the model's membership over unseen trailing nodes (largest block)
// and checks it covers the stream.
MulchModel cover_stream(const MulchModel& model, const EventStream& full) {
  MulchModel m = model;
  if (m.membership.labels.size() < full.n_nodes)
    m.membership = assign_new_nodes(m.membership, full.n_nodes);
  else if (m.membership.labels.size() > full.n_nodes)
    throw std::invalid_argument("eval: membership covers more nodes than the stream");
  return m;
}

// Mann-Whitney AUC with midranks for tied scores. Entries are (score, label).
double mann_whitney_auc(std::vector<std::pair<double, int>>& scored) {
  std::sort(scored.begin(), scored.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  const std::size_t m = scored.size();
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j < m && scored[j].first == scored[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based average rank
    for (std::size_t t = i; t < j; ++t) {
      if (scored[t].second != 0) {
        rank_sum_pos += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = m - n_pos;
  return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

double test_log_likelihood_per_event(const MulchModel& model, const EventStream& full,
                                     std::size_t n_train) {
  validate(full);
  if (n_train >= full.events.size())
    throw std::invalid_argument("test_log_likelihood_per_event: no test events after n_train");
  const MulchModel m = cover_stream(model, full);
  const std::size_t l_test = full.events.size() - n_train;

  const double ll_full = full_log_likelihood(m, full, full.duration);
  double ll_train = 0.0;
  if (n_train > 0) {
    const TrainTestSplit split = split_train_test(full, n_train);
    ll_train = full_log_likelihood(m, split.train, split.train.duration);
  }
  return (ll_full - ll_train) / static_cast<double>(l_test);
}

AucResult dynamic_link_prediction_auc(const MulchModel& model, const EventStream& full,
                                      std::size_t n_train, const AucConfig& cfg) {
  validate(full);
  if (n_train >= full.events.size())
    throw std::invalid_argument("dynamic_link_prediction_auc: no test events after n_train");
  if (cfg.n_windows < 1)
    throw std::invalid_argument("dynamic_link_prediction_auc: need at least one window");
  const MulchModel m = cover_stream(model, full);
  validate(m);

  const auto& ev = full.events;
  const double t_train = n_train > 0 ? ev[n_train - 1].time : 0.0;
  const double span = full.duration - t_train;
  if (!(span > 0.0))
    throw std::invalid_argument("dynamic_link_prediction_auc: empty test span");
  const double len = cfg.window_len > 0.0 ? cfg.window_len : span / 100.0;
  if (len > span)
    throw std::invalid_argument("dynamic_link_prediction_auc: window exceeds the test span");

  std::vector<double> times;
  times.reserve(ev.size());
  for (const Event& e : ev) times.push_back(e.time);
  const std::size_t n = full.n_nodes;
  const std::size_t total_pairs = n * (n - 1);

  // Draw window starts, redrawing degenerate (all-negative or all-positive)
  // windows; process them in time order with one shared excitation state.
  auto rng = make_rng(cfg.seed, kAucStream);
  std::vector<double> starts;
  int skipped = 0;
  for (int w = 0; w < cfg.n_windows; ++w) {
    bool ok = false;
    for (int attempt = 0; attempt <= cfg.max_redraws && !ok; ++attempt) {
      const double w0 = uniform(rng, t_train, full.duration - len);
      const auto lo = std::lower_bound(times.begin(), times.end(), w0);
      const auto hi = std::lower_bound(times.begin(), times.end(), w0 + len);
      if (lo == hi) continue;  // no positive pair
      std::unordered_set<std::int64_t> active;
      for (auto it = lo; it != hi; ++it) {
        const std::size_t idx = static_cast<std::size_t>(it - times.begin());
        active.insert(static_cast<std::int64_t>(ev[idx].sender) * static_cast<std::int64_t>(n) +
                      ev[idx].receiver);
      }
      if (active.size() == total_pairs) continue;  // no negative pair
      starts.push_back(w0);
      ok = true;
    }
    if (!ok) ++skipped;
  }
  if (skipped > 0)
    std::cerr << "dynamic_link_prediction_auc: skipped " << skipped
              << " windows with degenerate labels\n";
  std::sort(starts.begin(), starts.end());

  DecayedState state(m);
  std::size_t applied = 0;
  std::vector<char> label(n * n, 0);
  std::vector<std::pair<double, int>> scored;
  scored.reserve(total_pairs);
  std::vector<double> aucs;
  aucs.reserve(starts.size());
  for (const double w0 : starts) {
    while (applied < ev.size() && ev[applied].time < w0) {
      state.apply(ev[applied]);
      ++applied;
    }
    std::fill(label.begin(), label.end(), 0);
    const auto lo = std::lower_bound(times.begin(), times.end(), w0);
    const auto hi = std::lower_bound(times.begin(), times.end(), w0 + len);
    for (auto it = lo; it != hi; ++it) {
      const std::size_t idx = static_cast<std::size_t>(it - times.begin());
      label[static_cast<std::size_t>(ev[idx].sender) * n + ev[idx].receiver] = 1;
    }
    scored.clear();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double mass = state.integrated_intensity(static_cast<int>(i), static_cast<int>(j),
                                                       w0, w0 + len);
        scored.emplace_back(-std::expm1(-mass), label[i * n + j] != 0 ? 1 : 0);
      }
    }
    aucs.push_back(mann_whitney_auc(scored));
  }

  AucResult res;
  res.windows_used = static_cast<int>(aucs.size());
  res.windows_skipped = skipped;
  if (aucs.empty()) return res;
  double mean = 0.0;
  for (double a : aucs) mean += a;
  mean /= static_cast<double>(aucs.size());
  double ss = 0.0;
  for (double a : aucs) ss += (a - mean) * (a - mean);
  res.mean = mean;
  res.stddev = aucs.size() > 1 ? std::sqrt(ss / static_cast<double>(aucs.size() - 1)) : 0.0;
  return res;
}

DenseMatrix expected_count_matrix(const MulchModel& model, double duration) {
  validate(model);
  if (!(duration >= 0.0))
    throw std::invalid_argument("expected_count_matrix: negative duration");

  const int k = model.k;
  const auto sizes = detail::block_sizes_of(model.membership);
  std::vector<double> rate(static_cast<std::size_t>(k) * k, 0.0);
  double radius = 0.0;
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      const auto red = detail::reduce_couple(model, a, b, sizes);
      radius = std::max(radius, red.radius);
      rate[static_cast<std::size_t>(a) * k + b] = red.rate_ab;
      rate[static_cast<std::size_t>(b) * k + a] = red.rate_ba;
    }
  }
  if (radius >= 1.0) {
    std::ostringstream msg;
    msg << "expected_count_matrix: non-stationary model (branching spectral radius " << radius
        << " >= 1)";
    throw std::runtime_error(msg.str());
  }

  const std::size_t n = model.membership.labels.size();
  DenseMatrix out;
  out.n = n;
  out.data.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const int a = model.membership.labels[i];
      const int b = model.membership.labels[j];
      out.at(i, j) = rate[static_cast<std::size_t>(a) * k + b] * duration;
    }
  }
  return out;
}

}  // namespace mulch
