#pragma once

// Predictive metrics (held-out log-likelihood, dynamic link-prediction AUC)
// and the closed-form expected-count matrix of a stationary model.

#include <cstdint>
#include <vector>

#include "mulch/events.hpp"
#include "mulch/model.hpp"

namespace mulch {

// Dense real n x n matrix, row-major, zero diagonal by construction here.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  [[nodiscard]] double& at(std::size_t i, std::size_t j) { return data[i * n + j]; }
};

// Mean log-likelihood per test event: [ll(full; T_full) - ll(train; T_train)]
// / l_test, so each test event is scored conditioned on everything before it.
// Nodes beyond the model's membership join the largest training block.
// n_train = 0 scores the whole stream (the train term is 0).
[[nodiscard]] double test_log_likelihood_per_event(const MulchModel& model,
                                                  const EventStream& full, std::size_t n_train);

struct AucConfig {
  int n_windows = 100;
  double window_len = 0.0;  // <= 0 selects (test span) / 100
  std::uint64_t seed = 0;
  int max_redraws = 50;  // per window, for all-positive / all-negative draws
};

struct AucResult {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over windows
  int windows_used = 0;
  int windows_skipped = 0;
};

// Dynamic link prediction over random windows in the test span (after event
// n_train): each ordered pair is scored by 1 - exp(-integral of its
// intensity over the window) conditioned on the history before the window,
// labeled by whether it has an event inside, and ranked into a
// ties-midranked AUC. Degenerate windows are redrawn, then skipped with a
// warning once cfg.max_redraws is exhausted.
[[nodiscard]] AucResult dynamic_link_prediction_auc(const MulchModel& model,
                                                    const EventStream& full, std::size_t n_train,
                                                    const AucConfig& cfg);

// Expected event counts E[N(T)]: per-couple stationary rates from the
// block-constant branching reduction, times T. Exactly block-constant.
// Throws for non-stationary models (radius included in the message).
[[nodiscard]] DenseMatrix expected_count_matrix(const MulchModel& model, double duration);

}  // namespace mulch
