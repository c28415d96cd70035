#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "mulch/eval.hpp"
#include "mulch/fit.hpp"
#include "mulch/rng.hpp"
#include "mulch/simulate.hpp"
#include "oracles.hpp"

using namespace mulch;

namespace {

MulchModel homogeneous_model(int n, double mu, double alpha_self) {
  MulchModel m;
  m.k = 1;
  m.betas = {1.0};
  m.params.assign(1, BlockPairParams{});
  m.params[0].mu = mu;
  m.params[0].alpha[static_cast<std::size_t>(ExcitationType::self)] = alpha_self;
  m.params[0].c = {1.0};
  m.membership.num_blocks = 1;
  m.membership.labels.assign(static_cast<std::size_t>(n), 0);
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("held-out likelihood has the Poisson closed form") {
  // homogeneous Poisson, n = 3 (6 pairs), mu = 0.1
  const auto m = homogeneous_model(3, 0.1, 0.0);
  EventStream s;
  s.n_nodes = 3;
  s.duration = 10.0;
  s.events = {{0, 1, 1.0}, {1, 2, 4.0}, {2, 0, 6.5}, {0, 2, 9.0}};

  SUBCASE("whole stream: n_train = 0") {
    const double full_ll = 4.0 * std::log(0.1) - 0.1 * 10.0 * 6.0;
    CHECK(test_log_likelihood_per_event(m, s, 0) ==
          doctest::Approx(full_ll / 4.0).epsilon(1e-12));
  }

  SUBCASE("split at 2: difference of horizons over test count") {
    // train horizon = time of the last train event
    const double full_ll = 4.0 * std::log(0.1) - 0.1 * 10.0 * 6.0;
    const double train_ll = 2.0 * std::log(0.1) - 0.1 * 4.0 * 6.0;
    CHECK(test_log_likelihood_per_event(m, s, 2) ==
          doctest::Approx((full_ll - train_ll) / 2.0).epsilon(1e-12));
  }

  SUBCASE("no test events throws") {
    CHECK_THROWS_AS(static_cast<void>(test_log_likelihood_per_event(m, s, 4)),
                    std::invalid_argument);
  }
}

TEST_CASE("held-out likelihood accepts nodes unseen in training") {
  // model built over 2 nodes; the full stream brings in node 2
  auto m = homogeneous_model(2, 0.1, 0.0);
  EventStream s;
  s.n_nodes = 3;
  s.duration = 10.0;
  s.events = {{0, 1, 1.0}, {1, 0, 3.0}, {2, 0, 7.0}};
  // the new node joins the only block and both terms run over all 6 ordered
  // pairs (the train slice keeps the full stream's node count)
  const double full_ll = 3.0 * std::log(0.1) - 0.1 * 10.0 * 6.0;
  const double train_ll = 2.0 * std::log(0.1) - 0.1 * 3.0 * 6.0;
  CHECK(test_log_likelihood_per_event(m, s, 2) ==
        doctest::Approx((full_ll - train_ll) / 1.0).epsilon(1e-12));
}

TEST_CASE("AUC of a homogeneous model is one half with zero spread") {
  const auto m = homogeneous_model(6, 0.1, 0.0);
  auto rng = make_rng(3);
  const auto s = oracle::random_stream(6, 80, 40.0, rng);
  AucConfig cfg;
  cfg.n_windows = 40;
  cfg.seed = 17;
  const auto res = dynamic_link_prediction_auc(m, s, 40, cfg);
  CHECK(res.windows_used > 0);
  // every pair gets the same score, so each window's midranked AUC is 1/2
  CHECK(res.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(res.stddev == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("AUC is deterministic in the config seed") {
  auto rng = make_rng(5);
  const auto s = oracle::random_stream(8, 120, 60.0, rng);
  MulchModel m = homogeneous_model(8, 0.05, 0.2);
  AucConfig cfg;
  cfg.n_windows = 30;
  cfg.seed = 21;
  const auto r1 = dynamic_link_prediction_auc(m, s, 60, cfg);
  const auto r2 = dynamic_link_prediction_auc(m, s, 60, cfg);
  CHECK(r1.mean == r2.mean);
  CHECK(r1.stddev == r2.stddev);
  CHECK(r1.windows_used == r2.windows_used);
}

TEST_CASE("ground-truth model beats chance on its own bursty draw") {
  SimConfig sim;
  sim.pi = {1.0};
  sim.betas = {2.0};
  sim.params.assign(1, BlockPairParams{});
  sim.params[0].mu = 0.02;
  sim.params[0].alpha[static_cast<std::size_t>(ExcitationType::self)] = 0.8;
  sim.params[0].c = {1.0};
  sim.duration = 150.0;
  sim.n_nodes = 8;
  sim.seed = 23;
  const auto data = generate_network(sim);
  REQUIRE(data.stream.events.size() > 100);

  MulchModel m;
  m.k = 1;
  m.betas = sim.betas;
  m.params = sim.params;
  m.membership = data.membership;

  AucConfig cfg;
  cfg.n_windows = 60;
  cfg.seed = 29;
  const std::size_t n_train = data.stream.events.size() / 2;
  const auto res = dynamic_link_prediction_auc(m, data.stream, n_train, cfg);
  REQUIRE(res.windows_used >= 30);
  const double se = res.stddev / std::sqrt(static_cast<double>(res.windows_used));
  CHECK(res.mean > 0.5 + 5.0 * se);
  CHECK(res.mean > 0.55);
}

TEST_CASE("expected counts: zero excitation gives mu T") {
  auto m = homogeneous_model(4, 0.07, 0.0);
  const auto counts = expected_count_matrix(m, 50.0);
  REQUIRE(counts.n == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double want = i == j ? 0.0 : 0.07 * 50.0;
      CHECK(counts.at(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("expected counts: self excitation scales by the branching factor") {
  const auto m = homogeneous_model(5, 0.1, 0.3);
  const auto counts = expected_count_matrix(m, 80.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j)
        CHECK(counts.at(i, j) == doctest::Approx(0.1 * 80.0 / 0.7).epsilon(1e-12));
}

TEST_CASE("expected counts match the explicit stationary solve") {
  auto rng = make_rng(37);
  for (int trial = 0; trial < 6; ++trial) {
    const int k = 3, n = 9;
    MulchModel m;
    m.k = k;
    m.betas = oracle::random_betas(2, rng);
    m.params.resize(static_cast<std::size_t>(k) * k);
    for (auto& p : m.params) p = oracle::random_params(2, rng, 0.1, true);
    m.membership = oracle::random_membership(n, k, rng);

    const double horizon = 30.0;
    const auto counts = expected_count_matrix(m, horizon);

    for (int a = 0; a < k; ++a) {
      for (int b = a; b < k; ++b) {
        const auto cm = oracle::assemble_couple(m, a, b);
        if (cm.dims.empty()) continue;
        const Eigen::VectorXd rates = oracle::couple_rates(cm);
        for (std::size_t d = 0; d < cm.dims.size(); ++d) {
          const auto [i, j] = cm.dims[d];
          CHECK(counts.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ==
                doctest::Approx(rates(static_cast<Eigen::Index>(d)) * horizon)
                    .epsilon(1e-9));
        }
      }
    }

    // block-constant within every ordered block pair
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        for (int i2 = 0; i2 < n; ++i2)
          for (int j2 = 0; j2 < n; ++j2) {
            if (i2 == j2) continue;
            if (m.membership.labels[static_cast<std::size_t>(i)] ==
                    m.membership.labels[static_cast<std::size_t>(i2)] &&
                m.membership.labels[static_cast<std::size_t>(j)] ==
                    m.membership.labels[static_cast<std::size_t>(j2)]) {
              CHECK(counts.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ==
                    doctest::Approx(counts.at(static_cast<std::size_t>(i2),
                                              static_cast<std::size_t>(j2)))
                        .epsilon(1e-12));
            }
          }
      }
  }
}

TEST_CASE("expected counts refuse non-stationary models") {
  const auto m = homogeneous_model(4, 0.1, 1.5);
  CHECK_THROWS_AS(static_cast<void>(expected_count_matrix(m, 10.0)), std::runtime_error);
}

TEST_CASE("empirical couple counts agree with the prediction in aggregate") {
  SimConfig sim;
  sim.pi = {0.5, 0.5};
  sim.betas = {1.0};
  sim.params.assign(4, BlockPairParams{});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      auto& p = sim.params[static_cast<std::size_t>(a) * 2 + b];
      p.mu = 0.05 + 0.03 * a + 0.02 * b;
      p.alpha[static_cast<std::size_t>(ExcitationType::self)] = 0.25;
      p.alpha[static_cast<std::size_t>(ExcitationType::reciprocal)] = 0.15;
      p.c = {1.0};
    }
  sim.duration = 40.0;
  sim.n_nodes = 10;
  sim.membership_override = std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};

  MulchModel m;
  m.k = 2;
  m.betas = sim.betas;
  m.params = sim.params;
  m.membership.num_blocks = 2;
  m.membership.labels = *sim.membership_override;
  const auto predicted = expected_count_matrix(m, sim.duration);

  double predicted_total = 0.0;
  for (double v : predicted.data) predicted_total += v;

  const int runs = 60;
  double observed_total = 0.0;
  std::vector<double> per_run(runs);
  for (int r = 0; r < runs; ++r) {
    sim.seed = 400 + static_cast<std::uint64_t>(r);
    const auto count = static_cast<double>(generate_network(sim).stream.events.size());
    per_run[static_cast<std::size_t>(r)] = count;
    observed_total += count;
  }
  const double mean = observed_total / runs;
  double var = 0.0;
  for (double v : per_run) var += (v - mean) * (v - mean);
  var /= runs - 1;
  const double se = std::sqrt(var / runs);
  CHECK(std::abs(mean - predicted_total) < 4.0 * se);
}

TEST_SUITE_END();
