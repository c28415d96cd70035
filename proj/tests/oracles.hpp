#pragma once

// Independent reference implementations used by the unit and acceptance
// suites: direct-summation and quadrature likelihoods built on a literal
// transcription of the six excitation patterns, finite-difference gradients,
// explicitly assembled branching matrices, and a cubic-time motif counter.
// Everything here favors obviousness over speed.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "mulch/events.hpp"
#include "mulch/model.hpp"
#include "mulch/motifs.hpp"
#include "mulch/rng.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature.

template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol = 1e-10) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// ---------------------------------------------------------------------------
// Literal transcription of the six excitation patterns. Returns the index in
// canonical order {self, reciprocal, turn continuation, generalized
// reciprocity, allied continuation, allied reciprocity} or nothing.

inline std::optional<int> literal_pattern(int x, int y, int i, int j,
                                          const std::vector<int>& z) {
  if (i == x && j == y) return 0;
  if (i == y && j == x) return 1;
  if (i == x && j != y && z[j] == z[y]) return 2;
  if (i == y && j != x && z[j] == z[x]) return 3;
  if (j == y && i != x && z[i] == z[x]) return 4;
  if (j == x && i != y && z[i] == z[y]) return 5;
  return std::nullopt;
}

// Intensity of pair (i, j) at time t under candidate block-pair parameters,
// by direct summation over the history (strictly earlier events only).
// Kernel weights are treated as free nonnegative values.
inline double pair_intensity(const mulch::BlockPairParams& th, const std::vector<double>& betas,
                             const mulch::EventStream& s, const mulch::Membership& z, int i,
                             int j, double t) {
  double lam = th.mu;
  for (const auto& e : s.events) {
    if (!(e.time < t)) break;
    const auto p = literal_pattern(e.sender, e.receiver, i, j, z.labels);
    if (!p) continue;
    double k = 0.0;
    for (std::size_t q = 0; q < betas.size(); ++q) {
      k += th.c[q] * betas[q] * std::exp(-betas[q] * (t - e.time));
    }
    lam += th.alpha[static_cast<std::size_t>(*p)] * k;
  }
  return lam;
}

inline std::vector<std::pair<int, int>> block_pair_dims(const mulch::Membership& z, int a,
                                                        int b) {
  std::vector<std::pair<int, int>> dims;
  const int n = static_cast<int>(z.labels.size());
  for (int i = 0; i < n; ++i) {
    if (z.labels[i] != a) continue;
    for (int j = 0; j < n; ++j) {
      if (i == j || z.labels[j] != b) continue;
      dims.emplace_back(i, j);
    }
  }
  return dims;
}

// Log-likelihood of block pair (a, b) with every compensator term written as
// the per-event closed form (no recursion, no shared state).
inline double block_pair_ll_direct(const mulch::BlockPairParams& th,
                                   const std::vector<double>& betas,
                                   const mulch::EventStream& s, const mulch::Membership& z,
                                   int a, int b, double horizon) {
  double ll = 0.0;
  for (const auto& [i, j] : block_pair_dims(z, a, b)) {
    for (const auto& e : s.events) {
      if (e.sender == i && e.receiver == j) {
        ll += std::log(pair_intensity(th, betas, s, z, i, j, e.time));
      }
    }
    double comp = th.mu * horizon;
    for (const auto& e : s.events) {
      const auto p = literal_pattern(e.sender, e.receiver, i, j, z.labels);
      if (!p || e.time >= horizon) continue;
      double integ = 0.0;
      for (std::size_t q = 0; q < betas.size(); ++q) {
        integ += th.c[q] * (1.0 - std::exp(-betas[q] * (horizon - e.time)));
      }
      comp += th.alpha[static_cast<std::size_t>(*p)] * integ;
    }
    ll -= comp;
  }
  return ll;
}

// Same value with every compensator integral done by adaptive quadrature over
// the smooth segments between source events.
inline double block_pair_ll_quadrature(const mulch::BlockPairParams& th,
                                       const std::vector<double>& betas,
                                       const mulch::EventStream& s, const mulch::Membership& z,
                                       int a, int b, double horizon, double tol = 1e-10) {
  double ll = 0.0;
  for (const auto& [i, j] : block_pair_dims(z, a, b)) {
    for (const auto& e : s.events) {
      if (e.sender == i && e.receiver == j) {
        ll += std::log(pair_intensity(th, betas, s, z, i, j, e.time));
      }
    }
    std::vector<double> cuts{0.0, horizon};
    for (const auto& e : s.events) {
      if (e.time > 0.0 && e.time < horizon &&
          literal_pattern(e.sender, e.receiver, i, j, z.labels)) {
        cuts.push_back(e.time);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    const auto lam = [&](double t) { return pair_intensity(th, betas, s, z, i, j, t); };
    double comp = 0.0;
    for (std::size_t u = 0; u + 1 < cuts.size(); ++u) {
      comp += integrate(lam, cuts[u], cuts[u + 1], tol);
    }
    ll -= comp;
  }
  return ll;
}

// ---------------------------------------------------------------------------
// Central finite differences with a relative step.

template <typename F>
std::vector<double> fd_gradient(const F& f, std::vector<double> x, double rel_step = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double h = rel_step * std::max(1.0, std::abs(x[k]));
    const double orig = x[k];
    x[k] = orig + h;
    const double fp = f(x);
    x[k] = orig - h;
    const double fm = f(x);
    x[k] = orig;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Explicit branching matrix of a block-pair couple: dimensions are bp(a,b)
// followed by bp(b,a) (when b != a), entry (dst, src) = alpha of the
// receiving pair's block pair times the kernel mass sum(c).

struct CoupleMatrix {
  std::vector<std::pair<int, int>> dims;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd mu;
};

inline CoupleMatrix assemble_couple(const mulch::MulchModel& m, int a, int b) {
  CoupleMatrix out;
  out.dims = block_pair_dims(m.membership, a, b);
  if (b != a) {
    const auto rev = block_pair_dims(m.membership, b, a);
    out.dims.insert(out.dims.end(), rev.begin(), rev.end());
  }
  const auto d = static_cast<Eigen::Index>(out.dims.size());
  out.gamma = Eigen::MatrixXd::Zero(d, d);
  out.mu = Eigen::VectorXd::Zero(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const auto [i, j] = out.dims[static_cast<std::size_t>(r)];
    const auto& th = m.block_pair(m.membership.labels[i], m.membership.labels[j]);
    double mass = 0.0;
    for (double cq : th.c) mass += cq;
    out.mu(r) = th.mu;
    for (Eigen::Index col = 0; col < d; ++col) {
      const auto [x, y] = out.dims[static_cast<std::size_t>(col)];
      const auto match = mulch::excitation_selector(x, y, i, j, m.membership);
      if (match) {
        out.gamma(r, col) =
            th.alpha[static_cast<std::size_t>(match->type)] * mass;
      }
    }
  }
  return out;
}

inline double matrix_radius(const Eigen::MatrixXd& g) {
  if (g.rows() == 0) return 0.0;
  return g.eigenvalues().cwiseAbs().maxCoeff();
}

// Stationary rates (I - Gamma)^{-1} mu for the couple.
inline Eigen::VectorXd couple_rates(const CoupleMatrix& cm) {
  const auto d = cm.gamma.rows();
  return (Eigen::MatrixXd::Identity(d, d) - cm.gamma).partialPivLu().solve(cm.mu);
}

// ---------------------------------------------------------------------------
// Cubic-time motif reference counter with its own copy of the cell layout.

inline mulch::MotifMatrix brute_force_motifs(const mulch::EventStream& s, double delta) {
  static constexpr int kRow[6][2] = {{2, 1}, {1, 2}, {2, 0}, {0, 2}, {1, 0}, {0, 1}};
  static constexpr int kCol[6][2] = {{0, 1}, {1, 0}, {0, 2}, {2, 0}, {1, 2}, {2, 1}};
  mulch::MotifMatrix out;
  out.delta = delta;
  const auto& ev = s.events;
  const std::size_t m = ev.size();
  for (std::size_t i = 0; i < m; ++i) {
    if (ev[i].sender == ev[i].receiver) continue;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (ev[j].sender == ev[j].receiver) continue;
      for (std::size_t k = j + 1; k < m; ++k) {
        if (ev[k].sender == ev[k].receiver) continue;
        if (ev[k].time - ev[i].time > delta) break;
        std::vector<int> nodes{ev[i].sender, ev[i].receiver};
        const auto label = [&nodes](int v) {
          for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
            if (nodes[idx] == v) return static_cast<int>(idx);
          }
          nodes.push_back(v);
          return static_cast<int>(nodes.size()) - 1;
        };
        const int e2s = label(ev[j].sender);
        const int e2r = label(ev[j].receiver);
        const int e3s = label(ev[k].sender);
        const int e3r = label(ev[k].receiver);
        if (nodes.size() > 3) continue;
        int row = -1;
        int col = -1;
        for (int r = 0; r < 6; ++r) {
          if (kRow[r][0] == e2s && kRow[r][1] == e2r) row = r;
          if (kCol[r][0] == e3s && kCol[r][1] == e3r) col = r;
        }
        if (row >= 0 && col >= 0) ++out.at(row, col);
      }
    }
  }
  return out;
}

// Time-ordered triples within delta touching at most three distinct nodes
// (the mass that any 3-edge classification must account for).
inline std::int64_t count_small_triples(const mulch::EventStream& s, double delta) {
  const auto& ev = s.events;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    for (std::size_t j = i + 1; j < ev.size(); ++j) {
      for (std::size_t k = j + 1; k < ev.size(); ++k) {
        if (ev[k].time - ev[i].time > delta) break;
        std::vector<int> nodes;
        for (int v : {ev[i].sender, ev[i].receiver, ev[j].sender, ev[j].receiver, ev[k].sender,
                      ev[k].receiver}) {
          if (std::find(nodes.begin(), nodes.end(), v) == nodes.end()) nodes.push_back(v);
        }
        if (nodes.size() <= 3) ++total;
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Random fixtures.

inline mulch::EventStream random_stream(int n, int m, double horizon, std::mt19937_64& rng) {
  mulch::EventStream s;
  s.n_nodes = n;
  s.duration = horizon;
  std::vector<double> times(static_cast<std::size_t>(m));
  for (auto& t : times) t = mulch::uniform(rng, 0.0, horizon);
  std::sort(times.begin(), times.end());
  for (double t : times) {
    const int i = static_cast<int>(mulch::uniform_index(rng, static_cast<std::size_t>(n)));
    int j = static_cast<int>(mulch::uniform_index(rng, static_cast<std::size_t>(n - 1)));
    if (j >= i) ++j;
    s.events.push_back({i, j, t});
  }
  return s;
}

inline mulch::Membership random_membership(int n, int k, std::mt19937_64& rng) {
  mulch::Membership z;
  z.num_blocks = k;
  z.labels.resize(static_cast<std::size_t>(n));
  // every block nonempty, remainder uniform
  for (int i = 0; i < n; ++i) {
    z.labels[static_cast<std::size_t>(i)] =
        i < k ? i : static_cast<int>(mulch::uniform_index(rng, static_cast<std::size_t>(k)));
  }
  return z;
}

inline mulch::BlockPairParams random_params(std::size_t q, std::mt19937_64& rng,
                                            double alpha_scale = 0.15, bool simplex = false) {
  mulch::BlockPairParams p;
  p.mu = mulch::uniform(rng, 0.02, 0.1);
  for (auto& a : p.alpha) a = mulch::uniform(rng, 0.0, alpha_scale);
  p.c.resize(q);
  double sum = 0.0;
  for (auto& cq : p.c) {
    cq = mulch::uniform(rng, 0.1, 1.0);
    sum += cq;
  }
  if (simplex) {
    for (auto& cq : p.c) cq /= sum;
  }
  return p;
}

inline std::vector<double> random_betas(std::size_t q, std::mt19937_64& rng) {
  std::vector<double> betas(q);
  for (auto& b : betas) b = mulch::uniform(rng, 0.3, 3.0);
  return betas;
}

}  // namespace oracle
