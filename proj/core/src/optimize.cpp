#include "mulch/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace mulch {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void clamp_to_lower(std::vector<double>& x, const std::vector<double>& lower) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(x[i], lower[i]);
}

bool at_lower(double xi, double li) { return xi - li <= 1e-12 * (1.0 + std::abs(li)); }

// Infinity norm of the projected gradient: at the lower bound only the
// inward-pointing (negative) component counts as unrealized descent.
double projected_grad_norm(const std::vector<double>& x, const std::vector<double>& g,
                           const std::vector<double>& lower) {
  double nrm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gi = at_lower(x[i], lower[i]) ? std::min(g[i], 0.0) : g[i];
    nrm = std::max(nrm, std::abs(gi));
  }
  return nrm;
}

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

}  // namespace

LbfgsResult minimize_bounded(const ObjectiveFn& f, std::vector<double> x0,
                             const std::vector<double>& lower, const LbfgsConfig& cfg) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("minimize_bounded: empty variable vector");
  if (lower.size() != n) throw std::invalid_argument("minimize_bounded: bound size mismatch");
  if (cfg.history < 1 || cfg.max_iterations < 0)
    throw std::invalid_argument("minimize_bounded: bad config");

  LbfgsResult res;
  clamp_to_lower(x0, lower);
  std::vector<double> x = std::move(x0);
  std::vector<double> g(n, 0.0);
  double fx = f(x, g);
  ++res.evaluations;
  if (!std::isfinite(fx)) throw std::runtime_error("minimize_bounded: objective not finite at start");

  std::vector<double> best_x = x;
  double best_f = fx;

  std::deque<Pair> mem;
  std::vector<double> d(n), q(n), x_new(n), g_new(n), step(n);
  std::vector<char> active(n);

  for (int it = 0; it < cfg.max_iterations; ++it) {
    res.projected_grad_norm = projected_grad_norm(x, g, lower);
    if (res.projected_grad_norm <= cfg.projected_grad_tol) {
      res.converged = true;
      break;
    }

    // Variables pinned at the bound with an outward-pushing gradient stay put
    // this iteration; the direction is built in the complementary subspace.
    for (std::size_t i = 0; i < n; ++i)
      active[i] = at_lower(x[i], lower[i]) && g[i] > 0.0 ? 1 : 0;

    for (std::size_t i = 0; i < n; ++i) q[i] = active[i] ? 0.0 : g[i];
    std::vector<double> alpha_coef(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
      const Pair& p = mem[k];
      const double a = p.rho * dot(p.s, q);
      alpha_coef[k] = a;
      for (std::size_t i = 0; i < n; ++i) q[i] -= a * p.y[i];
    }
    if (!mem.empty()) {
      const Pair& last = mem.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& qi : q) qi *= gamma;
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const Pair& p = mem[k];
      const double b = p.rho * dot(p.y, q);
      for (std::size_t i = 0; i < n; ++i) q[i] += (alpha_coef[k] - b) * p.s[i];
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = active[i] ? 0.0 : -q[i];

    if (dot(g, d) >= 0.0) {  // not a descent direction; fall back to steepest descent
      for (std::size_t i = 0; i < n; ++i) d[i] = active[i] ? 0.0 : -g[i];
      if (dot(g, d) >= 0.0) break;  // fully pinned, nothing to do
    }

    // Backtracking along the projection arc x(t) = max(x + t d, lower).
    double t = 1.0;
    bool accepted = false;
    double f_new = fx;
    for (int ls = 0; ls < cfg.max_line_search_steps && t >= cfg.min_step; ++ls, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = std::max(x[i] + t * d[i], lower[i]);
      for (std::size_t i = 0; i < n; ++i) step[i] = x_new[i] - x[i];
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (!std::isfinite(f_new)) continue;
      if (f_new <= fx + cfg.armijo_c1 * dot(g, step)) {
        accepted = true;
        break;
      }
    }
    ++res.iterations;
    if (!accepted) break;  // no acceptable step; best iterate is returned below

    Pair p;
    p.s = step;
    p.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.y[i] = g_new[i] - g[i];
    const double sy = dot(p.s, p.y);
    const double ss = std::sqrt(dot(p.s, p.s));
    const double yy = std::sqrt(dot(p.y, p.y));
    if (sy > 1e-10 * ss * yy && sy > 0.0) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > cfg.history) mem.pop_front();
    }

    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }

  if (fx < best_f) {
    best_f = fx;
    best_x = x;
  }
  res.x = std::move(best_x);
  res.value = best_f;
  if (!res.converged) res.projected_grad_norm = projected_grad_norm(x, g, lower);
  return res;
}

}  // namespace mulch
