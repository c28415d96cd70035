#pragma once

// Box-constrained (lower bounds only) quasi-Newton minimizer: L-BFGS search
// directions restricted to the free variables, Armijo backtracking along the
// projection arc. Fits the small smooth problems this library produces.

#include <functional>
#include <vector>

namespace mulch {

// Evaluates the objective and writes the gradient (same length as x).
using ObjectiveFn = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct LbfgsConfig {
  int max_iterations = 500;
  int history = 8;
  double projected_grad_tol = 1e-6;  // infinity norm
  double armijo_c1 = 1e-4;
  int max_line_search_steps = 50;
  double min_step = 1e-16;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double projected_grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Minimizes f over { x : x_i >= lower_i }. Returns the best iterate seen; the
// objective value at the returned point never exceeds the value at x0.
[[nodiscard]] LbfgsResult minimize_bounded(const ObjectiveFn& f, std::vector<double> x0,
                                           const std::vector<double>& lower,
                                           const LbfgsConfig& cfg = {});

}  // namespace mulch
