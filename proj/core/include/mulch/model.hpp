#pragma once

// Parameter containers, the six-way excitation selector, the exponential
// mixture kernel, and conditional intensity evaluation.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "mulch/events.hpp"

namespace mulch {

// The six ways an event (x,y) can raise another pair's intensity. Enumerator
// order is the canonical parameter order everywhere (vectors, JSON, fits).
enum class ExcitationType {
  self,                      // (x,y) -> (x,y)
  reciprocal,                // (x,y) -> (y,x)
  turn_continuation,         // (x,y) -> (x,j), j in y's block
  generalized_reciprocity,   // (x,y) -> (y,j), j in x's block
  allied_continuation,       // (x,y) -> (i,y), i in x's block
  allied_reciprocity,        // (x,y) -> (i,x), i in y's block
};

inline constexpr std::size_t kNumExcitationTypes = 6;

// Short names used in JSON artifacts: self, recip, turn, gen_recip,
// allied_cont, allied_recip.
[[nodiscard]] const char* excitation_name(ExcitationType t);

// Parameters of one ordered block pair: base rate, six excitation jumps, and
// the kernel mixture weights (on the simplex).
struct BlockPairParams {
  double mu = 0.0;
  std::array<double, kNumExcitationTypes> alpha{};
  std::vector<double> c;

  [[nodiscard]] double alpha_of(ExcitationType t) const {
    return alpha[static_cast<std::size_t>(t)];
  }
};

struct MulchModel {
  int k = 0;
  std::vector<double> betas;            // decay rates (1/time), shared across block pairs
  std::vector<BlockPairParams> params;  // k*k grid, row-major: params[a*k + b]
  Membership membership;

  [[nodiscard]] const BlockPairParams& block_pair(int a, int b) const {
    return params[static_cast<std::size_t>(a) * k + b];
  }
  [[nodiscard]] BlockPairParams& block_pair(int a, int b) {
    return params[static_cast<std::size_t>(a) * k + b];
  }
};

// Throws std::invalid_argument on structural violations (grid size, beta
// signs, kernel-weight simplex within 1e-8, membership labels).
void validate(const MulchModel& m);

struct ExcitationMatch {
  ExcitationType type;
  int block_a = 0;  // block of the receiving pair's sender
  int block_b = 0;  // block of the receiving pair's receiver
};

// Which pattern (if any) lets an event on src raise dst's intensity. The
// returned block pair is the RECEIVING pair's (z_i, z_j), which indexes both
// the alpha and the kernel weights to use. At most one pattern can match.
[[nodiscard]] std::optional<ExcitationMatch> excitation_selector(int src_sender, int src_receiver,
                                                                 int dst_sender, int dst_receiver,
                                                                 const Membership& z);

// Sum-of-exponentials kernel sum_q c_q beta_q e^{-beta_q dt}; integrates to 1
// over dt in [0, inf) when c is on the simplex.
[[nodiscard]] double kernel_value(const std::vector<double>& c, const std::vector<double>& betas,
                                  double dt);

// Conditional intensity of pair (dst_sender, dst_receiver) at time t given
// the history. Only events with time strictly below t contribute (left limit).
// Direct O(|history| * Q) summation.
[[nodiscard]] double intensity(int dst_sender, int dst_receiver, double t,
                               const EventStream& history, const MulchModel& model);

// Recursive per-(pair, q) excitation state: S_d^q(t) = sum over history
// events exciting d of alpha * e^{-beta_q (t - t_s)}, with the jump alpha
// folded in at event time. Events must be applied in nondecreasing time
// order; queries at t >= the last applied time.
class DecayedState {
 public:
  explicit DecayedState(const MulchModel& model);

  void apply(const Event& e);

  [[nodiscard]] double intensity_at(int sender, int receiver, double t) const;

  // Closed-form integral of the conditional intensity of (sender, receiver)
  // over [t0, t1], valid when no event later than t0 has been applied.
  [[nodiscard]] double integrated_intensity(int sender, int receiver, double t0, double t1) const;

  [[nodiscard]] double last_time() const { return last_time_; }

 private:
  [[nodiscard]] std::size_t dim(int s, int r) const {
    return static_cast<std::size_t>(s) * n_ + r;
  }
  void bump(int s, int r, double t, double jump);

  const MulchModel* model_;
  int n_ = 0;
  std::size_t q_ = 0;
  std::vector<double> sums_;       // n*n*q decayed jump sums
  std::vector<double> decayed_at_; // n*n last decay time per pair
  std::vector<std::vector<int>> members_;
  double last_time_ = 0.0;
};

}  // namespace mulch
