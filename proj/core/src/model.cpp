#include "mulch/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mulch {

const char* excitation_name(ExcitationType t) {
  switch (t) {
    case ExcitationType::self: return "self";
    case ExcitationType::reciprocal: return "recip";
    case ExcitationType::turn_continuation: return "turn";
    case ExcitationType::generalized_reciprocity: return "gen_recip";
    case ExcitationType::allied_continuation: return "allied_cont";
    case ExcitationType::allied_reciprocity: return "allied_recip";
  }
  throw std::invalid_argument("unknown excitation type");
}

void validate(const MulchModel& m) {
  if (m.k <= 0) throw std::invalid_argument("model: K must be positive");
  if (m.betas.empty()) throw std::invalid_argument("model: at least one decay rate required");
  for (double b : m.betas)
    if (!(b > 0.0)) throw std::invalid_argument("model: decay rates must be positive");
  if (m.params.size() != static_cast<std::size_t>(m.k) * m.k)
    throw std::invalid_argument("model: parameter grid must have K*K entries");
  for (const BlockPairParams& p : m.params) {
    if (p.mu < 0.0) throw std::invalid_argument("model: negative base rate");
    for (double a : p.alpha)
      if (a < 0.0) throw std::invalid_argument("model: negative excitation jump");
    if (p.c.size() != m.betas.size())
      throw std::invalid_argument("model: kernel weight count must match decay count");
    double sum = 0.0;
    for (double cq : p.c) {
      if (cq < 0.0 || cq > 1.0) throw std::invalid_argument("model: kernel weight outside [0,1]");
      sum += cq;
    }
    if (std::abs(sum - 1.0) > 1e-8)
      throw std::invalid_argument("model: kernel weights must sum to 1");
  }
  if (m.membership.num_blocks != m.k)
    throw std::invalid_argument("model: membership block count must equal K");
  validate(m.membership);
}

std::optional<ExcitationMatch> excitation_selector(int src_sender, int src_receiver,
                                                   int dst_sender, int dst_receiver,
                                                   const Membership& z) {
  const int x = src_sender, y = src_receiver, i = dst_sender, j = dst_receiver;
  if (x == y || i == j) throw std::invalid_argument("excitation_selector: self-loop pair");
  const auto block = [&z](int node) { return z.labels[static_cast<std::size_t>(node)]; };

  std::optional<ExcitationType> type;
  if (i == x && j == y) {
    type = ExcitationType::self;
  } else if (i == y && j == x) {
    type = ExcitationType::reciprocal;
  } else if (i == x && j != y && block(j) == block(y)) {
    type = ExcitationType::turn_continuation;
  } else if (i == y && j != x && block(j) == block(x)) {
    type = ExcitationType::generalized_reciprocity;
  } else if (j == y && i != x && block(i) == block(x)) {
    type = ExcitationType::allied_continuation;
  } else if (j == x && i != y && block(i) == block(y)) {
    type = ExcitationType::allied_reciprocity;
  }
  if (!type) return std::nullopt;
  return ExcitationMatch{*type, block(i), block(j)};
}

double kernel_value(const std::vector<double>& c, const std::vector<double>& betas, double dt) {
  if (dt < 0.0) throw std::invalid_argument("kernel_value: negative time difference");
  if (c.size() != betas.size())
    throw std::invalid_argument("kernel_value: weight and decay counts differ");
  double v = 0.0;
  for (std::size_t q = 0; q < c.size(); ++q) v += c[q] * betas[q] * std::exp(-betas[q] * dt);
  return v;
}

double intensity(int dst_sender, int dst_receiver, double t, const EventStream& history,
                 const MulchModel& model) {
  const int a = model.membership.labels[static_cast<std::size_t>(dst_sender)];
  const int b = model.membership.labels[static_cast<std::size_t>(dst_receiver)];
  double lambda = model.block_pair(a, b).mu;
  for (const Event& e : history.events) {
    if (e.time >= t) break;  // left limit: strictly earlier events only
    const auto match =
        excitation_selector(e.sender, e.receiver, dst_sender, dst_receiver, model.membership);
    if (!match) continue;
    const BlockPairParams& p = model.block_pair(match->block_a, match->block_b);
    lambda += p.alpha_of(match->type) * kernel_value(p.c, model.betas, t - e.time);
  }
  return lambda;
}

DecayedState::DecayedState(const MulchModel& model) : model_(&model) {
  validate(model);
  n_ = static_cast<int>(model.membership.labels.size());
  q_ = model.betas.size();
  sums_.assign(static_cast<std::size_t>(n_) * n_ * q_, 0.0);
  decayed_at_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
  members_ = block_members(model.membership);
}

void DecayedState::bump(int s, int r, double t, double jump) {
  if (jump == 0.0) return;
  const std::size_t d = dim(s, r);
  double* row = &sums_[d * q_];
  const double dt = t - decayed_at_[d];
  for (std::size_t q = 0; q < q_; ++q) row[q] = row[q] * std::exp(-model_->betas[q] * dt) + jump;
  decayed_at_[d] = t;
}

void DecayedState::apply(const Event& e) {
  if (e.time < last_time_) throw std::invalid_argument("decayed state: events applied out of order");
  const int x = e.sender, y = e.receiver;
  const Membership& z = model_->membership;
  const int bx = z.labels[static_cast<std::size_t>(x)];
  const int by = z.labels[static_cast<std::size_t>(y)];

  const auto alpha = [this](int a, int b, ExcitationType t) {
    return model_->block_pair(a, b).alpha_of(t);
  };
  bump(x, y, e.time, alpha(bx, by, ExcitationType::self));
  bump(y, x, e.time, alpha(by, bx, ExcitationType::reciprocal));
  for (int j : members_[by]) {
    if (j == x || j == y) continue;
    bump(x, j, e.time, alpha(bx, by, ExcitationType::turn_continuation));
    bump(j, x, e.time, alpha(by, bx, ExcitationType::allied_reciprocity));
  }
  for (int j : members_[bx]) {
    if (j == x || j == y) continue;
    bump(y, j, e.time, alpha(by, bx, ExcitationType::generalized_reciprocity));
    bump(j, y, e.time, alpha(bx, by, ExcitationType::allied_continuation));
  }
  last_time_ = e.time;
}

double DecayedState::intensity_at(int sender, int receiver, double t) const {
  if (t < last_time_) throw std::invalid_argument("decayed state: query before last applied event");
  const Membership& z = model_->membership;
  const BlockPairParams& p = model_->block_pair(z.labels[static_cast<std::size_t>(sender)],
                                                z.labels[static_cast<std::size_t>(receiver)]);
  const std::size_t d = dim(sender, receiver);
  const double* row = &sums_[d * q_];
  const double dt = t - decayed_at_[d];
  double lambda = p.mu;
  for (std::size_t q = 0; q < q_; ++q)
    lambda += p.c[q] * model_->betas[q] * row[q] * std::exp(-model_->betas[q] * dt);
  return lambda;
}

double DecayedState::integrated_intensity(int sender, int receiver, double t0, double t1) const {
  if (t0 > t1) throw std::invalid_argument("decayed state: reversed integration interval");
  if (t0 < last_time_)
    throw std::invalid_argument("decayed state: interval starts before last applied event");
  const Membership& z = model_->membership;
  const BlockPairParams& p = model_->block_pair(z.labels[static_cast<std::size_t>(sender)],
                                                z.labels[static_cast<std::size_t>(receiver)]);
  const std::size_t d = dim(sender, receiver);
  const double* row = &sums_[d * q_];
  const double tau = decayed_at_[d];
  double total = p.mu * (t1 - t0);
  for (std::size_t q = 0; q < q_; ++q) {
    const double beta = model_->betas[q];
    total += p.c[q] * row[q] * (std::exp(-beta * (t0 - tau)) - std::exp(-beta * (t1 - tau)));
  }
  return total;
}

}  // namespace mulch
