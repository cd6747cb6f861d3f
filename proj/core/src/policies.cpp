#include "meb/policies.hpp"

#include <cmath>
#include <string>

#include "meb/errors.hpp"

namespace meb {

namespace {

void check_p0(double p0, int num_actions) {
  if (!(p0 > 0.0) || p0 > 1.0 / static_cast<double>(num_actions)) {
    throw ConfigInvalid("p0 must lie in (0, 1/K]; got " + std::to_string(p0));
  }
}

// TS/UCB admit the degenerate p0 = 0 (greedy, no forced exploration).
void check_p0_allow_zero(double p0, int num_actions) {
  if (p0 < 0.0 || p0 > 1.0 / static_cast<double>(num_actions)) {
    throw ConfigInvalid("p0 must lie in [0, 1/K]; got " + std::to_string(p0));
  }
}

void check_context_dim(const Eigen::VectorXd& x, int dim) {
  if (static_cast<int>(x.size()) != dim) {
    throw DimensionMismatch("context dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dim));
  }
}

}  // namespace

MebState MebState::create(int dim, int num_actions, ExplorationSchedule schedule,
                          ReferencePolicySchedule ref_policy, EstimatorKind estimator,
                          double rls_lambda) {
  MebState s{std::move(schedule), std::move(ref_policy), estimator, rls_lambda,
             SolveOptions{},      SufficientStats(dim, num_actions),
             PlainStats(dim, num_actions), {}, {}, 0, 0};
  s.theta.assign(num_actions, Eigen::VectorXd::Zero(dim));
  s.learned.assign(num_actions, false);
  return s;
}

bool MebState::all_learned() const {
  for (bool b : learned) {
    if (!b) return false;
  }
  return true;
}

PolicyDistribution meb_decide(const MebState& state, const Eigen::VectorXd& noisy_context) {
  check_context_dim(noisy_context, state.dim());
  const std::int64_t t = state.round + 1;
  const int k = state.num_actions();
  const double p0 = state.schedule.min_prob_at(t);
  check_p0(p0, k);
  if (t <= state.schedule.warmup_len || !state.all_learned()) {
    return PolicyDistribution::uniform(k);
  }
  Eigen::VectorXd scores(k);
  for (int a = 0; a < k; ++a) scores(a) = state.theta[a].dot(noisy_context);
  return clipped_distribution(k, argmax_lowest(scores), p0);
}

PolicyDistribution meb_decide_binary(const MebState& state,
                                     const Eigen::VectorXd& noisy_context) {
  if (state.num_actions() != 2) {
    throw DimensionMismatch("binary decision path requires exactly two actions");
  }
  check_context_dim(noisy_context, state.dim());
  const std::int64_t t = state.round + 1;
  const double p0 = state.schedule.min_prob_at(t);
  check_p0(p0, 2);
  if (t <= state.schedule.warmup_len || !state.all_learned()) {
    return PolicyDistribution::uniform(2);
  }
  const double s0 = state.theta[0].dot(noisy_context);
  const double s1 = state.theta[1].dot(noisy_context);
  const int best = (s1 > s0) ? 1 : 0;
  return clipped_distribution(2, best, p0);
}

MebState meb_update(MebState state, const ObservedRound& round) {
  if (round.round_index != state.round + 1) {
    throw DimensionMismatch("expected round " + std::to_string(state.round + 1) +
                            ", got " + std::to_string(round.round_index));
  }
  state.stats.absorb(round, state.ref_policy);
  state.plain_stats.absorb(round);
  state.round = round.round_index;
  if (!state.schedule.update_times.contains(round.round_index)) return state;

  for (int a = 0; a < state.num_actions(); ++a) {
    try {
      ActionEstimate est;
      switch (state.estimator) {
        case EstimatorKind::weighted:
          est = weighted_estimate_from_stats(state.stats, a, state.solve_opts);
          break;
        case EstimatorKind::naive:
          est = naive_estimate_from_stats(state.plain_stats, a, state.solve_opts);
          break;
        case EstimatorKind::rls:
          est = rls_estimate_from_stats(state.plain_stats, a, state.rls_lambda,
                                        state.solve_opts);
          break;
      }
      state.theta[a] = std::move(est.theta);
      state.learned[a] = true;
    } catch (const SingularDesign&) {
      ++state.singular_fallbacks;
    } catch (const NoDataForAction&) {
      // nothing to learn from yet; stays at the previous value
    }
  }
  return state;
}

TsState TsState::create(int dim, int num_actions, double prior_var, double reward_var) {
  TsState s;
  s.prior_var = prior_var;
  s.reward_var = reward_var;
  s.gram.assign(num_actions, prior_var * Eigen::MatrixXd::Identity(dim, dim));
  s.xr.assign(num_actions, Eigen::VectorXd::Zero(dim));
  s.mean.assign(num_actions, Eigen::VectorXd::Zero(dim));
  s.chol.reserve(num_actions);
  for (int a = 0; a < num_actions; ++a) s.chol.emplace_back(s.gram[a]);
  return s;
}

Eigen::MatrixXd TsState::posterior_cov(int action) const {
  const int d = static_cast<int>(gram[action].rows());
  return reward_var * chol[action].solve(Eigen::MatrixXd::Identity(d, d));
}

PolicyDistribution ts_decide(const TsState& state, const Eigen::VectorXd& noisy_context,
                             double p0, std::mt19937_64& rng) {
  const int k = state.num_actions();
  check_p0_allow_zero(p0, k);
  check_context_dim(noisy_context, static_cast<int>(state.gram[0].rows()));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = std::sqrt(state.reward_var);
  Eigen::VectorXd scores(k);
  Eigen::VectorXd z(noisy_context.size());
  for (int a = 0; a < k; ++a) {
    for (int i = 0; i < z.size(); ++i) z(i) = normal(rng);
    // theta_draw = mu + sqrt(rho) L^-T z has covariance rho V^-1
    const Eigen::VectorXd draw =
        state.mean[a] +
        scale * state.chol[a].matrixU().solve(z);
    scores(a) = draw.dot(noisy_context);
  }
  return clipped_distribution(k, argmax_lowest(scores), p0);
}

TsState ts_update(TsState state, const ObservedRound& round) {
  check_context_dim(round.noisy_context, static_cast<int>(state.gram[0].rows()));
  const int a = round.action;
  const auto& x = round.noisy_context;
  state.gram[a] += x * x.transpose();
  state.xr[a] += round.reward * x;
  state.chol[a].compute(state.gram[a]);
  state.mean[a] = state.chol[a].solve(state.xr[a]);
  return state;
}

UcbState UcbState::create(int dim, int num_actions, double regularizer,
                          double bonus_scale) {
  UcbState s;
  s.regularizer = regularizer;
  s.bonus_scale = bonus_scale;
  s.gram.assign(num_actions, regularizer * Eigen::MatrixXd::Identity(dim, dim));
  s.xr.assign(num_actions, Eigen::VectorXd::Zero(dim));
  s.mean.assign(num_actions, Eigen::VectorXd::Zero(dim));
  s.chol.reserve(num_actions);
  for (int a = 0; a < num_actions; ++a) s.chol.emplace_back(s.gram[a]);
  return s;
}

PolicyDistribution ucb_decide(const UcbState& state, const Eigen::VectorXd& noisy_context,
                              double p0) {
  const int k = state.num_actions();
  check_p0_allow_zero(p0, k);
  check_context_dim(noisy_context, static_cast<int>(state.gram[0].rows()));
  Eigen::VectorXd scores(k);
  for (int a = 0; a < k; ++a) {
    const double width =
        std::sqrt(noisy_context.dot(state.chol[a].solve(noisy_context)));
    scores(a) = state.mean[a].dot(noisy_context) + state.bonus_scale * width;
  }
  return clipped_distribution(k, argmax_lowest(scores), p0);
}

UcbState ucb_update(UcbState state, const ObservedRound& round) {
  check_context_dim(round.noisy_context, static_cast<int>(state.gram[0].rows()));
  const int a = round.action;
  const auto& x = round.noisy_context;
  state.gram[a] += x * x.transpose();
  state.xr[a] += round.reward * x;
  state.chol[a].compute(state.gram[a]);
  state.mean[a] = state.chol[a].solve(state.xr[a]);
  return state;
}

}  // namespace meb
