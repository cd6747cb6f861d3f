#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "meb/estimators.hpp"
#include "meb/types.hpp"

namespace meb {

/// Which model estimate the online bandit plugs into its decision rule.
enum class EstimatorKind { weighted, naive, rls };

/// State of the measurement-error-adjusted bandit. Warm-up rounds explore
/// uniformly; afterwards the policy is greedy on the current estimates with
/// a minimum selection probability p0^(t) per action. Estimates refresh at
/// the scheduled update times from the full history, warm-up included.
struct MebState {
  ExplorationSchedule schedule;
  ReferencePolicySchedule ref_policy;
  EstimatorKind estimator = EstimatorKind::weighted;
  double rls_lambda = 1.0;
  SolveOptions solve_opts;

  SufficientStats stats;
  PlainStats plain_stats;
  std::vector<Eigen::VectorXd> theta;  // zero vectors until first learned
  std::vector<bool> learned;
  std::int64_t round = 0;  // last absorbed round index
  std::int64_t singular_fallbacks = 0;

  static MebState create(int dim, int num_actions, ExplorationSchedule schedule,
                         ReferencePolicySchedule ref_policy,
                         EstimatorKind estimator = EstimatorKind::weighted,
                         double rls_lambda = 1.0);

  int dim() const { return stats.dim(); }
  int num_actions() const { return stats.num_actions(); }
  bool all_learned() const;
};

/// Action distribution for round state.round + 1 given the noisy context.
PolicyDistribution meb_decide(const MebState& state, const Eigen::VectorXd& noisy_context);

/// Two-action specialization of the decision rule; must agree with
/// meb_decide whenever K = 2.
PolicyDistribution meb_decide_binary(const MebState& state,
                                     const Eigen::VectorXd& noisy_context);

/// Absorbs the round and, when the round index is an update time,
/// re-estimates every action's parameters. A singular design keeps the
/// previous estimate and bumps singular_fallbacks.
MebState meb_update(MebState state, const ObservedRound& round);

/// Thompson sampling with per-action normal posteriors over the reward
/// parameters (prior N(0, prior_var I), posterior covariance
/// reward_var * V^-1).
struct TsState {
  double prior_var = 1.0;   // l
  double reward_var = 1.0;  // rho
  std::vector<Eigen::MatrixXd> gram;  // V_a = l I + sum 1{a} x~ x~^T
  std::vector<Eigen::VectorXd> xr;    // b_a
  std::vector<Eigen::VectorXd> mean;  // mu_a = V_a^-1 b_a
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;

  static TsState create(int dim, int num_actions, double prior_var, double reward_var);

  int num_actions() const { return static_cast<int>(gram.size()); }
  Eigen::MatrixXd posterior_cov(int action) const;  // reward_var * V_a^-1
};

/// Samples one parameter vector per action from the posteriors, plays the
/// argmax of the sampled scores through the p0-clipped distribution.
PolicyDistribution ts_decide(const TsState& state, const Eigen::VectorXd& noisy_context,
                             double p0, std::mt19937_64& rng);

/// Rank-update of the taken action's gram/xr; other actions are untouched.
TsState ts_update(TsState state, const ObservedRound& round);

/// Linear UCB on the noisy contexts.
struct UcbState {
  double regularizer = 1.0;   // l
  double bonus_scale = 1.0;   // C
  std::vector<Eigen::MatrixXd> gram;  // V_a
  std::vector<Eigen::VectorXd> xr;    // b_a
  std::vector<Eigen::VectorXd> mean;  // V_a^-1 b_a
  std::vector<Eigen::LLT<Eigen::MatrixXd>> chol;

  static UcbState create(int dim, int num_actions, double regularizer, double bonus_scale);

  int num_actions() const { return static_cast<int>(gram.size()); }
};

/// Plays the argmax of <mean_a, x~> + C sqrt(x~^T V_a^-1 x~) through the
/// p0-clipped distribution. Ties go to the lowest action index.
PolicyDistribution ucb_decide(const UcbState& state, const Eigen::VectorXd& noisy_context,
                              double p0);

UcbState ucb_update(UcbState state, const ObservedRound& round);

}  // namespace meb
