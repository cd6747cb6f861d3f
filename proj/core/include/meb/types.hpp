#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "meb/errors.hpp"

namespace meb {

/// Ground-truth linear reward parameters, one vector per action.
/// Held by environments and by the evaluation layer; never shown to policies.
class RewardModel {
 public:
  RewardModel() = default;
  explicit RewardModel(std::vector<Eigen::VectorXd> thetas);

  int dim() const { return thetas_.empty() ? 0 : static_cast<int>(thetas_[0].size()); }
  int num_actions() const { return static_cast<int>(thetas_.size()); }
  const Eigen::VectorXd& theta(int action) const { return thetas_.at(action); }
  const std::vector<Eigen::VectorXd>& thetas() const { return thetas_; }

  /// max_a ||theta_a||_2, the realized parameter-norm bound.
  double max_norm() const;

 private:
  std::vector<Eigen::VectorXd> thetas_;
};

/// One logged interaction: what the agent saw, did, and received.
struct ObservedRound {
  Eigen::VectorXd noisy_context;  // x-tilde
  int action = 0;
  double reward = 0.0;
  double propensity = 1.0;        // probability the executed policy gave the taken action
  Eigen::MatrixXd error_cov;      // context-error covariance (known or estimated)
  std::int64_t round_index = 1;
};

/// Ordered log of rounds with a fixed context dimension and action count.
struct History {
  int dim = 0;
  int num_actions = 2;
  std::vector<ObservedRound> rounds;

  std::int64_t size() const { return static_cast<std::int64_t>(rounds.size()); }
  void append(ObservedRound round);
};

/// Checks every History invariant: indices strictly increasing from 1,
/// consistent dimensions, propensities in (0,1], symmetric PSD error
/// covariances. Error messages name the offending round index.
void validate_history(const History& history);

/// Largest observed context norm. The unit-norm scaling assumption is the
/// environments' job (via a fixed context rescaling recorded in run
/// metadata); this diagnostic makes it checkable without rejecting rounds.
double max_context_norm(const History& history);

/// Probability vector over the K actions emitted by a policy each round.
class PolicyDistribution {
 public:
  /// Rejects negative entries and vectors whose sum deviates from 1 by
  /// more than 1e-12.
  explicit PolicyDistribution(Eigen::VectorXd probs);

  int num_actions() const { return static_cast<int>(probs_.size()); }
  double prob(int action) const { return probs_(action); }
  const Eigen::VectorXd& probs() const { return probs_; }
  double min_prob() const { return probs_.minCoeff(); }

  /// Inverse-CDF sample using one uniform draw.
  int sample(std::mt19937_64& rng) const;

  /// Point mass at `action`.
  static PolicyDistribution point_mass(int num_actions, int action);
  static PolicyDistribution uniform(int num_actions);

 private:
  Eigen::VectorXd probs_;
};

/// Pre-specified reference action distribution pi^nd used by the
/// importance-weighted estimator. By construction it is a function of the
/// round index and action only, never of observed data.
class ReferencePolicySchedule {
 public:
  using ProbFn = std::function<double(std::int64_t t, int action)>;

  ReferencePolicySchedule(int num_actions, ProbFn fn)
      : num_actions_(num_actions), fn_(std::move(fn)) {}

  double probs_at(std::int64_t t, int action) const { return fn_(t, action); }
  int num_actions() const { return num_actions_; }

  /// The default choice: 1/K for every round and action.
  static ReferencePolicySchedule uniform(int num_actions);

 private:
  int num_actions_;
  ProbFn fn_;
};

/// Which rounds trigger a model re-estimate.
struct UpdateTimes {
  bool every_round = true;
  std::vector<std::int64_t> times;  // sorted, used when !every_round

  bool contains(std::int64_t t) const;

  static UpdateTimes every() { return {}; }
  static UpdateTimes at(std::vector<std::int64_t> ts);
  /// {base^1, base^2, ...} up to horizon.
  static UpdateTimes geometric(std::int64_t base, std::int64_t horizon);
  /// {period, 2*period, ...} up to horizon.
  static UpdateTimes periodic(std::int64_t period, std::int64_t horizon);
};

/// Warm-up length, minimum selection probability sequence p0^(t), and the
/// model-update times.
struct ExplorationSchedule {
  std::int64_t warmup_len = 0;                       // T0
  std::function<double(std::int64_t)> min_prob;      // p0^(t) in (0, 1/K]
  UpdateTimes update_times;

  double min_prob_at(std::int64_t t) const { return min_prob(t); }

  /// T0 = ceil(2 d T^(2/3)), p0^(t) = min(1/K, t^(-1/3)).
  static ExplorationSchedule standard_setting(int dim, std::int64_t horizon,
                                              int num_actions = 2);
  /// T0 = ceil(2 d sqrt(T)), constant p0.
  static ExplorationSchedule clipped_setting(int dim, std::int64_t horizon, double p0);
};

/// Distribution that plays `best_action` with probability 1-(K-1)p0 and
/// every other action with probability p0.
PolicyDistribution clipped_distribution(int num_actions, int best_action, double p0);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax_lowest(const Eigen::VectorXd& values);

}  // namespace meb
