#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "meb/linalg.hpp"
#include "meb/types.hpp"

namespace meb {

/// Running sums behind the importance-weighted measurement-error estimator.
///
/// For each action a the stats hold, over the absorbed rounds tau = 1..t in
/// order,
///   weighted_gram[a]   = sum_tau w_tau 1{a_tau=a} x~ x~^T
///   weighted_xr[a]     = sum_tau w_tau 1{a_tau=a} x~ r
///   weighted_errcov[a] = sum_tau ref(tau, a) Sigma_e_tau
/// with w_tau = ref(tau, a_tau) / propensity_tau. Sums are plain left-to-right
/// accumulations, so absorbing rounds one at a time is bit-identical to
/// absorbing them as a batch in the same order.
class SufficientStats {
 public:
  SufficientStats() = default;
  SufficientStats(int dim, int num_actions);

  void absorb(const ObservedRound& round, const ReferencePolicySchedule& ref_policy);

  int dim() const { return dim_; }
  int num_actions() const { return num_actions_; }
  std::int64_t count() const { return count_; }
  std::int64_t action_count(int action) const { return action_counts_.at(action); }
  const Eigen::MatrixXd& weighted_gram(int action) const { return gram_.at(action); }
  const Eigen::VectorXd& weighted_xr(int action) const { return xr_.at(action); }
  const Eigen::MatrixXd& weighted_errcov(int action) const { return errcov_.at(action); }

 private:
  int dim_ = 0;
  int num_actions_ = 0;
  std::int64_t count_ = 0;
  std::vector<std::int64_t> action_counts_;
  std::vector<Eigen::MatrixXd> gram_;
  std::vector<Eigen::VectorXd> xr_;
  std::vector<Eigen::MatrixXd> errcov_;
};

/// Functional form of SufficientStats::absorb.
SufficientStats absorb_round(SufficientStats stats, const ObservedRound& round,
                             const ReferencePolicySchedule& ref_policy);

/// Running sums for the plug-in baselines (ridge and the uncorrected
/// measurement-error estimator). centered_gram accumulates the per-round
/// difference x~ x~^T - Sigma_e so that incremental and batch evaluation of
/// the uncorrected estimator agree exactly.
class PlainStats {
 public:
  PlainStats() = default;
  PlainStats(int dim, int num_actions);

  void absorb(const ObservedRound& round);

  std::int64_t action_count(int action) const { return counts_.at(action); }
  const Eigen::MatrixXd& gram(int action) const { return gram_.at(action); }
  const Eigen::MatrixXd& centered_gram(int action) const { return centered_.at(action); }
  const Eigen::VectorXd& xr(int action) const { return xr_.at(action); }

 private:
  int dim_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<Eigen::MatrixXd> gram_;
  std::vector<Eigen::MatrixXd> centered_;
  std::vector<Eigen::VectorXd> xr_;
};

/// Per-action estimate with solver diagnostics.
struct ActionEstimate {
  Eigen::VectorXd theta;
  double condition_number = 1.0;
  double regularizer_used = 0.0;
};

/// Estimates for all actions plus solver diagnostics.
struct EstimatorReport {
  std::vector<Eigen::VectorXd> theta_hat;
  std::vector<double> condition_number;
  std::vector<double> regularizer_used;
};

/// Ridge regression on the noisy contexts:
///   (lambda I + sum 1{a} x~ x~^T)^-1 (sum 1{a} x~ r).
/// lambda = 0 is allowed and falls back to the conditioned solve.
Eigen::VectorXd rls_estimate(const History& history, int action, double lambda,
                             const SolveOptions& opts = {});

/// Measurement-error adjustment without importance weights:
///   (sum 1{a} (x~ x~^T - Sigma_e))^-1 (sum 1{a} x~ r).
/// Consistent only when the logging policy does not react to the noisy
/// context; kept as a baseline.
Eigen::VectorXd naive_me_estimate(const History& history, int action,
                                  const SolveOptions& opts = {});

/// The importance-weighted measurement-error estimator:
///   ( (1/t) sum w 1{a} x~ x~^T - (1/t) sum ref(tau,a) Sigma_e )^-1
///   ( (1/t) sum w 1{a} x~ r ),   w = ref(tau, a_tau) / propensity_tau.
Eigen::VectorXd weighted_me_estimate(const History& history, int action,
                                     const ReferencePolicySchedule& ref_policy,
                                     const SolveOptions& opts = {});

/// Same estimate computed from pre-accumulated stats.
ActionEstimate weighted_estimate_from_stats(const SufficientStats& stats, int action,
                                            const SolveOptions& opts = {});

/// Uncorrected estimate from pre-accumulated stats.
ActionEstimate naive_estimate_from_stats(const PlainStats& stats, int action,
                                         const SolveOptions& opts = {});

/// Ridge estimate from pre-accumulated stats.
ActionEstimate rls_estimate_from_stats(const PlainStats& stats, int action, double lambda,
                                       const SolveOptions& opts = {});

/// All-action report from stats.
EstimatorReport estimate_all(const SufficientStats& stats,
                             const ReferencePolicySchedule& ref_policy,
                             const SolveOptions& opts = {});

struct EstVarEstimate {
  Eigen::VectorXd theta;
  /// ||(1/t) sum ref(tau,a) (Sigma_hat_e - Sigma_e)||_2 when the true
  /// covariances are supplied.
  std::optional<double> delta_norm;
};

/// Plug-in variant for rounds that carry an *estimated* error covariance in
/// error_cov. Identical formula; optionally reports the operator norm of the
/// weighted covariance-estimation error Delta_t(a) against the true
/// covariances.
EstVarEstimate weighted_me_estimate_estvar(
    const History& history, int action, const ReferencePolicySchedule& ref_policy,
    const std::vector<Eigen::MatrixXd>* true_error_covs = nullptr,
    const SolveOptions& opts = {});

/// Empirical counterparts of the moment constants behind the estimator's
/// guarantees, measured on the scaled observations w = sqrt(d) x~:
/// nu_hat is the largest eigenvalue of the second-moment matrix, xi_hat the
/// worst directional fourth moment over sampled unit directions, and
/// lambda0_hat the smallest eigenvalue of the reference-weighted design,
/// minimized over actions. Reported for inspection only; nothing branches
/// on them.
struct MomentDiagnostics {
  double nu_hat = 0.0;
  double xi_hat = 0.0;
  double lambda0_hat = 0.0;
};

MomentDiagnostics moment_diagnostics(const History& history,
                                     const ReferencePolicySchedule& ref_policy,
                                     int sampled_directions = 64,
                                     std::uint64_t seed = 0);

using MomentFn = std::function<double(const Eigen::VectorXd& noisy_context, double reward)>;

/// Off-policy method-of-moments: per moment function f_j returns
///   (1/T) sum_t W_t f_j(x~_t, r_t),  W_t = 1{a_t = target} ref(t, a_t)/propensity_t.
/// An empty history yields zeros.
Eigen::VectorXd weighted_moments(const History& history, int target_action,
                                 const ReferencePolicySchedule& ref_policy,
                                 const std::vector<MomentFn>& moment_fns);

}  // namespace meb
