#include "meb/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "meb/errors.hpp"

namespace meb {

namespace {

void check_round_dims(const ObservedRound& round, int dim, int num_actions) {
  if (static_cast<int>(round.noisy_context.size()) != dim) {
    throw DimensionMismatch("round " + std::to_string(round.round_index) +
                            " has context dimension " +
                            std::to_string(round.noisy_context.size()) + ", expected " +
                            std::to_string(dim));
  }
  if (round.action < 0 || round.action >= num_actions) {
    throw DimensionMismatch("round " + std::to_string(round.round_index) +
                            " action out of range");
  }
  if (round.error_cov.rows() != dim || round.error_cov.cols() != dim) {
    throw DimensionMismatch("round " + std::to_string(round.round_index) +
                            " error covariance shape mismatch");
  }
}

void check_propensity(const ObservedRound& round) {
  if (!(round.propensity > 0.0)) {
    throw NonPositivePropensity("round " + std::to_string(round.round_index) +
                                " has non-positive propensity");
  }
}

}  // namespace

SufficientStats::SufficientStats(int dim, int num_actions)
    : dim_(dim),
      num_actions_(num_actions),
      action_counts_(num_actions, 0),
      gram_(num_actions, Eigen::MatrixXd::Zero(dim, dim)),
      xr_(num_actions, Eigen::VectorXd::Zero(dim)),
      errcov_(num_actions, Eigen::MatrixXd::Zero(dim, dim)) {}

void SufficientStats::absorb(const ObservedRound& round,
                             const ReferencePolicySchedule& ref_policy) {
  check_round_dims(round, dim_, num_actions_);
  check_propensity(round);
  const double w = ref_policy.probs_at(round.round_index, round.action) / round.propensity;
  const auto& x = round.noisy_context;
  // evaluate the outer product before scaling so each entry rounds as
  // w * (x_i * x_j), the documented accumulation form
  const Eigen::MatrixXd outer = x * x.transpose();
  gram_[round.action] += w * outer;
  xr_[round.action] += (w * round.reward) * x;
  for (int a = 0; a < num_actions_; ++a) {
    errcov_[a] += ref_policy.probs_at(round.round_index, a) * round.error_cov;
  }
  ++action_counts_[round.action];
  ++count_;
}

SufficientStats absorb_round(SufficientStats stats, const ObservedRound& round,
                             const ReferencePolicySchedule& ref_policy) {
  stats.absorb(round, ref_policy);
  return stats;
}

PlainStats::PlainStats(int dim, int num_actions)
    : dim_(dim),
      counts_(num_actions, 0),
      gram_(num_actions, Eigen::MatrixXd::Zero(dim, dim)),
      centered_(num_actions, Eigen::MatrixXd::Zero(dim, dim)),
      xr_(num_actions, Eigen::VectorXd::Zero(dim)) {}

void PlainStats::absorb(const ObservedRound& round) {
  check_round_dims(round, dim_, static_cast<int>(counts_.size()));
  const auto& x = round.noisy_context;
  gram_[round.action] += x * x.transpose();
  centered_[round.action] += x * x.transpose() - round.error_cov;
  xr_[round.action] += round.reward * x;
  ++counts_[round.action];
}

Eigen::VectorXd rls_estimate(const History& history, int action, double lambda,
                             const SolveOptions& opts) {
  if (lambda < 0.0) throw ConfigInvalid("ridge parameter must be >= 0");
  const int d = history.dim;
  Eigen::MatrixXd gram =
      lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd xr = Eigen::VectorXd::Zero(d);
  for (const auto& round : history.rounds) {
    check_round_dims(round, d, history.num_actions);
    if (round.action != action) continue;
    const auto& x = round.noisy_context;
    gram += x * x.transpose();
    xr += round.reward * x;
  }
  return solve_symmetric(gram, xr, opts).x;
}

Eigen::VectorXd naive_me_estimate(const History& history, int action,
                                  const SolveOptions& opts) {
  PlainStats stats(history.dim, history.num_actions);
  for (const auto& round : history.rounds) stats.absorb(round);
  return naive_estimate_from_stats(stats, action, opts).theta;
}

Eigen::VectorXd weighted_me_estimate(const History& history, int action,
                                     const ReferencePolicySchedule& ref_policy,
                                     const SolveOptions& opts) {
  SufficientStats stats(history.dim, history.num_actions);
  for (const auto& round : history.rounds) stats.absorb(round, ref_policy);
  return weighted_estimate_from_stats(stats, action, opts).theta;
}

ActionEstimate weighted_estimate_from_stats(const SufficientStats& stats, int action,
                                            const SolveOptions& opts) {
  if (stats.action_count(action) == 0) {
    throw NoDataForAction("no rounds absorbed for action " + std::to_string(action));
  }
  const double t = static_cast<double>(stats.count());
  const Eigen::MatrixXd corrected =
      stats.weighted_gram(action) / t - stats.weighted_errcov(action) / t;
  const Eigen::VectorXd target = stats.weighted_xr(action) / t;
  const SymSolve solved = solve_symmetric(corrected, target, opts);
  return {solved.x, solved.condition_number, solved.regularizer};
}

ActionEstimate naive_estimate_from_stats(const PlainStats& stats, int action,
                                         const SolveOptions& opts) {
  if (stats.action_count(action) == 0) {
    throw NoDataForAction("no rounds absorbed for action " + std::to_string(action));
  }
  const SymSolve solved =
      solve_symmetric(stats.centered_gram(action), stats.xr(action), opts);
  return {solved.x, solved.condition_number, solved.regularizer};
}

ActionEstimate rls_estimate_from_stats(const PlainStats& stats, int action, double lambda,
                                       const SolveOptions& opts) {
  const Eigen::MatrixXd gram =
      lambda * Eigen::MatrixXd::Identity(stats.gram(action).rows(),
                                         stats.gram(action).cols()) +
      stats.gram(action);
  const SymSolve solved = solve_symmetric(gram, stats.xr(action), opts);
  return {solved.x, solved.condition_number, solved.regularizer};
}

EstimatorReport estimate_all(const SufficientStats& stats,
                             const ReferencePolicySchedule& ref_policy,
                             const SolveOptions& opts) {
  (void)ref_policy;  // weights already folded into the stats
  EstimatorReport report;
  for (int a = 0; a < stats.num_actions(); ++a) {
    ActionEstimate est = weighted_estimate_from_stats(stats, a, opts);
    report.theta_hat.push_back(std::move(est.theta));
    report.condition_number.push_back(est.condition_number);
    report.regularizer_used.push_back(est.regularizer_used);
  }
  return report;
}

EstVarEstimate weighted_me_estimate_estvar(const History& history, int action,
                                           const ReferencePolicySchedule& ref_policy,
                                           const std::vector<Eigen::MatrixXd>* true_error_covs,
                                           const SolveOptions& opts) {
  EstVarEstimate out;
  out.theta = weighted_me_estimate(history, action, ref_policy, opts);
  if (true_error_covs != nullptr) {
    if (true_error_covs->size() != history.rounds.size()) {
      throw DimensionMismatch("true covariance list length mismatch");
    }
    const double t = static_cast<double>(history.rounds.size());
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(history.dim, history.dim);
    for (std::size_t i = 0; i < history.rounds.size(); ++i) {
      const auto& round = history.rounds[i];
      delta += ref_policy.probs_at(round.round_index, action) *
               (round.error_cov - (*true_error_covs)[i]);
    }
    delta /= t;
    out.delta_norm = symmetric_operator_norm(delta);
  }
  return out;
}

MomentDiagnostics moment_diagnostics(const History& history,
                                     const ReferencePolicySchedule& ref_policy,
                                     int sampled_directions, std::uint64_t seed) {
  MomentDiagnostics out;
  const int d = history.dim;
  const std::int64_t t = history.size();
  if (t == 0 || d == 0) return out;
  const double scale = static_cast<double>(d);  // w w^T = d * x~ x~^T

  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  for (const auto& r : history.rounds) {
    second += scale * (r.noisy_context * r.noisy_context.transpose());
  }
  second /= static_cast<double>(t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(second, Eigen::EigenvaluesOnly);
  out.nu_hat = es.eigenvalues().maxCoeff();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < sampled_directions; ++k) {
    Eigen::VectorXd u(d);
    for (int i = 0; i < d; ++i) u(i) = normal(rng);
    if (u.norm() == 0.0) continue;
    u.normalize();
    double fourth = 0.0;
    for (const auto& r : history.rounds) {
      const double proj = std::sqrt(scale) * u.dot(r.noisy_context);
      fourth += proj * proj * proj * proj;
    }
    out.xi_hat = std::max(out.xi_hat, fourth / static_cast<double>(t));
  }

  out.lambda0_hat = std::numeric_limits<double>::infinity();
  for (int a = 0; a < history.num_actions; ++a) {
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(d, d);
    for (const auto& r : history.rounds) {
      design += ref_policy.probs_at(r.round_index, a) * scale *
                (r.noisy_context * r.noisy_context.transpose());
    }
    design /= static_cast<double>(t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> des(design, Eigen::EigenvaluesOnly);
    out.lambda0_hat = std::min(out.lambda0_hat, des.eigenvalues().minCoeff());
  }
  return out;
}

Eigen::VectorXd weighted_moments(const History& history, int target_action,
                                 const ReferencePolicySchedule& ref_policy,
                                 const std::vector<MomentFn>& moment_fns) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<int>(moment_fns.size()));
  if (history.rounds.empty()) return sums;
  for (const auto& round : history.rounds) {
    check_propensity(round);
    if (round.action != target_action) continue;
    const double w =
        ref_policy.probs_at(round.round_index, round.action) / round.propensity;
    for (std::size_t j = 0; j < moment_fns.size(); ++j) {
      sums(static_cast<int>(j)) += w * moment_fns[j](round.noisy_context, round.reward);
    }
  }
  return sums / static_cast<double>(history.rounds.size());
}

}  // namespace meb
