#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "meb/types.hpp"

namespace meb {

/// Point mass on argmax_a <theta*_a, x_t>; ties go to the lowest index.
PolicyDistribution standard_benchmark(const RewardModel& theta_star,
                                      const Eigen::VectorXd& true_context);

/// 1-(K-1)p0 on the best action, p0 elsewhere.
PolicyDistribution clipped_benchmark(const RewardModel& theta_star,
                                     const Eigen::VectorXd& true_context, double p0);

/// Expected reward shortfall of `policy` against `benchmark` at this round:
/// sum_a (benchmark_a - policy_a) <theta*_a, x_t>. Nonnegative for the
/// standard benchmark; can be negative against the clipped one.
double instantaneous_regret(const PolicyDistribution& benchmark,
                            const PolicyDistribution& policy,
                            const RewardModel& theta_star,
                            const Eigen::VectorXd& true_context);

/// Per-round regret and estimation-error accounting for one run. Cumulative
/// series are exact prefix sums of the instantaneous ones.
class RegretLedger {
 public:
  void record_round(const PolicyDistribution& std_bench,
                    const PolicyDistribution& clip_bench,
                    const PolicyDistribution& policy, const RewardModel& theta_star,
                    const Eigen::VectorXd& true_context,
                    const std::vector<Eigen::VectorXd>* theta_hat = nullptr);

  std::int64_t rounds() const { return static_cast<std::int64_t>(inst_std_.size()); }
  const std::vector<double>& instantaneous_standard() const { return inst_std_; }
  const std::vector<double>& instantaneous_clipped() const { return inst_clip_; }
  const std::vector<double>& cumulative_standard() const { return cum_std_; }
  const std::vector<double>& cumulative_clipped() const { return cum_clip_; }
  /// max_a ||theta_hat_a - theta*_a||_2 per round (0 norm used before any
  /// estimate exists, matching the zero-initialized decision rule).
  const std::vector<double>& estimation_error() const { return est_err_; }
  /// Per-action estimation errors at the last recorded round.
  const std::vector<double>& last_per_action_error() const { return last_per_action_; }

  double average_standard_regret() const;
  double average_clipped_regret() const;

 private:
  std::vector<double> inst_std_, inst_clip_, cum_std_, cum_clip_, est_err_;
  std::vector<double> last_per_action_;
};

}  // namespace meb
