#include "meb/evaluation.hpp"

#include <algorithm>

#include "meb/errors.hpp"

namespace meb {

namespace {

Eigen::VectorXd action_values(const RewardModel& theta_star,
                              const Eigen::VectorXd& true_context) {
  Eigen::VectorXd v(theta_star.num_actions());
  for (int a = 0; a < theta_star.num_actions(); ++a) {
    v(a) = theta_star.theta(a).dot(true_context);
  }
  return v;
}

}  // namespace

PolicyDistribution standard_benchmark(const RewardModel& theta_star,
                                      const Eigen::VectorXd& true_context) {
  return PolicyDistribution::point_mass(theta_star.num_actions(),
                                        argmax_lowest(action_values(theta_star, true_context)));
}

PolicyDistribution clipped_benchmark(const RewardModel& theta_star,
                                     const Eigen::VectorXd& true_context, double p0) {
  const int k = theta_star.num_actions();
  if (p0 < 0.0 || p0 > 1.0 / static_cast<double>(k)) {
    throw ConfigInvalid("clipped benchmark needs p0 in [0, 1/K]");
  }
  // p0 = 0 degenerates to the standard benchmark.
  return clipped_distribution(k, argmax_lowest(action_values(theta_star, true_context)), p0);
}

double instantaneous_regret(const PolicyDistribution& benchmark,
                            const PolicyDistribution& policy,
                            const RewardModel& theta_star,
                            const Eigen::VectorXd& true_context) {
  if (benchmark.num_actions() != policy.num_actions() ||
      benchmark.num_actions() != theta_star.num_actions()) {
    throw DimensionMismatch("distributions and reward model disagree on action count");
  }
  const Eigen::VectorXd values = action_values(theta_star, true_context);
  return (benchmark.probs() - policy.probs()).dot(values);
}

void RegretLedger::record_round(const PolicyDistribution& std_bench,
                                const PolicyDistribution& clip_bench,
                                const PolicyDistribution& policy,
                                const RewardModel& theta_star,
                                const Eigen::VectorXd& true_context,
                                const std::vector<Eigen::VectorXd>* theta_hat) {
  const double r_std = instantaneous_regret(std_bench, policy, theta_star, true_context);
  const double r_clip = instantaneous_regret(clip_bench, policy, theta_star, true_context);
  inst_std_.push_back(r_std);
  inst_clip_.push_back(r_clip);
  cum_std_.push_back((cum_std_.empty() ? 0.0 : cum_std_.back()) + r_std);
  cum_clip_.push_back((cum_clip_.empty() ? 0.0 : cum_clip_.back()) + r_clip);

  last_per_action_.assign(theta_star.num_actions(), 0.0);
  double worst = 0.0;
  for (int a = 0; a < theta_star.num_actions(); ++a) {
    const double err = (theta_hat != nullptr)
                           ? ((*theta_hat)[a] - theta_star.theta(a)).norm()
                           : theta_star.theta(a).norm();
    last_per_action_[a] = err;
    worst = std::max(worst, err);
  }
  est_err_.push_back(worst);
}

double RegretLedger::average_standard_regret() const {
  return cum_std_.empty() ? 0.0 : cum_std_.back() / static_cast<double>(cum_std_.size());
}

double RegretLedger::average_clipped_regret() const {
  return cum_clip_.empty() ? 0.0 : cum_clip_.back() / static_cast<double>(cum_clip_.size());
}

}  // namespace meb
