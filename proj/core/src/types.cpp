#include "meb/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace meb {

RewardModel::RewardModel(std::vector<Eigen::VectorXd> thetas) : thetas_(std::move(thetas)) {
  if (thetas_.empty()) throw DimensionMismatch("reward model needs at least one action");
  const auto d = thetas_[0].size();
  if (d < 1) throw DimensionMismatch("reward model dimension must be >= 1");
  for (const auto& th : thetas_) {
    if (th.size() != d) {
      throw DimensionMismatch("reward model action vectors have mixed dimensions");
    }
  }
}

double RewardModel::max_norm() const {
  double m = 0.0;
  for (const auto& th : thetas_) m = std::max(m, th.norm());
  return m;
}

void History::append(ObservedRound round) {
  if (rounds.empty() && dim == 0) dim = static_cast<int>(round.noisy_context.size());
  rounds.push_back(std::move(round));
}

void validate_history(const History& history) {
  std::int64_t expected_index = 1;
  for (const auto& round : history.rounds) {
    const std::string at = " at round " + std::to_string(round.round_index);
    if (round.round_index != expected_index) {
      throw DimensionMismatch("round indices must increase from 1; got " +
                              std::to_string(round.round_index) + ", expected " +
                              std::to_string(expected_index));
    }
    ++expected_index;
    if (static_cast<int>(round.noisy_context.size()) != history.dim) {
      throw DimensionMismatch("context dimension mismatch" + at);
    }
    if (round.action < 0 || round.action >= history.num_actions) {
      throw DimensionMismatch("action out of range" + at);
    }
    if (!(round.propensity > 0.0) || round.propensity > 1.0) {
      throw NonPositivePropensity("propensity outside (0,1]" + at);
    }
    if (round.error_cov.rows() != history.dim || round.error_cov.cols() != history.dim) {
      throw DimensionMismatch("error covariance shape mismatch" + at);
    }
    if (!round.error_cov.isApprox(round.error_cov.transpose(), 1e-10)) {
      throw NonPsdErrorCov("error covariance not symmetric" + at);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(round.error_cov,
                                                      Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10) {
      throw NonPsdErrorCov("error covariance has eigenvalue below -1e-10" + at);
    }
  }
}

double max_context_norm(const History& history) {
  double worst = 0.0;
  for (const auto& round : history.rounds) {
    worst = std::max(worst, round.noisy_context.norm());
  }
  return worst;
}

PolicyDistribution::PolicyDistribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw InvalidDistribution("empty probability vector");
  if (probs_.minCoeff() < 0.0) {
    throw InvalidDistribution("negative probability entry");
  }
  if (std::abs(probs_.sum() - 1.0) > 1e-12) {
    throw InvalidDistribution("probabilities sum to " + std::to_string(probs_.sum()));
  }
}

int PolicyDistribution::sample(std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (int a = 0; a < probs_.size(); ++a) {
    acc += probs_(a);
    if (u < acc) return a;
  }
  return static_cast<int>(probs_.size()) - 1;
}

PolicyDistribution PolicyDistribution::point_mass(int num_actions, int action) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(num_actions);
  p(action) = 1.0;
  return PolicyDistribution(std::move(p));
}

PolicyDistribution PolicyDistribution::uniform(int num_actions) {
  return PolicyDistribution(
      Eigen::VectorXd::Constant(num_actions, 1.0 / static_cast<double>(num_actions)));
}

ReferencePolicySchedule ReferencePolicySchedule::uniform(int num_actions) {
  const double p = 1.0 / static_cast<double>(num_actions);
  return ReferencePolicySchedule(num_actions, [p](std::int64_t, int) { return p; });
}

bool UpdateTimes::contains(std::int64_t t) const {
  if (every_round) return true;
  return std::binary_search(times.begin(), times.end(), t);
}

UpdateTimes UpdateTimes::at(std::vector<std::int64_t> ts) {
  UpdateTimes u;
  u.every_round = false;
  std::sort(ts.begin(), ts.end());
  u.times = std::move(ts);
  return u;
}

UpdateTimes UpdateTimes::geometric(std::int64_t base, std::int64_t horizon) {
  std::vector<std::int64_t> ts;
  for (std::int64_t t = base; t <= horizon && t > 0; t *= base) ts.push_back(t);
  return at(std::move(ts));
}

UpdateTimes UpdateTimes::periodic(std::int64_t period, std::int64_t horizon) {
  std::vector<std::int64_t> ts;
  for (std::int64_t t = period; t <= horizon; t += period) ts.push_back(t);
  return at(std::move(ts));
}

ExplorationSchedule ExplorationSchedule::standard_setting(int dim, std::int64_t horizon,
                                                          int num_actions) {
  ExplorationSchedule s;
  s.warmup_len = static_cast<std::int64_t>(
      std::ceil(2.0 * dim * std::pow(static_cast<double>(horizon), 2.0 / 3.0)));
  const double cap = 1.0 / static_cast<double>(num_actions);
  s.min_prob = [cap](std::int64_t t) {
    return std::min(cap, std::pow(static_cast<double>(t), -1.0 / 3.0));
  };
  return s;
}

ExplorationSchedule ExplorationSchedule::clipped_setting(int dim, std::int64_t horizon,
                                                         double p0) {
  ExplorationSchedule s;
  s.warmup_len = static_cast<std::int64_t>(
      std::ceil(2.0 * dim * std::sqrt(static_cast<double>(horizon))));
  s.min_prob = [p0](std::int64_t) { return p0; };
  return s;
}

PolicyDistribution clipped_distribution(int num_actions, int best_action, double p0) {
  Eigen::VectorXd p = Eigen::VectorXd::Constant(num_actions, p0);
  p(best_action) = 1.0 - (num_actions - 1) * p0;
  return PolicyDistribution(std::move(p));
}

int argmax_lowest(const Eigen::VectorXd& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

}  // namespace meb
