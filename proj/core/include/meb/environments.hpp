#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "meb/rng.hpp"
#include "meb/types.hpp"

namespace meb {

/// One simulated round before an action is taken. The true context stays on
/// the environment side; policies only ever receive noisy_context and
/// error_cov. Reward noise is drawn once per step, so reward(a) is a
/// deterministic function of the step for every action.
struct EnvStep {
  Eigen::VectorXd true_context;
  Eigen::VectorXd noisy_context;
  Eigen::MatrixXd error_cov;
  double reward_noise = 0.0;
  const RewardModel* model = nullptr;

  double reward(int action) const {
    return model->theta(action).dot(true_context) + reward_noise;
  }
};

/// Common interface for the simulators. Each instance owns its random
/// streams and any action-driven state; replications run on independent
/// instances.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int dim() const = 0;
  virtual int num_actions() const = 0;
  virtual const RewardModel& reward_model() const = 0;
  /// Produces round t (1-based). Must be called with strictly increasing t.
  virtual EnvStep step(std::int64_t t) = 0;
  /// Feeds back the executed action for environments with action-driven state.
  virtual void observe_action(std::int64_t t, int action) { (void)t; (void)action; }
  /// Fixed data-generating policy, when the environment prescribes one.
  virtual std::optional<PolicyDistribution> logging_policy(
      const Eigen::VectorXd& noisy_context) const {
    (void)noisy_context;
    return std::nullopt;
  }
};

/// Gaussian context + Gaussian context error + Gaussian reward noise.
struct SyntheticEnvConfig {
  int dim = 5;
  Eigen::VectorXd theta0;       // defaults to (5, 6, 4, 6, 4)
  Eigen::VectorXd theta1;       // defaults to (6, 5, 5, 5, 5)
  Eigen::VectorXd context_mean; // defaults to all-ones
  Eigen::MatrixXd context_cov;  // defaults to identity
  double sigma_e_sq = 1.0;      // error_cov = sigma_e_sq * error_cov_base
  Eigen::MatrixXd error_cov_base;  // defaults to identity
  double sigma_eta_sq = 1.0;
  /// Fixed rescaling applied to contexts (and inversely to the reward
  /// parameters), so rewards and regret are unchanged while context norms
  /// shrink. 1 = off.
  double context_scale = 1.0;

  void apply_defaults();
};

class SyntheticEnv final : public Environment {
 public:
  SyntheticEnv(SyntheticEnvConfig config, std::uint64_t seed);

  int dim() const override { return config_.dim; }
  int num_actions() const override { return 2; }
  const RewardModel& reward_model() const override { return model_; }
  EnvStep step(std::int64_t t) override;

  const SyntheticEnvConfig& config() const { return config_; }

 private:
  SyntheticEnvConfig config_;
  RewardModel model_;
  Eigen::MatrixXd context_chol_;
  Eigen::MatrixXd error_chol_;
  Eigen::MatrixXd error_cov_;
  std::mt19937_64 context_rng_;
  std::mt19937_64 error_rng_;
  std::mt19937_64 reward_rng_;
};

/// Mobile-health style simulator: the context is (availability, features,
/// treatment burden); only the burden coordinate is observed with noise, and
/// the burden evolves with the treatment history, B_{t+1} = lambda B_t + 1{A_t=1}.
struct HeartStepsEnvConfig {
  double lambda_burden = 0.5;      // burden decay in [0, 1)
  double availability_prob = 0.8;
  /// Mean/sd pairs for the feature block Z_t; sd = 0 makes a constant
  /// feature, and entries with discrete=true are Bernoulli(mean).
  struct Feature {
    double mean = 0.0;
    double sd = 1.0;
    bool discrete = false;
  };
  std::vector<Feature> z_features;          // defaults to 7 stand-in features
  Eigen::VectorXd alpha;                    // baseline effect, length 2 + |Z|... burden last
  Eigen::VectorXd beta;                     // treatment effect on selected features
  std::vector<int> treatment_features;      // indices into the full context
  double sigma_eta_sq = 1.0;
  double sigma_eps_sq = 1.0;                // noise variance on the burden coordinate
  double initial_burden = 0.0;

  void apply_defaults();
  int dim() const { return 2 + static_cast<int>(z_features.size()); }
  int burden_index() const { return dim() - 1; }
};

class HeartStepsEnv final : public Environment {
 public:
  HeartStepsEnv(HeartStepsEnvConfig config, std::uint64_t seed);

  int dim() const override { return config_.dim(); }
  int num_actions() const override { return 2; }
  const RewardModel& reward_model() const override { return model_; }
  EnvStep step(std::int64_t t) override;
  void observe_action(std::int64_t t, int action) override;

  double burden() const { return burden_; }
  const HeartStepsEnvConfig& config() const { return config_; }

 private:
  HeartStepsEnvConfig config_;
  RewardModel model_;
  double burden_ = 0.0;
  std::mt19937_64 context_rng_;
  std::mt19937_64 error_rng_;
  std::mt19937_64 reward_rng_;
};

/// One-dimensional process with a built-in threshold logging policy:
/// x = 1, x~ = 1 + Unif(-2, 2), theta = (-1, +1), reward noise Unif(-.1, .1).
/// The logging policy plays action 1 with probability 2/3 iff x~ exceeds the
/// threshold. Exposes correct propensities for off-policy estimation.
class ThresholdPolicyEnv final : public Environment {
 public:
  ThresholdPolicyEnv(double threshold, std::uint64_t seed);

  int dim() const override { return 1; }
  int num_actions() const override { return 2; }
  const RewardModel& reward_model() const override { return model_; }
  EnvStep step(std::int64_t t) override;
  std::optional<PolicyDistribution> logging_policy(
      const Eigen::VectorXd& noisy_context) const override;

  static constexpr double kErrorVariance = 4.0 / 3.0;  // Var Unif(-2,2)

 private:
  double threshold_;
  RewardModel model_;
  std::mt19937_64 error_rng_;
  std::mt19937_64 reward_rng_;
};

/// Two-dimensional process whose context error is aligned with (1,1) and
/// scaled by the first context coordinate. The error never flips the optimal
/// action, yet it makes ridge regression on the noisy contexts inconsistent.
class CorrelatedErrorEnv final : public Environment {
 public:
  explicit CorrelatedErrorEnv(std::uint64_t seed, double error_scale = 0.9);

  int dim() const override { return 2; }
  int num_actions() const override { return 2; }
  const RewardModel& reward_model() const override { return model_; }
  EnvStep step(std::int64_t t) override;

  /// The four equally likely context values.
  static const std::vector<Eigen::Vector2d>& support();

 private:
  double error_scale_;
  RewardModel model_;
  std::mt19937_64 context_rng_;
  std::mt19937_64 error_rng_;
  std::mt19937_64 reward_rng_;
};

/// One-dimensional process where the observation is +-1 while the true
/// context is +-0.2, with a 0.6/0.4 sign agreement: the observation is
/// unbiased, but no policy can avoid linear regret against the standard
/// benchmark.
class SignFlipEnv final : public Environment {
 public:
  explicit SignFlipEnv(std::uint64_t seed);

  int dim() const override { return 1; }
  int num_actions() const override { return 2; }
  const RewardModel& reward_model() const override { return model_; }
  EnvStep step(std::int64_t t) override;

 private:
  RewardModel model_;
  std::mt19937_64 context_rng_;
  std::mt19937_64 error_rng_;
};

/// Synthetic feed of covariance estimates that sharpen over time: returns
/// the true covariance plus a symmetric perturbation of operator norm
/// decay_scale * sqrt(dim / t) / dim, projected back onto the PSD cone.
Eigen::MatrixXd estvar_feed(const Eigen::MatrixXd& true_sigma, std::int64_t t,
                            std::mt19937_64& rng, double decay_scale);

/// Wraps an environment so that emitted rounds carry estimated error
/// covariances from estvar_feed instead of the exact ones.
class EstimatedVarianceEnv final : public Environment {
 public:
  EstimatedVarianceEnv(std::unique_ptr<Environment> inner, double decay_scale,
                       std::uint64_t seed);

  int dim() const override { return inner_->dim(); }
  int num_actions() const override { return inner_->num_actions(); }
  const RewardModel& reward_model() const override { return inner_->reward_model(); }
  EnvStep step(std::int64_t t) override;
  void observe_action(std::int64_t t, int action) override {
    inner_->observe_action(t, action);
  }
  const Eigen::MatrixXd& last_true_error_cov() const { return last_true_; }

 private:
  std::unique_ptr<Environment> inner_;
  double decay_scale_;
  std::mt19937_64 feed_rng_;
  Eigen::MatrixXd last_true_;
};

}  // namespace meb
