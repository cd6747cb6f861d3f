#include "meb/environments.hpp"

#include <cmath>

#include "meb/errors.hpp"
#include "meb/linalg.hpp"

namespace meb {

namespace {

Eigen::VectorXd gaussian_vector(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z(i) = normal(rng);
  return z;
}

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // semidefinite input: fall back to a spectral square root
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw NonPsdErrorCov("covariance is not PSD");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

void SyntheticEnvConfig::apply_defaults() {
  if (theta0.size() == 0 && dim == 5) {
    theta0 = (Eigen::VectorXd(5) << 5, 6, 4, 6, 4).finished();
    theta1 = (Eigen::VectorXd(5) << 6, 5, 5, 5, 5).finished();
  }
  if (theta0.size() == 0) throw ConfigInvalid("synthetic env needs theta0/theta1");
  dim = static_cast<int>(theta0.size());
  if (context_mean.size() == 0) context_mean = Eigen::VectorXd::Ones(dim);
  if (context_cov.size() == 0) context_cov = Eigen::MatrixXd::Identity(dim, dim);
  if (error_cov_base.size() == 0) error_cov_base = Eigen::MatrixXd::Identity(dim, dim);
}

SyntheticEnv::SyntheticEnv(SyntheticEnvConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      context_rng_(make_stream(seed, RngStream::context)),
      error_rng_(make_stream(seed, RngStream::error)),
      reward_rng_(make_stream(seed, RngStream::reward)) {
  config_.apply_defaults();
  if (config_.theta1.size() != config_.theta0.size()) {
    throw DimensionMismatch("theta0/theta1 dimensions differ");
  }
  const double c = config_.context_scale;
  model_ = RewardModel({config_.theta0 / c, config_.theta1 / c});
  context_chol_ = psd_cholesky(config_.context_cov);
  error_cov_ = config_.sigma_e_sq * config_.error_cov_base;
  error_chol_ = psd_cholesky(error_cov_);
}

EnvStep SyntheticEnv::step(std::int64_t) {
  const int d = config_.dim;
  const double c = config_.context_scale;
  EnvStep s;
  s.true_context = c * (config_.context_mean + context_chol_ * gaussian_vector(d, context_rng_));
  const Eigen::VectorXd eps = c * (error_chol_ * gaussian_vector(d, error_rng_));
  s.noisy_context = s.true_context + eps;
  s.error_cov = (c * c) * error_cov_;
  s.reward_noise = std::sqrt(config_.sigma_eta_sq) *
                   std::normal_distribution<double>(0.0, 1.0)(reward_rng_);
  s.model = &model_;
  return s;
}

void HeartStepsEnvConfig::apply_defaults() {
  if (z_features.empty()) {
    // Stand-in feature block: five continuous signals and two discrete ones
    // (location bucket, step-variation level).
    z_features = {
        {0.0, 1.0, false},  // recent step count (standardized)
        {0.0, 1.0, false},  // yesterday's step count
        {0.0, 1.0, false},  // earlier step count window
        {0.6, 0.0, true},   // location indicator
        {0.0, 1.0, false},  // temperature
        {0.5, 0.0, true},   // step variation level
        {0.0, 1.0, false},  // extra continuous signal
    };
  }
  const int d = dim();
  if (alpha.size() == 0) {
    alpha = Eigen::VectorXd::Zero(d);
    alpha(0) = 0.4;                       // availability
    for (int i = 1; i < d - 1; ++i) alpha(i) = 0.3 / (d - 2);
    alpha(d - 1) = -0.5;                  // burden hurts the baseline reward
  }
  if (treatment_features.empty()) {
    treatment_features = {4, 6, d - 1};   // location, step variation, burden
  }
  if (beta.size() == 0) {
    beta = Eigen::VectorXd::Zero(static_cast<int>(treatment_features.size()));
    beta(0) = 0.3;
    beta(1) = 0.2;
    beta(static_cast<int>(treatment_features.size()) - 1) = -0.8;
  }
  if (alpha.size() != d) throw ConfigInvalid("alpha length must equal context dim");
  if (beta.size() != static_cast<Eigen::Index>(treatment_features.size())) {
    throw ConfigInvalid("beta length must match treatment feature count");
  }
  for (int idx : treatment_features) {
    if (idx < 0 || idx >= d) throw ConfigInvalid("treatment feature index out of range");
  }
}

HeartStepsEnv::HeartStepsEnv(HeartStepsEnvConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      context_rng_(make_stream(seed, RngStream::context)),
      error_rng_(make_stream(seed, RngStream::error)),
      reward_rng_(make_stream(seed, RngStream::reward)) {
  config_.apply_defaults();
  burden_ = config_.initial_burden;
  // r(x, a) = <alpha, x> + a <beta, f(x)> is linear per action:
  // theta_0 = alpha, theta_1 = alpha + S^T beta with S the feature selector.
  Eigen::VectorXd theta1 = config_.alpha;
  for (std::size_t j = 0; j < config_.treatment_features.size(); ++j) {
    theta1(config_.treatment_features[j]) += config_.beta(static_cast<int>(j));
  }
  model_ = RewardModel({config_.alpha, theta1});
}

EnvStep HeartStepsEnv::step(std::int64_t) {
  const int d = config_.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  EnvStep s;
  s.true_context = Eigen::VectorXd::Zero(d);
  s.true_context(0) = (unif(context_rng_) < config_.availability_prob) ? 1.0 : 0.0;
  for (std::size_t i = 0; i < config_.z_features.size(); ++i) {
    const auto& f = config_.z_features[i];
    double v = f.discrete ? ((unif(context_rng_) < f.mean) ? 1.0 : 0.0)
                          : f.mean + f.sd * normal(context_rng_);
    s.true_context(1 + static_cast<int>(i)) = v;
  }
  s.true_context(config_.burden_index()) = burden_;

  s.noisy_context = s.true_context;
  s.noisy_context(config_.burden_index()) +=
      std::sqrt(config_.sigma_eps_sq) * normal(error_rng_);
  s.error_cov = Eigen::MatrixXd::Zero(d, d);
  s.error_cov(config_.burden_index(), config_.burden_index()) = config_.sigma_eps_sq;
  s.reward_noise = std::sqrt(config_.sigma_eta_sq) * normal(reward_rng_);
  s.model = &model_;
  return s;
}

void HeartStepsEnv::observe_action(std::int64_t, int action) {
  burden_ = config_.lambda_burden * burden_ + (action == 1 ? 1.0 : 0.0);
}

ThresholdPolicyEnv::ThresholdPolicyEnv(double threshold, std::uint64_t seed)
    : threshold_(threshold),
      model_({(Eigen::VectorXd(1) << -1.0).finished(),
              (Eigen::VectorXd(1) << 1.0).finished()}),
      error_rng_(make_stream(seed, RngStream::error)),
      reward_rng_(make_stream(seed, RngStream::reward)) {}

EnvStep ThresholdPolicyEnv::step(std::int64_t) {
  EnvStep s;
  s.true_context = Eigen::VectorXd::Ones(1);
  std::uniform_real_distribution<double> err(-2.0, 2.0);
  s.noisy_context = s.true_context + Eigen::VectorXd::Constant(1, err(error_rng_));
  s.error_cov = Eigen::MatrixXd::Constant(1, 1, kErrorVariance);
  std::uniform_real_distribution<double> eta(-0.1, 0.1);
  s.reward_noise = eta(reward_rng_);
  s.model = &model_;
  return s;
}

std::optional<PolicyDistribution> ThresholdPolicyEnv::logging_policy(
    const Eigen::VectorXd& noisy_context) const {
  const bool above = noisy_context(0) > threshold_;
  Eigen::VectorXd p(2);
  p << (above ? 1.0 / 3.0 : 2.0 / 3.0), (above ? 2.0 / 3.0 : 1.0 / 3.0);
  return PolicyDistribution(std::move(p));
}

const std::vector<Eigen::Vector2d>& CorrelatedErrorEnv::support() {
  static const std::vector<Eigen::Vector2d> points = {
      Eigen::Vector2d(1, 3), Eigen::Vector2d(-3, 1), Eigen::Vector2d(-1, -3),
      Eigen::Vector2d(3, -1)};
  return points;
}

CorrelatedErrorEnv::CorrelatedErrorEnv(std::uint64_t seed, double error_scale)
    : error_scale_(error_scale),
      model_({(Eigen::VectorXd(2) << -1.0, 0.0).finished(),
              (Eigen::VectorXd(2) << 1.0, 0.0).finished()}),
      context_rng_(make_stream(seed, RngStream::context)),
      error_rng_(make_stream(seed, RngStream::error)),
      reward_rng_(make_stream(seed, RngStream::reward)) {}

EnvStep CorrelatedErrorEnv::step(std::int64_t) {
  EnvStep s;
  const auto& pts = support();
  std::uniform_int_distribution<int> pick(0, static_cast<int>(pts.size()) - 1);
  s.true_context = pts[pick(context_rng_)];
  const double mag = error_scale_ * s.true_context(0);
  const double sign = (std::uniform_int_distribution<int>(0, 1)(error_rng_) == 0) ? 1.0 : -1.0;
  const Eigen::Vector2d eps = sign * mag * Eigen::Vector2d::Ones();
  s.noisy_context = s.true_context + eps;
  // conditional covariance of +-mag (1,1): mag^2 * ones
  s.error_cov = (mag * mag) * Eigen::MatrixXd::Ones(2, 2);
  s.reward_noise = std::normal_distribution<double>(0.0, 0.1)(reward_rng_);
  s.model = &model_;
  return s;
}

SignFlipEnv::SignFlipEnv(std::uint64_t seed)
    : model_({(Eigen::VectorXd(1) << -1.0).finished(),
              (Eigen::VectorXd(1) << 1.0).finished()}),
      context_rng_(make_stream(seed, RngStream::context)),
      error_rng_(make_stream(seed, RngStream::error)) {}

EnvStep SignFlipEnv::step(std::int64_t) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double x = (unif(context_rng_) < 0.5) ? 0.2 : -0.2;
  const bool agree = unif(error_rng_) < 0.6;
  const double obs = agree ? ((x > 0) ? 1.0 : -1.0) : ((x > 0) ? -1.0 : 1.0);
  EnvStep s;
  s.true_context = Eigen::VectorXd::Constant(1, x);
  s.noisy_context = Eigen::VectorXd::Constant(1, obs);
  // Var(obs - x | x) = E[obs^2] - x^2 = 1 - 0.04
  s.error_cov = Eigen::MatrixXd::Constant(1, 1, 0.96);
  s.reward_noise = 0.0;
  s.model = &model_;
  return s;
}

Eigen::MatrixXd estvar_feed(const Eigen::MatrixXd& true_sigma, std::int64_t t,
                            std::mt19937_64& rng, double decay_scale) {
  const int d = static_cast<int>(true_sigma.rows());
  if (decay_scale == 0.0) return true_sigma;
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd raw(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) raw(i, j) = normal(rng);
  }
  Eigen::MatrixXd sym = 0.5 * (raw + raw.transpose());
  const double norm = symmetric_operator_norm(sym);
  const double target =
      decay_scale * std::sqrt(static_cast<double>(d) / static_cast<double>(t)) / d;
  if (norm > 0.0) sym *= target / norm;
  return project_psd(true_sigma + sym);
}

EstimatedVarianceEnv::EstimatedVarianceEnv(std::unique_ptr<Environment> inner,
                                           double decay_scale, std::uint64_t seed)
    : inner_(std::move(inner)),
      decay_scale_(decay_scale),
      feed_rng_(make_stream(seed, RngStream::variance_feed)) {}

EnvStep EstimatedVarianceEnv::step(std::int64_t t) {
  EnvStep s = inner_->step(t);
  last_true_ = s.error_cov;
  s.error_cov = estvar_feed(last_true_, t, feed_rng_, decay_scale_);
  return s;
}

}  // namespace meb
