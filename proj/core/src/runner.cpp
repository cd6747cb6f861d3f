#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <variant>

#include "meb/errors.hpp"
#include "meb/evaluation.hpp"
#include "meb/harness.hpp"

namespace meb {

namespace {

struct ReplicationSeries {
  std::vector<double> cum_std, cum_clip, est_err, fallbacks;
};

using AlgoState = std::variant<MebState, TsState, UcbState>;

AlgoState make_algo_state(const ExperimentConfig& cfg, const Environment& env,
                          const ExplorationSchedule& schedule) {
  const int d = env.dim();
  const int k = env.num_actions();
  switch (cfg.algo) {
    case AlgoKind::meb:
      return MebState::create(d, k, schedule, ReferencePolicySchedule::uniform(k),
                              EstimatorKind::weighted);
    case AlgoKind::meb_naive:
      return MebState::create(d, k, schedule, ReferencePolicySchedule::uniform(k),
                              EstimatorKind::naive);
    case AlgoKind::rls_meb:
      return MebState::create(d, k, schedule, ReferencePolicySchedule::uniform(k),
                              EstimatorKind::rls, cfg.rls_lambda);
    case AlgoKind::ts:
      return TsState::create(d, k, cfg.prior_var.value_or(1.0),
                             cfg.reward_var.value_or(cfg.sigma_eta_sq));
    case AlgoKind::ucb:
      return UcbState::create(d, k, cfg.prior_var.value_or(1.0),
                              cfg.bonus_scale.value_or(cfg.sigma_eta_sq));
  }
  throw ConfigInvalid("unhandled algorithm kind");
}

ReplicationSeries run_replication(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto env = make_environment(cfg, seed);
  const int k = env->num_actions();
  const ExplorationSchedule schedule = cfg.schedule.build(env->dim(), cfg.horizon, k);
  AlgoState state = make_algo_state(cfg, *env, schedule);
  std::mt19937_64 policy_rng = make_stream(seed, RngStream::policy);
  const RewardModel& truth = env->reward_model();

  RegretLedger ledger;
  ReplicationSeries series;
  series.fallbacks.reserve(cfg.horizon);

  const std::int64_t init_rounds =
      cfg.init_rounds >= 0 ? cfg.init_rounds
                           : 2 * static_cast<std::int64_t>(env->dim()) * k;

  for (std::int64_t t = 1; t <= cfg.horizon; ++t) {
    const EnvStep step = env->step(t);
    const double p0 = schedule.min_prob_at(t);

    PolicyDistribution dist = std::visit(
        [&](auto& s) -> PolicyDistribution {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, MebState>) {
            return meb_decide(s, step.noisy_context);
          } else if constexpr (std::is_same_v<T, TsState>) {
            if (t <= init_rounds) return PolicyDistribution::uniform(k);
            return ts_decide(s, step.noisy_context, p0, policy_rng);
          } else {
            if (t <= init_rounds) return PolicyDistribution::uniform(k);
            return ucb_decide(s, step.noisy_context, p0);
          }
        },
        state);

    const int action = dist.sample(policy_rng);
    ObservedRound round{step.noisy_context, action, step.reward(action),
                        dist.prob(action), step.error_cov, t};
    env->observe_action(t, action);

    const std::vector<Eigen::VectorXd>* theta_hat = nullptr;
    std::int64_t fallbacks = 0;
    std::visit(
        [&](auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, MebState>) {
            s = meb_update(std::move(s), round);
            theta_hat = &s.theta;
            fallbacks = s.singular_fallbacks;
          } else if constexpr (std::is_same_v<T, TsState>) {
            s = ts_update(std::move(s), round);
            theta_hat = &s.mean;
          } else {
            s = ucb_update(std::move(s), round);
            theta_hat = &s.mean;
          }
        },
        state);

    ledger.record_round(standard_benchmark(truth, step.true_context),
                        clipped_benchmark(truth, step.true_context, p0), dist, truth,
                        step.true_context, theta_hat);
    series.fallbacks.push_back(static_cast<double>(fallbacks));
  }

  series.cum_std = ledger.cumulative_standard();
  series.cum_clip = ledger.cumulative_clipped();
  series.est_err = ledger.estimation_error();
  return series;
}

void mean_sd(const std::vector<const std::vector<double>*>& series, std::int64_t horizon,
             std::vector<double>& mean, std::vector<double>& sd) {
  const int n = static_cast<int>(series.size());
  mean.assign(horizon, 0.0);
  sd.assign(horizon, 0.0);
  for (std::int64_t t = 0; t < horizon; ++t) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += (*series[i])[t];
    m /= n;
    mean[t] = m;
    if (n > 1) {
      double ss = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = (*series[i])[t] - m;
        ss += d * d;
      }
      sd[t] = std::sqrt(ss / (n - 1));
    }
  }
}

}  // namespace

std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg,
                                              std::uint64_t seed) {
  std::unique_ptr<Environment> env;
  switch (cfg.env) {
    case EnvKind::synthetic: {
      SyntheticEnvConfig ec;
      ec.sigma_e_sq = cfg.sigma_e_sq;
      ec.sigma_eta_sq = cfg.sigma_eta_sq;
      ec.context_scale = cfg.context_scale;
      env = std::make_unique<SyntheticEnv>(std::move(ec), seed);
      break;
    }
    case EnvKind::heartsteps: {
      HeartStepsEnvConfig ec;
      ec.lambda_burden = cfg.lambda_burden;
      ec.availability_prob = cfg.availability_prob;
      ec.sigma_eta_sq = cfg.sigma_eta_sq;
      ec.sigma_eps_sq = cfg.sigma_e_sq;
      env = std::make_unique<HeartStepsEnv>(std::move(ec), seed);
      break;
    }
    case EnvKind::appendix_b_naive:
      env = std::make_unique<ThresholdPolicyEnv>(cfg.threshold, seed);
      break;
    case EnvKind::appendix_b_rls:
      env = std::make_unique<CorrelatedErrorEnv>(seed);
      break;
    case EnvKind::example_2_1:
      env = std::make_unique<SignFlipEnv>(seed);
      break;
  }
  if (cfg.estimated_variance) {
    env = std::make_unique<EstimatedVarianceEnv>(std::move(env), cfg.estvar_decay, seed);
  }
  return env;
}

int replication_threads() {
  if (const char* raw = std::getenv("MEB_THREADS")) {
    const int v = std::atoi(raw);
    if (v <= 1) return 1;
    return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult result;
  result.horizon = cfg.horizon;
  result.n_exp = cfg.n_exp;
  result.config = cfg;
  result.config_hash = cfg.hash();
  result.context_scale = cfg.context_scale;
  result.env_state_depends_on_actions = (cfg.env == EnvKind::heartsteps);
  for (int i = 0; i < cfg.n_exp; ++i) result.seeds.push_back(cfg.base_seed + i);

  std::vector<ReplicationSeries> reps(cfg.n_exp);
  const int workers = std::min(replication_threads(), cfg.n_exp);
  if (workers <= 1) {
    for (int i = 0; i < cfg.n_exp; ++i) reps[i] = run_replication(cfg, result.seeds[i]);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = next.fetch_add(1); i < cfg.n_exp; i = next.fetch_add(1)) {
            reps[i] = run_replication(cfg, result.seeds[i]);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<const std::vector<double>*> view(cfg.n_exp);
  auto collect = [&](auto member) {
    for (int i = 0; i < cfg.n_exp; ++i) view[i] = &(reps[i].*member);
  };
  collect(&ReplicationSeries::cum_std);
  mean_sd(view, cfg.horizon, result.std_regret_mean, result.std_regret_sd);
  collect(&ReplicationSeries::cum_clip);
  mean_sd(view, cfg.horizon, result.clip_regret_mean, result.clip_regret_sd);
  collect(&ReplicationSeries::est_err);
  mean_sd(view, cfg.horizon, result.est_err_mean, result.est_err_sd);
  collect(&ReplicationSeries::fallbacks);
  std::vector<double> unused_sd;
  mean_sd(view, cfg.horizon, result.fallback_mean, unused_sd);
  return result;
}

double RunResult::final_average_clipped_regret() const {
  return clip_regret_mean.empty() ? 0.0
                                  : clip_regret_mean.back() / static_cast<double>(horizon);
}

double RunResult::final_average_standard_regret() const {
  return std_regret_mean.empty() ? 0.0
                                 : std_regret_mean.back() / static_cast<double>(horizon);
}

SweepResult sweep(const SweepSpec& spec) {
  if (spec.sigma_eta_sq.empty() || spec.sigma_e_sq.empty() || spec.algos.empty()) {
    throw ConfigInvalid("sweep grid must be nonempty");
  }
  SweepResult out;
  out.algos = spec.algos;
  for (double eta : spec.sigma_eta_sq) {
    for (double eps : spec.sigma_e_sq) {
      SweepResult::Row row{eta, eps, {}};
      for (AlgoKind algo : spec.algos) {
        ExperimentConfig cfg = spec.base;
        cfg.sigma_eta_sq = eta;
        cfg.sigma_e_sq = eps;
        cfg.algo = algo;
        row.average_regret.push_back(run_experiment(cfg).final_average_clipped_regret());
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

ConsistencySeries threshold_consistency_run(double threshold, std::int64_t horizon,
                                            std::uint64_t seed,
                                            std::span<const std::int64_t> checkpoints) {
  ThresholdPolicyEnv env(threshold, seed);
  std::mt19937_64 policy_rng = make_stream(seed, RngStream::policy);
  const auto ref = ReferencePolicySchedule::uniform(2);
  History history;
  history.dim = 1;
  history.num_actions = 2;

  ConsistencySeries series;
  std::size_t next_checkpoint = 0;
  std::vector<std::int64_t> cps(checkpoints.begin(), checkpoints.end());
  std::sort(cps.begin(), cps.end());

  for (std::int64_t t = 1; t <= horizon; ++t) {
    EnvStep step = env.step(t);
    const PolicyDistribution dist = *env.logging_policy(step.noisy_context);
    const int action = dist.sample(policy_rng);
    ObservedRound round{step.noisy_context, action, step.reward(action),
                        dist.prob(action), step.error_cov, t};
    history.append(std::move(round));
    while (next_checkpoint < cps.size() && cps[next_checkpoint] == t) {
      series.checkpoints.push_back(t);
      series.weighted.push_back(weighted_me_estimate(history, 0, ref)(0));
      series.naive.push_back(naive_me_estimate(history, 0)(0));
      ++next_checkpoint;
    }
  }
  return series;
}

}  // namespace meb
