#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meb/environments.hpp"
#include "meb/policies.hpp"
#include "meb/types.hpp"

namespace meb {

enum class EnvKind { synthetic, heartsteps, appendix_b_naive, appendix_b_rls, example_2_1 };
enum class AlgoKind { meb, meb_naive, rls_meb, ts, ucb };

std::string to_string(EnvKind kind);
std::string to_string(AlgoKind kind);
EnvKind env_kind_from_string(const std::string& s);
AlgoKind algo_kind_from_string(const std::string& s);

/// Exploration/update schedule selection.
struct ScheduleSpec {
  enum class P0Mode { constant, decaying };
  enum class UpdateMode { every, geometric, periodic };

  P0Mode p0_mode = P0Mode::constant;
  double p0 = 0.2;
  /// Warm-up length override; when absent the setting defaults apply:
  /// ceil(2 d T^(2/3)) for decaying p0, ceil(2 d sqrt(T)) for constant p0.
  std::optional<std::int64_t> warmup_len;
  UpdateMode update_mode = UpdateMode::every;
  std::int64_t update_base = 2;  // geometric base, or period

  ExplorationSchedule build(int dim, std::int64_t horizon, int num_actions) const;
};

/// Full description of one experiment: environment, algorithm, schedule,
/// replication count and seeding, output location.
struct ExperimentConfig {
  EnvKind env = EnvKind::synthetic;
  AlgoKind algo = AlgoKind::meb;
  std::int64_t horizon = 50000;
  int n_exp = 1;
  std::uint64_t base_seed = 1;
  std::string out_path;
  std::int64_t stride = 1;

  // environment parameters
  double sigma_eta_sq = 1.0;
  double sigma_e_sq = 1.0;
  double context_scale = 1.0;
  double threshold = 0.5;        // appendix-b-naive logging-policy threshold
  double lambda_burden = 0.5;    // heartsteps burden decay
  double availability_prob = 0.8;

  // algorithm parameters
  double rls_lambda = 1.0;
  std::optional<double> prior_var;    // TS l; default 1
  std::optional<double> reward_var;   // TS rho; default sigma_eta_sq
  std::optional<double> bonus_scale;  // UCB C; default sigma_eta_sq
  bool estimated_variance = false;    // feed Sigma-hat instead of Sigma
  double estvar_decay = 1.0;          // c in c*sqrt(d/t)/d
  /// Uniform initial exploration rounds for ts/ucb, so an arm cannot starve
  /// before its first estimate exists. -1 picks 2*d*K.
  std::int64_t init_rounds = -1;

  ScheduleSpec schedule;

  /// Throws ConfigInvalid when inconsistent.
  void validate() const;

  /// Canonical key=value serialization (sorted), used for hashing and
  /// metadata.
  std::string canonical() const;
  std::string hash() const;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);
  void apply_override(const std::string& dotted_key, const std::string& value);
};

/// Builds the configured environment for one replication seed.
std::unique_ptr<Environment> make_environment(const ExperimentConfig& config,
                                              std::uint64_t seed);

/// Per-round aggregates over the replications (mean and sample standard
/// deviation with n-1 denominator, reduced in replicate order).
struct RunResult {
  std::int64_t horizon = 0;
  int n_exp = 0;
  std::vector<double> std_regret_mean, std_regret_sd;    // cumulative
  std::vector<double> clip_regret_mean, clip_regret_sd;  // cumulative
  std::vector<double> est_err_mean, est_err_sd;          // max-action norm
  std::vector<double> fallback_mean;                     // cumulative count
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  double context_scale = 1.0;
  bool env_state_depends_on_actions = false;  // heartsteps burden dynamics
  ExperimentConfig config;

  /// cumulative clipped regret / T at the horizon, the table statistic.
  double final_average_clipped_regret() const;
  double final_average_standard_regret() const;
};

/// Runs n_exp seeded replications (base_seed + replicate index) of
/// decide -> sample -> reward -> update and aggregates. Deterministic for a
/// fixed config; replication parallelism is capped by the MEB_THREADS
/// environment variable (0 or 1 = sequential) and does not affect results.
RunResult run_experiment(const ExperimentConfig& config);

/// Writes the per-round CSV (header t,std_regret_mean,std_regret_sd,
/// clip_regret_mean,clip_regret_sd,avg_regret,est_err_mean,est_err_sd,
/// fallbacks; rows thinned to multiples of stride; floats at 17 significant
/// digits) plus a sibling <path>.meta.json with the full config and seeds.
void emit_csv(const RunResult& result, const std::string& path, std::int64_t stride = 1);

/// One experiment per (sigma_eta_sq, sigma_e_sq, algorithm) cell.
struct SweepSpec {
  std::vector<double> sigma_eta_sq;
  std::vector<double> sigma_e_sq;
  std::vector<AlgoKind> algos;
  ExperimentConfig base;
};

struct SweepResult {
  std::vector<AlgoKind> algos;
  struct Row {
    double sigma_eta_sq;
    double sigma_e_sq;
    std::vector<double> average_regret;  // one per algo
  };
  std::vector<Row> rows;
};

SweepResult sweep(const SweepSpec& spec);

/// Table-shaped CSV: one row per sigma pair, one column per algorithm.
void emit_sweep_csv(const SweepResult& result, const std::string& path);

/// Logs rounds under the threshold logging policy and evaluates both
/// estimators for action 0 at the checkpoints. Used by the estimator
/// consistency demo and its tests.
struct ConsistencySeries {
  std::vector<std::int64_t> checkpoints;
  std::vector<double> weighted;  // first coordinate of the weighted estimate
  std::vector<double> naive;
};
ConsistencySeries threshold_consistency_run(double threshold, std::int64_t horizon,
                                            std::uint64_t seed,
                                            std::span<const std::int64_t> checkpoints);

/// Number of worker threads the runner would use (respects MEB_THREADS).
int replication_threads();

}  // namespace meb
