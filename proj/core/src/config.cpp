#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "meb/errors.hpp"
#include "meb/harness.hpp"

namespace meb {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  auto end = s.find_last_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("bad numeric value for " + key + ": '" + value + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigInvalid("bad integer value for " + key + ": '" + value + "'");
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::synthetic: return "synthetic";
    case EnvKind::heartsteps: return "heartsteps";
    case EnvKind::appendix_b_naive: return "appendix-b-naive";
    case EnvKind::appendix_b_rls: return "appendix-b-rls";
    case EnvKind::example_2_1: return "example-2.1";
  }
  return "?";
}

std::string to_string(AlgoKind kind) {
  switch (kind) {
    case AlgoKind::meb: return "meb";
    case AlgoKind::meb_naive: return "meb-naive";
    case AlgoKind::rls_meb: return "rls-meb";
    case AlgoKind::ts: return "ts";
    case AlgoKind::ucb: return "ucb";
  }
  return "?";
}

EnvKind env_kind_from_string(const std::string& s) {
  if (s == "synthetic") return EnvKind::synthetic;
  if (s == "heartsteps") return EnvKind::heartsteps;
  if (s == "appendix-b-naive") return EnvKind::appendix_b_naive;
  if (s == "appendix-b-rls") return EnvKind::appendix_b_rls;
  if (s == "example-2.1") return EnvKind::example_2_1;
  throw ConfigInvalid("unknown environment '" + s + "'");
}

AlgoKind algo_kind_from_string(const std::string& s) {
  if (s == "meb") return AlgoKind::meb;
  if (s == "meb-naive") return AlgoKind::meb_naive;
  if (s == "rls-meb") return AlgoKind::rls_meb;
  if (s == "ts") return AlgoKind::ts;
  if (s == "ucb") return AlgoKind::ucb;
  throw ConfigInvalid("unknown algorithm '" + s + "'");
}

ExplorationSchedule ScheduleSpec::build(int dim, std::int64_t horizon,
                                        int num_actions) const {
  ExplorationSchedule s;
  if (p0_mode == P0Mode::decaying) {
    s = ExplorationSchedule::standard_setting(dim, horizon, num_actions);
  } else {
    s = ExplorationSchedule::clipped_setting(dim, horizon, p0);
  }
  if (warmup_len) s.warmup_len = *warmup_len;
  switch (update_mode) {
    case UpdateMode::every:
      s.update_times = UpdateTimes::every();
      break;
    case UpdateMode::geometric:
      s.update_times = UpdateTimes::geometric(update_base, horizon);
      break;
    case UpdateMode::periodic:
      s.update_times = UpdateTimes::periodic(update_base, horizon);
      break;
  }
  return s;
}

void ExperimentConfig::validate() const {
  if (horizon < 1) throw ConfigInvalid("t must be >= 1");
  if (n_exp < 1) throw ConfigInvalid("n_exp must be >= 1");
  if (stride < 1) throw ConfigInvalid("stride must be >= 1");
  if (schedule.p0_mode == ScheduleSpec::P0Mode::constant) {
    const bool greedy_ok = (algo == AlgoKind::ts || algo == AlgoKind::ucb);
    if (schedule.p0 < 0.0 || schedule.p0 > 0.5 ||
        (schedule.p0 == 0.0 && !greedy_ok)) {
      throw ConfigInvalid("p0 must lie in (0, 1/K] (ts/ucb also accept 0)");
    }
  }
  if (schedule.update_mode != ScheduleSpec::UpdateMode::every && schedule.update_base < 2) {
    throw ConfigInvalid("update base/period must be >= 2");
  }
  const bool meb_family = (algo == AlgoKind::meb || algo == AlgoKind::meb_naive ||
                           algo == AlgoKind::rls_meb);
  if (meb_family && schedule.update_mode != ScheduleSpec::UpdateMode::every &&
      schedule.update_base > horizon) {
    throw ConfigInvalid("update schedule has no update times within the horizon");
  }
  if (schedule.warmup_len && *schedule.warmup_len < 0) {
    throw ConfigInvalid("warmup length must be >= 0");
  }
  if (schedule.warmup_len && *schedule.warmup_len >= horizon) {
    throw ConfigInvalid("warmup length must be below the horizon");
  }
  if (sigma_eta_sq < 0.0 || sigma_e_sq < 0.0) {
    throw ConfigInvalid("noise variances must be >= 0");
  }
  if (!(context_scale > 0.0)) throw ConfigInvalid("context scale must be > 0");
  if (estimated_variance && estvar_decay < 0.0) {
    throw ConfigInvalid("estvar decay must be >= 0");
  }
  if (!(lambda_burden >= 0.0) || lambda_burden >= 1.0) {
    throw ConfigInvalid("burden decay must lie in [0, 1)");
  }
  if (rls_lambda < 0.0) throw ConfigInvalid("rls lambda must be >= 0");
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["experiment.t"] = std::to_string(horizon);
  kv["experiment.n_exp"] = std::to_string(n_exp);
  kv["experiment.seed"] = std::to_string(base_seed);
  kv["experiment.stride"] = std::to_string(stride);
  kv["env.kind"] = to_string(env);
  kv["env.sigma_eta_sq"] = format_double(sigma_eta_sq);
  kv["env.sigma_e_sq"] = format_double(sigma_e_sq);
  kv["env.context_scale"] = format_double(context_scale);
  kv["env.threshold"] = format_double(threshold);
  kv["env.lambda_burden"] = format_double(lambda_burden);
  kv["env.availability_prob"] = format_double(availability_prob);
  kv["algo.kind"] = to_string(algo);
  kv["algo.rls_lambda"] = format_double(rls_lambda);
  if (prior_var) kv["algo.prior_var"] = format_double(*prior_var);
  if (reward_var) kv["algo.reward_var"] = format_double(*reward_var);
  if (bonus_scale) kv["algo.bonus_scale"] = format_double(*bonus_scale);
  kv["algo.estimated_variance"] = estimated_variance ? "true" : "false";
  kv["algo.estvar_decay"] = format_double(estvar_decay);
  kv["algo.init_rounds"] = std::to_string(init_rounds);
  kv["schedule.p0"] = format_double(schedule.p0);
  kv["schedule.p0_mode"] =
      schedule.p0_mode == ScheduleSpec::P0Mode::constant ? "constant" : "decaying";
  if (schedule.warmup_len) kv["schedule.warmup"] = std::to_string(*schedule.warmup_len);
  switch (schedule.update_mode) {
    case ScheduleSpec::UpdateMode::every:
      kv["schedule.update"] = "every";
      break;
    case ScheduleSpec::UpdateMode::geometric:
      kv["schedule.update"] = "geometric:" + std::to_string(schedule.update_base);
      break;
    case ScheduleSpec::UpdateMode::periodic:
      kv["schedule.update"] = "periodic:" + std::to_string(schedule.update_base);
      break;
  }
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  return out.str();
}

std::string ExperimentConfig::hash() const {
  // FNV-1a, 64 bit
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : kv) cfg.apply_override(key, value);
  return cfg;
}

void ExperimentConfig::apply_override(const std::string& dotted_key,
                                      const std::string& value) {
  const std::string& k = dotted_key;
  if (k == "experiment.t") horizon = parse_int(k, value);
  else if (k == "experiment.n_exp") n_exp = static_cast<int>(parse_int(k, value));
  else if (k == "experiment.seed") base_seed = static_cast<std::uint64_t>(parse_int(k, value));
  else if (k == "experiment.stride") stride = parse_int(k, value);
  else if (k == "experiment.out") out_path = value;
  else if (k == "env.kind") env = env_kind_from_string(value);
  else if (k == "env.sigma_eta_sq") sigma_eta_sq = parse_double(k, value);
  else if (k == "env.sigma_e_sq") sigma_e_sq = parse_double(k, value);
  else if (k == "env.context_scale") context_scale = parse_double(k, value);
  else if (k == "env.threshold") threshold = parse_double(k, value);
  else if (k == "env.lambda_burden") lambda_burden = parse_double(k, value);
  else if (k == "env.availability_prob") availability_prob = parse_double(k, value);
  else if (k == "algo.kind") {
    if (value == "meb-estvar") {  // shorthand for meb + estimated variance feed
      algo = AlgoKind::meb;
      estimated_variance = true;
    } else {
      algo = algo_kind_from_string(value);
    }
  } else if (k == "algo.rls_lambda") rls_lambda = parse_double(k, value);
  else if (k == "algo.prior_var") prior_var = parse_double(k, value);
  else if (k == "algo.reward_var") reward_var = parse_double(k, value);
  else if (k == "algo.bonus_scale") bonus_scale = parse_double(k, value);
  else if (k == "algo.estimated_variance") estimated_variance = (value == "true" || value == "1");
  else if (k == "algo.estvar_decay") estvar_decay = parse_double(k, value);
  else if (k == "algo.init_rounds") init_rounds = parse_int(k, value);
  else if (k == "schedule.p0") schedule.p0 = parse_double(k, value);
  else if (k == "schedule.p0_mode") {
    if (value == "constant") schedule.p0_mode = ScheduleSpec::P0Mode::constant;
    else if (value == "decaying") schedule.p0_mode = ScheduleSpec::P0Mode::decaying;
    else throw ConfigInvalid("p0_mode must be constant or decaying");
  } else if (k == "schedule.warmup") schedule.warmup_len = parse_int(k, value);
  else if (k == "schedule.update") {
    if (value == "every") {
      schedule.update_mode = ScheduleSpec::UpdateMode::every;
    } else if (value.rfind("geometric:", 0) == 0) {
      schedule.update_mode = ScheduleSpec::UpdateMode::geometric;
      schedule.update_base = parse_int(k, value.substr(10));
    } else if (value.rfind("periodic:", 0) == 0) {
      schedule.update_mode = ScheduleSpec::UpdateMode::periodic;
      schedule.update_base = parse_int(k, value.substr(9));
    } else {
      throw ConfigInvalid("update must be every, geometric:<n>, or periodic:<n>");
    }
  } else {
    throw ConfigInvalid("unknown config key '" + k + "'");
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigInvalid("line " + std::to_string(lineno) + " of " + path +
                          " is not key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigInvalid("key '" + key + "' outside any section");
    kv[section + "." + key] = value;
  }
  return from_map(kv);
}

}  // namespace meb
