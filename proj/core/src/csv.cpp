#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "meb/errors.hpp"
#include "meb/harness.hpp"

namespace meb {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void emit_csv(const RunResult& result, const std::string& path, std::int64_t stride) {
  if (stride < 1) throw ConfigInvalid("stride must be >= 1");
  std::ostringstream out;
  out << "t,std_regret_mean,std_regret_sd,clip_regret_mean,clip_regret_sd,"
         "avg_regret,est_err_mean,est_err_sd,fallbacks\n";
  for (std::int64_t t = stride; t <= result.horizon; t += stride) {
    const std::int64_t i = t - 1;
    out << t << ',' << fmt(result.std_regret_mean[i]) << ',' << fmt(result.std_regret_sd[i])
        << ',' << fmt(result.clip_regret_mean[i]) << ',' << fmt(result.clip_regret_sd[i])
        << ',' << fmt(result.clip_regret_mean[i] / static_cast<double>(t)) << ','
        << fmt(result.est_err_mean[i]) << ',' << fmt(result.est_err_sd[i]) << ','
        << fmt(result.fallback_mean[i]) << '\n';
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << out.str();
  if (!file) throw IoError("failed writing '" + path + "'");

  nlohmann::ordered_json meta;
  meta["config_hash"] = result.config_hash;
  meta["context_scale"] = result.context_scale;
  meta["env_state_depends_on_actions"] = result.env_state_depends_on_actions;
  meta["n_exp"] = result.n_exp;
  meta["t"] = result.horizon;
  meta["stride"] = stride;
  meta["seeds"] = result.seeds;
  nlohmann::ordered_json cfg;
  std::istringstream canon(result.config.canonical());
  std::string line;
  while (std::getline(canon, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  meta["config"] = cfg;

  std::ofstream meta_file(path + ".meta.json", std::ios::binary);
  if (!meta_file) throw IoError("cannot open '" + path + ".meta.json' for writing");
  meta_file << meta.dump(2) << '\n';
  if (!meta_file) throw IoError("failed writing '" + path + ".meta.json'");
}

void emit_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file << "sigma_eta_sq,sigma_e_sq";
  for (AlgoKind algo : result.algos) file << ',' << to_string(algo);
  file << '\n';
  for (const auto& row : result.rows) {
    file << fmt(row.sigma_eta_sq) << ',' << fmt(row.sigma_e_sq);
    for (double v : row.average_regret) file << ',' << fmt(v);
    file << '\n';
  }
  if (!file) throw IoError("failed writing '" + path + "'");
}

}  // namespace meb
