#include "nfisac/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace nfisac {

using nlohmann::json;

namespace {

std::string join_key(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& parent) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError(join_key(parent, it.key()),
                        fmt::format("unknown config key '{}'", join_key(parent, it.key())));
    }
  }
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, fmt::format("config key '{}' must be a number", key));
  return v.get<double>();
}

int get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) {
    throw ConfigError(key, fmt::format("config key '{}' must be an integer", key));
  }
  return v.get<int>();
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key, fmt::format("config key '{}' must be a boolean", key));
  return v.get<bool>();
}

std::vector<double> get_number_list(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) {
    throw ConfigError(key, fmt::format("config key '{}' must be a non-empty array of numbers", key));
  }
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_number(e, key));
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, fmt::format("config key '{}' {}", key, what));
}

void parse_grid(const json& g, GridSpec& spec) {
  if (!g.is_object()) throw ConfigError("grid", "config key 'grid' must be an object");
  reject_unknown(g, {"d_min_m", "d_max_m", "n_d", "n_theta", "n_basins", "oversample"}, "grid");
  if (g.contains("d_min_m")) spec.d_min_m = get_number(g["d_min_m"], "grid.d_min_m");
  if (g.contains("d_max_m")) spec.d_max_m = get_number(g["d_max_m"], "grid.d_max_m");
  if (g.contains("n_d")) spec.n_d = get_int(g["n_d"], "grid.n_d");
  if (g.contains("n_theta")) spec.n_theta = get_int(g["n_theta"], "grid.n_theta");
  if (g.contains("n_basins")) spec.n_basins = get_int(g["n_basins"], "grid.n_basins");
  if (g.contains("oversample")) spec.oversample = get_number(g["oversample"], "grid.oversample");
  require(spec.d_min_m >= 0.0, "grid.d_min_m", "must be >= 0 (0 = automatic)");
  require(spec.d_max_m > 0.0, "grid.d_max_m", "must be > 0");
  require(spec.n_d >= 0, "grid.n_d", "must be >= 0 (0 = automatic)");
  require(spec.n_theta >= 0, "grid.n_theta", "must be >= 0 (0 = automatic)");
  require(spec.n_basins >= 1, "grid.n_basins", "must be >= 1");
  require(spec.oversample > 0.0, "grid.oversample", "must be > 0");
}

void parse_optimizer(const json& o, OptimizerConfig& opt) {
  if (!o.is_object()) throw ConfigError("optimizer", "config key 'optimizer' must be an object");
  reject_unknown(o,
                 {"max_iters", "grad_tol", "armijo_c", "backtrack_factor", "initial_step",
                  "max_backtracks"},
                 "optimizer");
  if (o.contains("max_iters")) opt.max_iters = get_int(o["max_iters"], "optimizer.max_iters");
  if (o.contains("grad_tol")) opt.grad_tol = get_number(o["grad_tol"], "optimizer.grad_tol");
  if (o.contains("armijo_c")) opt.armijo_c = get_number(o["armijo_c"], "optimizer.armijo_c");
  if (o.contains("backtrack_factor")) {
    opt.backtrack_factor = get_number(o["backtrack_factor"], "optimizer.backtrack_factor");
  }
  if (o.contains("initial_step")) {
    opt.initial_step = get_number(o["initial_step"], "optimizer.initial_step");
  }
  if (o.contains("max_backtracks")) {
    opt.max_backtracks = get_int(o["max_backtracks"], "optimizer.max_backtracks");
  }
  try {
    opt.validate();
  } catch (const ModelError& e) {
    throw ConfigError("optimizer", e.what());
  }
}

void parse_lm(const json& o, LmSettings& lm) {
  if (!o.is_object()) throw ConfigError("lm", "config key 'lm' must be an object");
  reject_unknown(o,
                 {"max_iters", "lambda0", "lambda_up", "lambda_down", "tol_score", "fd_step_d_m",
                  "fd_step_theta_rad", "tol_step_d_m", "tol_step_theta_rad", "delay_aware"},
                 "lm");
  if (o.contains("max_iters")) lm.max_iters = get_int(o["max_iters"], "lm.max_iters");
  auto num = [&](const char* k, double& dst) {
    if (o.contains(k)) dst = get_number(o[k], std::string("lm.") + k);
  };
  num("lambda0", lm.lambda0);
  num("lambda_up", lm.lambda_up);
  num("lambda_down", lm.lambda_down);
  num("tol_score", lm.tol_score);
  num("fd_step_d_m", lm.fd_step_d_m);
  num("fd_step_theta_rad", lm.fd_step_theta_rad);
  num("tol_step_d_m", lm.tol_step_d_m);
  num("tol_step_theta_rad", lm.tol_step_theta_rad);
  if (o.contains("delay_aware")) lm.delay_aware = get_bool(o["delay_aware"], "lm.delay_aware");
  try {
    lm.validate();
  } catch (const ModelError& e) {
    throw ConfigError("lm", e.what());
  }
}

void parse_scenario(const json& s, Scenario& sc) {
  if (!s.is_object()) throw ConfigError("scenario", "config key 'scenario' must be an object");
  reject_unknown(s, {"radius_m", "d_m", "theta_deg", "seed"}, "scenario");
  if (s.contains("radius_m")) sc.radius_m = get_number(s["radius_m"], "scenario.radius_m");
  if (s.contains("d_m")) sc.d_m = get_number(s["d_m"], "scenario.d_m");
  if (s.contains("theta_deg")) {
    sc.theta_rad = get_number(s["theta_deg"], "scenario.theta_deg") * kPi / 180.0;
  }
  if (s.contains("seed")) {
    if (!s["seed"].is_number_unsigned()) {
      throw ConfigError("scenario.seed", "config key 'scenario.seed' must be a non-negative integer");
    }
    sc.seed = s["seed"].get<std::uint64_t>();
  }
}

// Serializes with the same precision nlohmann uses for doubles (round-trip).
json to_json(const RunConfig& rc) {
  const SweepConfig& s = rc.sweep;
  const OfdmConfig& o = s.ofdm;
  json j;
  j["carrier_ghz"] = o.carrier_hz / 1e9;
  j["subcarriers"] = o.m_subcarriers;
  j["subcarrier_spacing_khz"] = o.delta_f_hz / 1e3;
  j["symbols"] = o.n_symbols;
  j["cp_fraction"] = o.t_cp_s * o.delta_f_hz;
  j["tx_power_mw"] = o.p_t_w * 1e3;
  if (o.sigma2_w > 0.0) {
    j["sigma2_dbm"] = watts_to_dbm(o.sigma2_w);
  } else {
    j["sigma2_dbm"] = "0 W";
  }
  j["doppler_hz"] = o.nu0_hz;
  j["n_antennas"] = s.n_antennas;
  j["radii_m"] = s.radii_m;
  j["distances_m"] = s.distances_m;
  if (s.theta_policy == ThetaPolicy::kUniform) {
    j["theta_deg"] = "uniform";
  } else {
    j["theta_deg"] = s.theta_fixed_rad * 180.0 / kPi;
  }
  j["trials"] = s.trials_per_point;
  j["master_seed"] = s.master_seed;
  j["mc_subcarriers"] = s.mc_subcarriers;
  j["zero_noise"] = s.zero_noise;
  j["workers"] = s.workers;
  j["verbosity"] = rc.verbosity;
  j["output"] = rc.output_path;
  j["grid"] = {{"d_min_m", s.grid.d_min_m},   {"d_max_m", s.grid.d_max_m},
               {"n_d", s.grid.n_d},           {"n_theta", s.grid.n_theta},
               {"n_basins", s.grid.n_basins}, {"oversample", s.grid.oversample}};
  j["optimizer"] = {{"max_iters", s.optimizer.max_iters},
                    {"grad_tol", s.optimizer.grad_tol},
                    {"armijo_c", s.optimizer.armijo_c},
                    {"backtrack_factor", s.optimizer.backtrack_factor},
                    {"initial_step", s.optimizer.initial_step},
                    {"max_backtracks", s.optimizer.max_backtracks}};
  j["lm"] = {{"max_iters", s.lm.max_iters},
             {"lambda0", s.lm.lambda0},
             {"lambda_up", s.lm.lambda_up},
             {"lambda_down", s.lm.lambda_down},
             {"tol_score", s.lm.tol_score},
             {"fd_step_d_m", s.lm.fd_step_d_m},
             {"fd_step_theta_rad", s.lm.fd_step_theta_rad},
             {"tol_step_d_m", s.lm.tol_step_d_m},
             {"tol_step_theta_rad", s.lm.tol_step_theta_rad},
             {"delay_aware", s.lm.delay_aware}};
  j["scenario"] = {{"radius_m", rc.scenario.radius_m},
                   {"d_m", rc.scenario.d_m},
                   {"theta_deg", rc.scenario.theta_rad * 180.0 / kPi},
                   {"seed", rc.scenario.seed}};
  return j;
}

}  // namespace

double parse_power_to_watts(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  double value = 0.0;
  std::string unit;
  if (!(in >> value)) {
    throw ConfigError(key, fmt::format("config key '{}': cannot parse power '{}'", key, text));
  }
  in >> unit;
  std::string rest;
  if (in >> rest) {
    throw ConfigError(key, fmt::format("config key '{}': trailing text in '{}'", key, text));
  }
  if (unit.empty() || unit == "dBm") return dbm_to_watts(value);
  if (unit == "dBW") return std::pow(10.0, value / 10.0);
  if (unit == "W") {
    if (value < 0.0) throw ConfigError(key, fmt::format("config key '{}' must be >= 0 W", key));
    return value;
  }
  if (unit == "mW") {
    if (value < 0.0) throw ConfigError(key, fmt::format("config key '{}' must be >= 0 mW", key));
    return value * 1e-3;
  }
  throw ConfigError(key, fmt::format("config key '{}': unknown power unit '{}'", key, unit));
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", fmt::format("malformed config: {}", e.what()));
  }
  if (j.is_null()) j = json::object();
  if (!j.is_object()) throw ConfigError("", "config root must be a JSON object");

  reject_unknown(j,
                 {"carrier_ghz", "subcarriers", "subcarrier_spacing_khz", "symbols", "cp_fraction",
                  "tx_power_mw", "sigma2_dbm", "doppler_hz", "n_antennas", "radii_m",
                  "distances_m", "theta_deg", "trials", "master_seed", "mc_subcarriers",
                  "zero_noise", "workers", "verbosity", "output", "grid", "optimizer", "lm",
                  "scenario"},
                 "");

  RunConfig rc = default_run_config();
  SweepConfig& s = rc.sweep;
  OfdmConfig& o = s.ofdm;

  double cp_fraction = o.t_cp_s * o.delta_f_hz;
  if (j.contains("carrier_ghz")) {
    o.carrier_hz = get_number(j["carrier_ghz"], "carrier_ghz") * 1e9;
    require(o.carrier_hz > 0.0, "carrier_ghz", "must be > 0");
  }
  if (j.contains("subcarriers")) {
    o.m_subcarriers = get_int(j["subcarriers"], "subcarriers");
    require(o.m_subcarriers >= 1, "subcarriers", "must be >= 1");
  }
  if (j.contains("subcarrier_spacing_khz")) {
    o.delta_f_hz = get_number(j["subcarrier_spacing_khz"], "subcarrier_spacing_khz") * 1e3;
    require(o.delta_f_hz > 0.0, "subcarrier_spacing_khz", "must be > 0");
  }
  if (j.contains("symbols")) {
    o.n_symbols = get_int(j["symbols"], "symbols");
    require(o.n_symbols >= 1, "symbols", "must be >= 1");
  }
  if (j.contains("cp_fraction")) {
    cp_fraction = get_number(j["cp_fraction"], "cp_fraction");
    require(cp_fraction >= 0.0, "cp_fraction", "must be >= 0");
  }
  o.t_cp_s = cp_fraction / o.delta_f_hz;
  if (j.contains("tx_power_mw")) {
    o.p_t_w = get_number(j["tx_power_mw"], "tx_power_mw") * 1e-3;
    require(o.p_t_w > 0.0, "tx_power_mw", "must be > 0");
  }
  if (j.contains("sigma2_dbm")) {
    const json& v = j["sigma2_dbm"];
    if (v.is_number()) {
      o.sigma2_w = dbm_to_watts(v.get<double>());
    } else if (v.is_string()) {
      o.sigma2_w = parse_power_to_watts(v.get<std::string>(), "sigma2_dbm");
    } else {
      throw ConfigError("sigma2_dbm", "config key 'sigma2_dbm' must be a number or a string");
    }
  }
  if (j.contains("doppler_hz")) {
    o.nu0_hz = get_number(j["doppler_hz"], "doppler_hz");
    require(std::abs(o.nu0_hz) <= o.delta_f_hz / 100.0, "doppler_hz",
            "must satisfy |doppler| <= subcarrier spacing / 100");
  }
  if (j.contains("n_antennas")) {
    s.n_antennas = get_int(j["n_antennas"], "n_antennas");
    require(s.n_antennas >= 2, "n_antennas", "must be >= 2");
  }
  if (j.contains("radii_m")) s.radii_m = get_number_list(j["radii_m"], "radii_m");
  for (double r : s.radii_m) require(r > 0.0, "radii_m", "entries must be > 0");
  if (j.contains("distances_m")) s.distances_m = get_number_list(j["distances_m"], "distances_m");
  for (double d : s.distances_m) {
    for (double r : s.radii_m) {
      require(d > r, "distances_m",
              fmt::format("entry {} m is not outside the array (d <= R = {} m)", d, r));
    }
  }
  if (j.contains("theta_deg")) {
    const json& v = j["theta_deg"];
    if (v.is_string() && v.get<std::string>() == "uniform") {
      s.theta_policy = ThetaPolicy::kUniform;
    } else if (v.is_number()) {
      s.theta_policy = ThetaPolicy::kFixed;
      s.theta_fixed_rad = v.get<double>() * kPi / 180.0;
    } else {
      throw ConfigError("theta_deg", "config key 'theta_deg' must be a number or \"uniform\"");
    }
  }
  if (j.contains("trials")) {
    s.trials_per_point = get_int(j["trials"], "trials");
    require(s.trials_per_point >= 1, "trials", "must be >= 1");
  }
  if (j.contains("master_seed")) {
    if (!j["master_seed"].is_number_unsigned()) {
      throw ConfigError("master_seed", "config key 'master_seed' must be a non-negative integer");
    }
    s.master_seed = j["master_seed"].get<std::uint64_t>();
  }
  if (j.contains("mc_subcarriers")) {
    s.mc_subcarriers = get_int(j["mc_subcarriers"], "mc_subcarriers");
    require(s.mc_subcarriers >= 0, "mc_subcarriers", "must be >= 0 (0 = use subcarriers)");
  }
  if (j.contains("zero_noise")) s.zero_noise = get_bool(j["zero_noise"], "zero_noise");
  if (j.contains("workers")) {
    s.workers = get_int(j["workers"], "workers");
    require(s.workers >= 0, "workers", "must be >= 0");
  }
  if (j.contains("verbosity")) rc.verbosity = get_int(j["verbosity"], "verbosity");
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output", "config key 'output' must be a string");
    rc.output_path = j["output"].get<std::string>();
  }
  if (j.contains("grid")) parse_grid(j["grid"], s.grid);
  if (j.contains("optimizer")) parse_optimizer(j["optimizer"], s.optimizer);
  if (j.contains("lm")) parse_lm(j["lm"], s.lm);
  if (j.contains("scenario")) parse_scenario(j["scenario"], rc.scenario);

  validate_run_config(rc);
  return rc;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot open config file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void validate_run_config(const RunConfig& rc) {
  try {
    rc.sweep.validate();
  } catch (const ModelError& e) {
    throw ConfigError("", e.what());
  }
  const Scenario& sc = rc.scenario;
  require(sc.radius_m > 0.0, "scenario.radius_m", "must be > 0");
  require(sc.d_m > sc.radius_m, "scenario.d_m", "must exceed scenario.radius_m (d <= R)");
}

std::string serialize_config(const RunConfig& config) { return to_json(config).dump(2); }

}  // namespace nfisac
