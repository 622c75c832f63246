// nfisac: bounds, beam design, estimation and Monte Carlo sweeps for a
// near-field UCA sensing/communication link.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime error.
// Failures print one JSON line prefixed by "nfisac-error " on stderr.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "nfisac/beamformer_opt.hpp"
#include "nfisac/csv_output.hpp"
#include "nfisac/experiment_harness.hpp"
#include "nfisac/run_config.hpp"

namespace {

using namespace nfisac;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> workers;
  std::optional<int> mc_subcarriers;
  bool reduced_m = false;
  bool full_m = false;
  bool zero_noise = false;
  int verbose = 0;
  std::vector<double> radii;
  std::vector<double> distances;
  std::string theta_deg;
};

void report_error(const std::string& kind, const std::string& key, const std::string& message) {
  nlohmann::json j{{"kind", kind}, {"key", key}, {"message", message}};
  std::cerr << "nfisac-error " << j.dump() << std::endl;
}

RunConfig resolve(const Options& o, const std::string& command) {
  RunConfig rc = o.config_path.empty() ? default_run_config() : parse_config_file(o.config_path);
  SweepConfig& s = rc.sweep;
  if (o.reduced_m && o.full_m) throw UsageError("--reduced-m and --full-m are mutually exclusive");
  if (o.mc_subcarriers && o.full_m) {
    throw UsageError("--mc-subcarriers and --full-m are mutually exclusive");
  }
  if (o.seed) {
    s.master_seed = *o.seed;
    rc.scenario.seed = *o.seed;
  }
  if (o.trials) s.trials_per_point = *o.trials;
  if (o.workers) s.workers = *o.workers;
  if (o.mc_subcarriers) s.mc_subcarriers = *o.mc_subcarriers;
  if (o.reduced_m && s.mc_subcarriers == 0) s.mc_subcarriers = 128;
  if (o.full_m) s.mc_subcarriers = 0;
  if (o.zero_noise) s.zero_noise = true;
  if (o.verbose > 0) rc.verbosity = o.verbose;
  if (!o.radii.empty()) {
    s.radii_m = o.radii;
    rc.scenario.radius_m = o.radii.front();
  }
  if (!o.distances.empty()) {
    s.distances_m = o.distances;
    rc.scenario.d_m = o.distances.front();
  }
  if (!o.theta_deg.empty()) {
    if (o.theta_deg == "uniform") {
      s.theta_policy = ThetaPolicy::kUniform;
    } else {
      double deg = 0.0;
      try {
        std::size_t used = 0;
        deg = std::stod(o.theta_deg, &used);
        if (used != o.theta_deg.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw UsageError("--theta-deg expects a number or 'uniform'");
      }
      s.theta_policy = ThetaPolicy::kFixed;
      s.theta_fixed_rad = deg * kPi / 180.0;
      rc.scenario.theta_rad = s.theta_fixed_rad;
    }
  }
  if (!o.out.empty()) rc.output_path = o.out;
  if (rc.output_path.empty()) rc.output_path = command + ".csv";
  validate_run_config(rc);
  return rc;
}

std::uint64_t seed_of(const RunConfig& rc, const std::string& command) {
  return (command == "estimate" || command == "optimize-beamformer") ? rc.scenario.seed
                                                                     : rc.sweep.master_seed;
}

// Writes to a temporary sibling first so a failed run never leaves a partial file.
template <typename Body>
void write_file(const std::string& path, Body&& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write output file '{}'", path));
    body(out);
    out.flush();
    if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error(fmt::format("cannot move output into '{}': {}", path, ec.message()));
}

void write_outputs(const RunConfig& rc, const std::string& command,
                   const std::function<void(std::ostream&)>& body) {
  const std::uint64_t seed = seed_of(rc, command);
  write_file(rc.output_path, [&](std::ostream& out) {
    out << provenance_line(seed, command) << '\n';
    body(out);
  });
  write_file(rc.output_path + ".json", [&](std::ostream& out) {
    nlohmann::json manifest = nlohmann::json::parse(serialize_config(rc));
    manifest["command"] = command;
    manifest["tool_version"] = kToolVersion;
    manifest["seed"] = seed;
    out << manifest.dump(2) << '\n';
  });
}

ProgressFn progress_reporter(int verbosity) {
  if (verbosity <= 0) return {};
  return [](std::size_t done, std::size_t total) {
    if (done == total || done % 10 == 0) std::cerr << fmt::format("\rtrials {}/{}", done, total);
    if (done == total) std::cerr << '\n';
  };
}

std::string sibling(const std::string& path, const std::string& tag) {
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path() / (p.stem().string() + tag + p.extension().string());
  return out.string();
}

int run(const std::string& command, const Options& opts) {
  const RunConfig rc = resolve(opts, command);
  const SweepConfig& s = rc.sweep;

  if (command == "crlb-sweep") {
    const std::vector<CrlbRow> rows = crlb_sweep(s);
    write_outputs(rc, command, [&](std::ostream& out) { write_crlb_csv(out, rows); });
  } else if (command == "optimize-beamformer") {
    const Scenario& sc = rc.scenario;
    const UcaGeometry geom(s.n_antennas, sc.radius_m, s.ofdm.wavelength_m());
    const PolarPosition pos{sc.d_m, sc.theta_rad};
    const OptimizerResult r = optimize_beamformer(geom, pos, s.ofdm, s.optimizer);
    const double baseline =
        trace_objective(conjugate_focus_beamformer(geom, pos), geom, pos, s.ofdm);
    write_outputs(rc, command, [&](std::ostream& out) { write_beamformer_csv(out, r.beamformer); });
    std::cout << fmt::format(
        "trace={:.17g} baseline_trace={:.17g} iterations={} converged={} grad_norm={:.6g}\n",
        r.trace_history.back(), baseline, r.iterations, r.converged, r.final_grad_norm);
  } else if (command == "estimate") {
    const Scenario& sc = rc.scenario;
    const OfdmConfig ofdm = s.trial_ofdm();
    const UcaGeometry geom(s.n_antennas, sc.radius_m, ofdm.wavelength_m());
    const PolarPosition truth{sc.d_m, wrap_angle(sc.theta_rad)};
    const CVector f = optimize_beamformer(geom, truth, ofdm, s.optimizer).beamformer;
    const PilotGrid pilots = generate_pilots(ofdm, derive_seed(sc.seed, 1));
    OfdmConfig synth = ofdm;
    if (s.zero_noise) synth.sigma2_w = 0.0;
    Observation obs = synthesize_observation(geom, truth, f, synth, pilots, derive_seed(sc.seed, 2));
    obs.config = ofdm;
    const EstimateRow row{truth.d_m, truth.theta_rad,
                          estimate(LikelihoodModel(obs, geom), s.grid, s.lm)};
    write_outputs(rc, command, [&](std::ostream& out) { write_estimate_csv(out, row); });
    std::cout << fmt::format("d_hat_m={:.12g} theta_hat_deg={:.12g} converged={}\n",
                             row.estimate.d_hat_m, row.estimate.theta_hat_rad * 180.0 / kPi,
                             row.estimate.converged);
  } else if (command == "monte-carlo") {
    const SweepSummary sum = rmse_sweep(s, progress_reporter(rc.verbosity));
    write_outputs(rc, command, [&](std::ostream& out) { write_summary_csv(out, sum.points); });
    RunConfig trials_rc = rc;
    trials_rc.output_path = sibling(rc.output_path, "_trials");
    write_outputs(trials_rc, command, [&](std::ostream& out) { write_trials_csv(out, sum.trials); });
  } else if (command == "rate-sweep") {
    const SweepSummary sum = rate_sweep(s, progress_reporter(rc.verbosity));
    write_outputs(rc, command, [&](std::ostream& out) { write_rate_csv(out, sum.points); });
  } else {
    throw UsageError(fmt::format("unknown subcommand '{}'", command));
  }
  if (rc.verbosity > 0) std::cerr << "wrote " << rc.output_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field UCA sensing and communication toolkit"};
  app.require_subcommand(1);
  Options opts;

  const char* commands[][2] = {
      {"crlb-sweep", "Closed-form range/angle bounds per (radius, distance)"},
      {"optimize-beamformer", "CRLB-optimal transmit beam for the scenario position"},
      {"estimate", "Synthesize one slot for the scenario and run the ML estimator"},
      {"monte-carlo", "RMSE, bound, convergence and rate statistics per (radius, distance)"},
      {"rate-sweep", "Mean achievable rates with estimated and true-position beams"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c[0], c[1]);
    sub->add_option("--config", opts.config_path, "JSON config file")
        ->envname("NFISAC_CONFIG")
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opts.out, "Output CSV path (default <command>.csv); a .json sidecar is written next to it");
    sub->add_option("--seed", opts.seed, "Override master_seed (and the scenario seed)");
    sub->add_option("--trials", opts.trials, "Monte Carlo trials per (radius, distance)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--workers", opts.workers, "Worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--mc-subcarriers", opts.mc_subcarriers, "Subcarriers used by trials")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--reduced-m", opts.reduced_m, "Run trials with the reduced subcarrier count (128 unless configured)");
    sub->add_flag("--full-m", opts.full_m, "Run trials with the full configured subcarrier count");
    sub->add_flag("--zero-noise", opts.zero_noise, "Noise-free samples (SNR and rates still use sigma2)");
    sub->add_option("--radius", opts.radii, "Array radii in m (the first is the scenario radius)");
    sub->add_option("--distance", opts.distances, "UE distances in m (the first is the scenario distance)");
    sub->add_option("--theta-deg", opts.theta_deg, "UE azimuth in degrees, or 'uniform'");
    sub->add_flag("-v,--verbose", opts.verbose, "Progress on stderr (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", "", e.what());
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opts);
  } catch (const ConfigError& e) {
    report_error("config", e.key(), e.what());
    return 1;
  } catch (const UsageError& e) {
    report_error("usage", "", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("runtime", "", e.what());
    return 2;
  }
}
