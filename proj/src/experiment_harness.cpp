#include "nfisac/experiment_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace nfisac {

OfdmConfig SweepConfig::trial_ofdm() const {
  OfdmConfig c = ofdm;
  if (mc_subcarriers > 0) c.m_subcarriers = mc_subcarriers;
  return c;
}

void SweepConfig::validate() const {
  if (radii_m.empty()) throw ModelError("radii_m must not be empty");
  if (distances_m.empty()) throw ModelError("distances_m must not be empty");
  for (double r : radii_m) {
    if (!(r > 0.0)) throw ModelError("radii_m entries must be > 0");
  }
  for (double d : distances_m) {
    if (!(d > 0.0)) throw ModelError("distances_m entries must be > 0");
    for (double r : radii_m) {
      if (!(d > r)) throw ModelError("distances_m entries must exceed every radius (d <= R)");
    }
  }
  if (n_antennas < 2) throw ModelError("n_antennas must be >= 2");
  if (trials_per_point < 1) throw ModelError("trials must be >= 1");
  if (mc_subcarriers < 0) throw ModelError("mc_subcarriers must be >= 0");
  if (workers < 0) throw ModelError("workers must be >= 0");
  ofdm.validate();
  trial_ofdm().validate();
  grid.validate();
  lm.validate();
  optimizer.validate();
}

bool is_success(const TrialRecord& t) {
  if (!t.converged || t.failed) return false;
  return std::abs(t.d_hat_m - t.d_true_m) < 0.5 &&
         std::abs(angle_difference(t.theta_hat_rad, t.theta_true_rad)) < 2.0 * kPi / 180.0;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t radius_index,
                         std::size_t distance_index, std::size_t trial_index) {
  return derive_seed(derive_seed(derive_seed(master, radius_index), distance_index), trial_index);
}

TrialRecord run_trial(double radius_m, double d_true_m, double theta_true_rad,
                      const SweepConfig& config, std::uint64_t seed) {
  const OfdmConfig ofdm = config.trial_ofdm();
  const UcaGeometry geom(config.n_antennas, radius_m, ofdm.wavelength_m());
  const PolarPosition truth{d_true_m, wrap_angle(theta_true_rad)};
  require_outside_array(geom, truth);

  TrialRecord rec;
  rec.radius_m = radius_m;
  rec.d_true_m = d_true_m;
  rec.theta_true_rad = truth.theta_rad;
  rec.seed = seed;

  const CVector f = optimize_beamformer(geom, truth, ofdm, config.optimizer).beamformer;
  const PilotGrid pilots = generate_pilots(ofdm, derive_seed(seed, 1));
  OfdmConfig synth = ofdm;
  if (config.zero_noise) synth.sigma2_w = 0.0;
  Observation obs = synthesize_observation(geom, truth, f, synth, pilots, derive_seed(seed, 2));
  obs.config = ofdm;

  rec.snr_db = ue_received_snr(geom, truth, f, ofdm).db;
  rec.rate_opt_bps = achievable_rate(geom, steered_beamformer(geom, truth), ofdm, truth);

  try {
    const MlEstimate est = estimate(LikelihoodModel(obs, geom), config.grid, config.lm);
    rec.d_hat_m = est.d_hat_m;
    rec.theta_hat_rad = est.theta_hat_rad;
    rec.converged = est.converged;
    rec.lm_iterations = est.iterations;
    const PolarPosition guess{est.d_hat_m, est.theta_hat_rad};
    rec.rate_est_bps = achievable_rate(geom, steered_beamformer(geom, guess), ofdm, truth);
  } catch (const std::exception&) {
    rec.failed = true;
    rec.d_hat_m = std::numeric_limits<double>::quiet_NaN();
    rec.theta_hat_rad = std::numeric_limits<double>::quiet_NaN();
    rec.rate_est_bps = 0.0;
  }
  rec.success = is_success(rec);
  return rec;
}

namespace {

struct TrialTask {
  std::size_t ri;
  std::size_t di;
  std::size_t ti;
};

double draw_theta(const SweepConfig& config, std::uint64_t seed) {
  if (config.theta_policy == ThetaPolicy::kFixed) return config.theta_fixed_rad;
  std::mt19937_64 rng(derive_seed(seed, 0));
  return std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
}

}  // namespace

std::vector<TrialRecord> run_trials(const SweepConfig& config, const ProgressFn& progress) {
  config.validate();
  std::vector<TrialTask> tasks;
  for (std::size_t ri = 0; ri < config.radii_m.size(); ++ri) {
    for (std::size_t di = 0; di < config.distances_m.size(); ++di) {
      for (std::size_t ti = 0; ti < static_cast<std::size_t>(config.trials_per_point); ++ti) {
        tasks.push_back({ri, di, ti});
      }
    }
  }

  std::vector<TrialRecord> out(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;

  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const TrialTask& t = tasks[i];
      const std::uint64_t seed = trial_seed(config.master_seed, t.ri, t.di, t.ti);
      out[i] = run_trial(config.radii_m[t.ri], config.distances_m[t.di], draw_theta(config, seed),
                         config, seed);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(finished, tasks.size());
      }
    }
  };

  unsigned n_workers = config.workers > 0 ? static_cast<unsigned>(config.workers)
                                          : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

namespace {

// RMSE and its delta-method standard error from squared errors.
std::pair<double, double> rmse_with_se(const std::vector<double>& sq) {
  if (sq.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const double n = static_cast<double>(sq.size());
  double mean = 0.0;
  for (double v : sq) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : sq) var += (v - mean) * (v - mean);
  var = sq.size() > 1 ? var / (n - 1.0) : 0.0;
  const double rmse = std::sqrt(mean);
  const double se = rmse > 0.0 ? std::sqrt(var / n) / (2.0 * rmse) : 0.0;
  return {rmse, se};
}

CrlbRow crlb_point(const UcaGeometry& geom, const PolarPosition& pos, const OfdmConfig& ofdm,
                   const OptimizerConfig& opt) {
  CrlbRow row;
  row.radius_m = geom.radius_m();
  row.d_m = pos.d_m;
  try {
    const CVector f = optimize_beamformer(geom, pos, ofdm, opt).beamformer;
    const CrlbBound b = crlb(geom, pos, f, ofdm);
    row.crlb_d_m = std::sqrt(b.var_d);
    row.crlb_theta_rad = std::sqrt(b.var_theta);
    row.trace = b.trace;
    row.snr_db = ue_received_snr(geom, pos, f, ofdm).db;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
    row.crlb_d_m = row.crlb_theta_rad = row.trace = row.snr_db =
        std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

}  // namespace

PointSummary summarize_point(const std::vector<TrialRecord>& trials, double radius_m, double d_m,
                             const SweepConfig& config) {
  PointSummary s;
  s.radius_m = radius_m;
  s.d_m = d_m;
  std::vector<double> sq_d;
  std::vector<double> sq_t;
  double snr = 0.0, rate_est = 0.0, rate_opt = 0.0;
  int converged = 0, success = 0;
  for (const TrialRecord& t : trials) {
    if (t.radius_m != radius_m || t.d_true_m != d_m) continue;
    ++s.n_trials;
    snr += t.snr_db;
    rate_est += t.rate_est_bps;
    rate_opt += t.rate_opt_bps;
    if (t.failed) {
      ++s.n_failed;
      continue;
    }
    converged += t.converged ? 1 : 0;
    success += t.success ? 1 : 0;
    const double ed = t.d_hat_m - t.d_true_m;
    const double et = angle_difference(t.theta_hat_rad, t.theta_true_rad);
    sq_d.push_back(ed * ed);
    sq_t.push_back(et * et);
  }
  if (s.n_trials > 0) {
    const double n = s.n_trials;
    s.mean_snr_db = snr / n;
    s.mean_rate_est_bps = rate_est / n;
    s.mean_rate_opt_bps = rate_opt / n;
    s.convergence_rate = converged / n;
    s.success_rate = success / n;
  }
  std::tie(s.rmse_d_m, s.rmse_d_se_m) = rmse_with_se(sq_d);
  std::tie(s.rmse_theta_rad, s.rmse_theta_se_rad) = rmse_with_se(sq_t);

  // The bound uses the same waveform as the trials so the two are comparable.
  const OfdmConfig ofdm = config.trial_ofdm();
  const UcaGeometry geom(config.n_antennas, radius_m, ofdm.wavelength_m());
  const CrlbRow b = crlb_point(geom, {d_m, config.theta_fixed_rad}, ofdm, config.optimizer);
  s.crlb_d_m = b.crlb_d_m;
  s.crlb_theta_rad = b.crlb_theta_rad;
  return s;
}

SweepSummary rmse_sweep(const SweepConfig& config, const ProgressFn& progress) {
  SweepSummary out;
  out.trials = run_trials(config, progress);
  for (double r : config.radii_m) {
    for (double d : config.distances_m) out.points.push_back(summarize_point(out.trials, r, d, config));
  }
  return out;
}

SweepSummary rate_sweep(const SweepConfig& config, const ProgressFn& progress) {
  return rmse_sweep(config, progress);
}

std::vector<CrlbRow> crlb_sweep(const SweepConfig& config) {
  config.validate();
  std::vector<CrlbRow> rows;
  for (double r : config.radii_m) {
    const UcaGeometry geom(config.n_antennas, r, config.ofdm.wavelength_m());
    for (double d : config.distances_m) {
      rows.push_back(crlb_point(geom, {d, config.theta_fixed_rad}, config.ofdm, config.optimizer));
    }
  }
  return rows;
}

}  // namespace nfisac
