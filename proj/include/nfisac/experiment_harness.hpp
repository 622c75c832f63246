#pragma once

// Monte Carlo sweeps over (array radius, UE distance). Each trial optimizes the
// sensing beam at the true position, synthesizes one slot, runs the ML
// estimator and records the downlink rates with beams steered at the estimate
// and at the truth.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nfisac/beamformer_opt.hpp"
#include "nfisac/ml_estimator.hpp"

namespace nfisac {

enum class ThetaPolicy { kUniform, kFixed };

struct SweepConfig {
  std::vector<double> radii_m{0.5, 1.0, 2.0, 5.0};
  std::vector<double> distances_m{10.0, 20.0, 50.0, 100.0, 200.0, 400.0};
  int n_antennas = 64;
  ThetaPolicy theta_policy = ThetaPolicy::kUniform;
  double theta_fixed_rad = 0.0;
  int trials_per_point = 200;
  std::uint64_t master_seed = 20240601;
  OfdmConfig ofdm = OfdmConfig::nominal();
  int mc_subcarriers = 128;  // subcarriers used by Monte Carlo trials; 0 keeps ofdm's M
  GridSpec grid;
  LmSettings lm;
  OptimizerConfig optimizer;
  int workers = 0;  // 0 = hardware concurrency
  bool zero_noise = false;  // noiseless samples; SNR and rates still use ofdm.sigma2_w

  /// The waveform Monte Carlo trials run with (Δf unchanged, M reduced).
  OfdmConfig trial_ofdm() const;
  void validate() const;
};

struct TrialRecord {
  double radius_m = 0.0;
  double d_true_m = 0.0;
  double theta_true_rad = 0.0;
  double d_hat_m = 0.0;
  double theta_hat_rad = 0.0;
  bool converged = false;
  bool success = false;
  bool failed = false;  // estimator threw; estimate fields are NaN
  int lm_iterations = 0;
  double snr_db = 0.0;
  double rate_est_bps = 0.0;
  double rate_opt_bps = 0.0;
  std::uint64_t seed = 0;
};

struct PointSummary {
  double radius_m = 0.0;
  double d_m = 0.0;
  int n_trials = 0;
  int n_failed = 0;
  double rmse_d_m = 0.0;
  double rmse_d_se_m = 0.0;
  double rmse_theta_rad = 0.0;
  double rmse_theta_se_rad = 0.0;
  double crlb_d_m = 0.0;
  double crlb_theta_rad = 0.0;
  double convergence_rate = 0.0;
  double success_rate = 0.0;
  double mean_snr_db = 0.0;
  double mean_rate_est_bps = 0.0;
  double mean_rate_opt_bps = 0.0;
};

struct SweepSummary {
  std::vector<PointSummary> points;  // radius-major, in config order
  std::vector<TrialRecord> trials;   // same order, trial index fastest
};

struct CrlbRow {
  double radius_m = 0.0;
  double d_m = 0.0;
  double crlb_d_m = 0.0;
  double crlb_theta_rad = 0.0;
  double trace = 0.0;
  double snr_db = 0.0;
  bool ok = true;
  std::string error;  // set when the bound is unavailable at this point
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Success: LM converged and the estimate lies within 0.5 m and 2° of truth.
bool is_success(const TrialRecord& t);

std::uint64_t trial_seed(std::uint64_t master, std::size_t radius_index,
                         std::size_t distance_index, std::size_t trial_index);

TrialRecord run_trial(double radius_m, double d_true_m, double theta_true_rad,
                      const SweepConfig& config, std::uint64_t seed);

/// All trials of the sweep, ordered deterministically regardless of worker count.
std::vector<TrialRecord> run_trials(const SweepConfig& config, const ProgressFn& progress = {});

PointSummary summarize_point(const std::vector<TrialRecord>& trials, double radius_m, double d_m,
                             const SweepConfig& config);

SweepSummary rmse_sweep(const SweepConfig& config, const ProgressFn& progress = {});

/// Same trials as rmse_sweep; callers use the rate and SNR columns.
SweepSummary rate_sweep(const SweepConfig& config, const ProgressFn& progress = {});

/// Closed-form bound with the CRLB-optimal beam at θ = theta_fixed_rad, using
/// the full configured waveform.
std::vector<CrlbRow> crlb_sweep(const SweepConfig& config);

}  // namespace nfisac
