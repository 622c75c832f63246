#pragma once

// Joint range-angle maximum-likelihood estimation from one observation.
//
// The cost L(d, θ) = ‖μ̄‖² − 2Re{r̃ᴴμ̄} is factorized through a matched-filter
// bank Z_k[m] = Σ_n C'*_{n,m} r̃_{n,m,k} (pilot and Doppler removed), so that a
// candidate only needs its per-range delay sum W_k(τ) = Σ_m e^{j2πmΔf(T_cp+τ)}
// Z_k[m] and O(n_a) element terms. The delay τ is always 2d/c of the candidate
// unless stated otherwise.

#include <vector>

#include "nfisac/array_geometry.hpp"
#include "nfisac/signal_model.hpp"

namespace nfisac {

struct MatchedFilterBank {
  Eigen::MatrixXcd aggregates;  // n_a × M
};

struct Score {
  double d = 0.0;      // F_d
  double theta = 0.0;  // F_θ
};

struct GridSpec {
  double d_min_m = 0.0;  // 0 selects max(2R, 1 m)
  double d_max_m = 400.0;
  int n_d = 0;      // 0 selects an adaptive range grid
  int n_theta = 0;  // 0 selects n_a·2^p matched to the angular lobe width
  int n_basins = 15;
  double oversample = 1.0;  // grid density relative to one node per half lobe

  void validate() const;
};

/// Grid nodes actually evaluated for a given geometry and waveform.
struct ResolvedGrid {
  std::vector<double> d_nodes_m;
  int n_theta = 0;

  double theta(int j) const { return kTwoPi * j / n_theta; }
};

struct Basin {
  PolarPosition position;
  double cost = 0.0;
  int d_index = 0;
  int theta_index = 0;
};

struct LmSettings {
  int max_iters = 100;
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double tol_score = 1e-10;  // on scores normalized by score_scale()
  double fd_step_d_m = 1e-4;
  double fd_step_theta_rad = 1e-5;
  double tol_step_d_m = 1e-7;
  double tol_step_theta_rad = 1e-9;
  // Solve ∇L = 0 including the d-dependence of the delay phase. When false,
  // LM drives the spatial-only scores() to zero instead.
  bool delay_aware = true;

  void validate() const;
};

struct LmResult {
  PolarPosition position;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;  // normalized, at the returned position
};

struct MlEstimate {
  double d_hat_m = 0.0;
  double theta_hat_rad = 0.0;
  double cost = 0.0;
  bool converged = false;
  int iterations = 0;
  int basin_index = -1;
};

MatchedFilterBank matched_filter_bank(const Observation& obs);

/// Everything a candidate evaluation needs, precomputed once per observation.
class LikelihoodModel {
 public:
  LikelihoodModel(const Observation& obs, const UcaGeometry& geom);
  LikelihoodModel(const Observation& obs, const UcaGeometry& geom, MatchedFilterBank bank);

  const UcaGeometry& geometry() const { return geom_; }
  const OfdmConfig& config() const { return config_; }
  const CVector& beamformer() const { return f_; }
  const MatchedFilterBank& bank() const { return bank_; }

  /// Σ_{n,m} |x[n,m]|² · λ² / (16π² n_a); equals NMP_tλ²/(16π²n_a) for
  /// constant-modulus pilots.
  double deterministic_scale() const { return det_scale_; }

  /// W_k(τ) for all elements.
  CVector delay_sum(double tau_s) const;

  CVector xi(const PolarPosition& candidate) const;
  double cost(const PolarPosition& candidate) const;
  double cost_with_delay(const PolarPosition& candidate, double tau_s) const;
  Score scores(const PolarPosition& candidate) const;

  /// −½∇L with the delay phase following the candidate: scores() plus the
  /// round-trip delay term in d.
  Score gradient_scores(const PolarPosition& candidate) const;

  /// (‖r̃‖ + ‖μ̄‖)·‖∂μ̄/∂η_i‖: Cauchy–Schwarz bound on |F_i|, used to make
  /// the LM stopping test dimensionless.
  Score score_scale(const PolarPosition& candidate) const;

  /// Pilot-energy-weighted RMS of the subcarrier angular frequency 2πmΔf.
  double rms_subcarrier_omega() const { return omega_rms_; }

 private:
  UcaGeometry geom_;
  OfdmConfig config_;
  CVector f_;
  MatchedFilterBank bank_;
  double det_scale_;
  double obs_norm_;
  double omega_rms_;
};

CVector xi(const PolarPosition& candidate, const MatchedFilterBank& bank, const UcaGeometry& geom,
           const OfdmConfig& config);

double cost(const PolarPosition& candidate, const Observation& obs, const UcaGeometry& geom,
            const MatchedFilterBank& bank);

/// Cost with the delay phase pinned at `tau_s`; its gradient in (d, θ) is
/// exactly −2·scores().
double cost_with_delay(const PolarPosition& candidate, const Observation& obs,
                       const UcaGeometry& geom, const MatchedFilterBank& bank, double tau_s);

Score scores(const PolarPosition& candidate, const Observation& obs, const UcaGeometry& geom,
             const MatchedFilterBank& bank);

ResolvedGrid resolve_grid(const GridSpec& spec, const UcaGeometry& geom,
                          const OfdmConfig& config);

/// Up to n_basins grid-local minima (8-neighbourhood, θ wraps) in ascending
/// (cost, d-index, θ-index) order.
std::vector<Basin> coarse_grid_search(const LikelihoodModel& model, const GridSpec& spec);
std::vector<Basin> coarse_grid_search(const LikelihoodModel& model, const ResolvedGrid& grid,
                                      int n_basins);
std::vector<Basin> coarse_grid_search(const Observation& obs, const UcaGeometry& geom,
                                      const MatchedFilterBank& bank, const GridSpec& spec);

/// Evaluates the cost at every node by direct O(n_a) summation. Used by tests
/// and by the search when n_theta is not a multiple of n_a.
Eigen::MatrixXd grid_costs_direct(const LikelihoodModel& model, const ResolvedGrid& grid);

/// Same values via per-range circular convolutions over θ.
Eigen::MatrixXd grid_costs_fft(const LikelihoodModel& model, const ResolvedGrid& grid);

/// Levenberg–Marquardt on the score equations F(η) = 0 with a central
/// finite-difference Jacobian. d is kept in [R(1 + 1e−6), d_upper_m].
LmResult lm_refine(const PolarPosition& basin, const LikelihoodModel& model,
                   const LmSettings& lm, double d_upper_m);

MlEstimate estimate(const LikelihoodModel& model, const GridSpec& spec, const LmSettings& lm);
MlEstimate estimate(const Observation& obs, const UcaGeometry& geom, const GridSpec& spec,
                    const LmSettings& lm);

}  // namespace nfisac
