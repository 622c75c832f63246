#include "nfisac/ml_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "nfisac/fisher_crlb.hpp"

namespace nfisac {

void GridSpec::validate() const {
  if (!(d_max_m > 0.0)) throw ModelError("grid d_max_m must be > 0");
  if (d_min_m != 0.0 && !(d_min_m > 0.0 && d_min_m < d_max_m)) {
    throw ModelError("grid d_min_m must satisfy 0 < d_min_m < d_max_m");
  }
  if (n_d < 0 || n_theta < 0) throw ModelError("grid sizes must be >= 0 (0 = automatic)");
  if (n_basins < 1) throw ModelError("grid n_basins must be >= 1");
  if (n_d > 0 && n_theta > 0 && static_cast<long long>(n_basins) > 1LL * n_d * n_theta) {
    throw ModelError("grid n_basins exceeds the number of grid cells");
  }
  if (!(oversample > 0.0)) throw ModelError("grid oversample must be > 0");
}

void LmSettings::validate() const {
  if (max_iters < 0) throw ModelError("lm max_iters must be >= 0");
  if (!(lambda0 > 0.0 && lambda_up > 1.0 && lambda_down > 1.0)) {
    throw ModelError("lm damping schedule must have lambda0 > 0 and factors > 1");
  }
  if (!(tol_score > 0.0 && tol_step_d_m > 0.0 && tol_step_theta_rad > 0.0)) {
    throw ModelError("lm tolerances must be > 0");
  }
  if (!(fd_step_d_m > 0.0 && fd_step_theta_rad > 0.0)) {
    throw ModelError("lm finite-difference steps must be > 0");
  }
}

MatchedFilterBank matched_filter_bank(const Observation& obs) {
  const SampleCube& r = obs.samples;
  const OfdmConfig& cfg = obs.config;
  if (obs.pilots.n_symbols() != r.n_symbols() || obs.pilots.m_subcarriers() != r.m_subcarriers()) {
    throw ModelError("observation samples and pilot grid dimensions disagree");
  }
  MatchedFilterBank bank{Eigen::MatrixXcd::Zero(r.n_a(), r.m_subcarriers())};
  const double t_o = cfg.symbol_duration_s();
  for (int n = 0; n < r.n_symbols(); ++n) {
    const cdouble doppler = std::polar(1.0, kTwoPi * cfg.nu0_hz * n * t_o);
    for (int m = 0; m < r.m_subcarriers(); ++m) {
      const cdouble w = std::conj(obs.pilots.symbols(n, m) * doppler);
      for (int k = 0; k < r.n_a(); ++k) bank.aggregates(k, m) += w * r(n, m, k);
    }
  }
  return bank;
}

LikelihoodModel::LikelihoodModel(const Observation& obs, const UcaGeometry& geom)
    : LikelihoodModel(obs, geom, matched_filter_bank(obs)) {}

LikelihoodModel::LikelihoodModel(const Observation& obs, const UcaGeometry& geom,
                                 MatchedFilterBank bank)
    : geom_(geom), config_(obs.config), f_(obs.beamformer), bank_(std::move(bank)) {
  if (f_.size() != geom.n_a() || obs.samples.n_a() != geom.n_a()) {
    throw ModelError("observation does not match the array size");
  }
  if (bank_.aggregates.rows() != geom.n_a() ||
      bank_.aggregates.cols() != obs.config.m_subcarriers) {
    throw ModelError("matched-filter bank dimensions do not match the observation");
  }
  const double lambda = geom.wavelength_m();
  det_scale_ = obs.pilots.energy() * lambda * lambda / (16.0 * kPi * kPi * geom.n_a());
  obs_norm_ = std::sqrt(obs.samples.squared_norm());

  const Eigen::RowVectorXd per_subcarrier = obs.pilots.symbols.cwiseAbs2().colwise().sum();
  double num = 0.0;
  for (Eigen::Index m = 0; m < per_subcarrier.size(); ++m) {
    const double w = kTwoPi * config_.delta_f_hz * static_cast<double>(m);
    num += per_subcarrier[m] * w * w;
  }
  const double total = per_subcarrier.sum();
  omega_rms_ = total > 0.0 ? std::sqrt(num / total) : 0.0;
}

CVector LikelihoodModel::delay_sum(double tau_s) const {
  const int M = config_.m_subcarriers;
  CVector phasor(M);
  const double w = kTwoPi * config_.delta_f_hz * (config_.t_cp_s + tau_s);
  for (int m = 0; m < M; ++m) phasor[m] = std::polar(1.0, w * m);
  return bank_.aggregates * phasor;
}

namespace {

struct CandidateTerms {
  GeometrySensitivities sens;
  CVector a;
  cdouble beta;
};

CandidateTerms candidate_terms(const UcaGeometry& geom, const PolarPosition& pos,
                               const CVector& f) {
  CandidateTerms t{sensitivities(geom, pos), CVector(), cdouble{}};
  t.a = steering_from_ranges(t.sens.ranges_m, pos.d_m, geom.wavelength_m());
  t.beta = t.a.transpose() * f;
  return t;
}

CVector xi_from_terms(const CandidateTerms& t, const CVector& w) {
  CVector out(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) out[k] = t.sens.gains[k] * std::conj(t.a[k]) * w[k];
  return out;
}

double inverse_square_sum(const RVector& r) { return (1.0 / r.array().square()).sum(); }

}  // namespace

CVector LikelihoodModel::xi(const PolarPosition& candidate) const {
  const CandidateTerms t = candidate_terms(geom_, candidate, f_);
  return xi_from_terms(t, delay_sum(2.0 * candidate.d_m / kSpeedOfLight));
}

double LikelihoodModel::cost_with_delay(const PolarPosition& candidate, double tau_s) const {
  const CandidateTerms t = candidate_terms(geom_, candidate, f_);
  const CVector x = xi_from_terms(t, delay_sum(tau_s));
  const double energy = det_scale_ * std::norm(t.beta) * inverse_square_sum(t.sens.ranges_m);
  const cdouble corr = t.beta * x.conjugate().sum();
  return energy - 2.0 * corr.real();
}

double LikelihoodModel::cost(const PolarPosition& candidate) const {
  return cost_with_delay(candidate, 2.0 * candidate.d_m / kSpeedOfLight);
}

Score LikelihoodModel::scores(const PolarPosition& candidate) const {
  const CandidateTerms t = candidate_terms(geom_, candidate, f_);
  const CVector x = xi_from_terms(t, delay_sum(2.0 * candidate.d_m / kSpeedOfLight));
  const BeamCoupling c = beam_coupling(t.a, t.sens, f_);
  const GammaCoefficients g = gamma_coefficients(t.sens, c, geom_.wavelength_m());
  Score s;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double r = t.sens.ranges_m[k];
    const cdouble rho = x[k] - det_scale_ * t.beta / (r * r);
    s.d += (std::conj(g.gamma_d[k]) * rho).real();
    s.theta += (std::conj(g.gamma_theta[k]) * rho).real();
  }
  return s;
}

Score LikelihoodModel::gradient_scores(const PolarPosition& candidate) const {
  Score s = scores(candidate);
  // d/dτ of the delay sum, applied through τ = 2d/c.
  const CandidateTerms t = candidate_terms(geom_, candidate, f_);
  const int M = config_.m_subcarriers;
  const double tau = 2.0 * candidate.d_m / kSpeedOfLight;
  const double w0 = kTwoPi * config_.delta_f_hz;
  CVector dphasor(M);
  for (int m = 0; m < M; ++m) dphasor[m] = kJ * (w0 * m) * std::polar(1.0, w0 * m * (config_.t_cp_s + tau));
  const CVector dw = bank_.aggregates * dphasor;
  cdouble acc{};
  for (Eigen::Index k = 0; k < dw.size(); ++k) acc += t.sens.gains[k] * std::conj(t.a[k]) * dw[k];
  s.d += (2.0 / kSpeedOfLight) * (std::conj(t.beta) * acc).real();
  return s;
}

Score LikelihoodModel::score_scale(const PolarPosition& candidate) const {
  const CandidateTerms t = candidate_terms(geom_, candidate, f_);
  const BeamCoupling c = beam_coupling(t.a, t.sens, f_);
  const GammaCoefficients g = gamma_coefficients(t.sens, c, geom_.wavelength_m());
  double sd = 0.0;
  double st = 0.0;
  for (Eigen::Index k = 0; k < t.a.size(); ++k) {
    const double w = 1.0 / (t.sens.ranges_m[k] * t.sens.ranges_m[k]);
    sd += w * std::norm(g.gamma_d[k]);
    st += w * std::norm(g.gamma_theta[k]);
  }
  const double mu_norm =
      std::sqrt(det_scale_ * std::norm(t.beta) * inverse_square_sum(t.sens.ranges_m));
  const double total = obs_norm_ + mu_norm;
  // Delay part of ‖∂μ̄/∂d‖, added as a triangle-inequality bound.
  const double delay = (2.0 / kSpeedOfLight) * omega_rms_ * mu_norm;
  return Score{total * (std::sqrt(det_scale_ * sd) + delay), total * std::sqrt(det_scale_ * st)};
}

CVector xi(const PolarPosition& candidate, const MatchedFilterBank& bank, const UcaGeometry& geom,
           const OfdmConfig& config) {
  require_outside_array(geom, candidate);
  const CandidateTerms t{sensitivities(geom, candidate),
                         steering_vector(geom, candidate), cdouble{}};
  const int M = config.m_subcarriers;
  CVector phasor(M);
  const double w =
      kTwoPi * config.delta_f_hz * (config.t_cp_s + 2.0 * candidate.d_m / kSpeedOfLight);
  for (int m = 0; m < M; ++m) phasor[m] = std::polar(1.0, w * m);
  return xi_from_terms(t, bank.aggregates * phasor);
}

double cost(const PolarPosition& candidate, const Observation& obs, const UcaGeometry& geom,
            const MatchedFilterBank& bank) {
  return LikelihoodModel(obs, geom, bank).cost(candidate);
}

double cost_with_delay(const PolarPosition& candidate, const Observation& obs,
                       const UcaGeometry& geom, const MatchedFilterBank& bank, double tau_s) {
  return LikelihoodModel(obs, geom, bank).cost_with_delay(candidate, tau_s);
}

Score scores(const PolarPosition& candidate, const Observation& obs, const UcaGeometry& geom,
             const MatchedFilterBank& bank) {
  return LikelihoodModel(obs, geom, bank).scores(candidate);
}

LmResult lm_refine(const PolarPosition& basin, const LikelihoodModel& model, const LmSettings& lm,
                   double d_upper_m) {
  lm.validate();
  const double d_lower = model.geometry().radius_m() * (1.0 + 1e-6);
  if (!(d_upper_m > d_lower)) throw ModelError("LM upper range bound must exceed the array radius");

  auto clamp = [&](PolarPosition p) {
    p.d_m = std::clamp(p.d_m, d_lower, d_upper_m);
    p.theta_rad = wrap_angle(p.theta_rad);
    return p;
  };

  PolarPosition eta = clamp(basin);
  const Score scale = model.score_scale(eta);
  // Damped Newton on the cost. The Hessian is the symmetrized finite-difference
  // Jacobian of the scores, and a step is kept only if the cost goes down, so
  // saddles and maxima of the score equations are never accepted.
  auto raw = [&](const PolarPosition& p) {
    return lm.delay_aware ? model.gradient_scores(p) : model.scores(p);
  };
  Score s = raw(eta);
  double cost = model.cost(eta);
  auto norm_of = [&](const Score& v) { return std::hypot(v.d / scale.d, v.theta / scale.theta); };
  LmResult out{eta, false, 0, norm_of(s)};
  double lambda = lm.lambda0;

  for (int it = 0; it < lm.max_iters; ++it) {
    out.iterations = it + 1;
    const double hd = lm.fd_step_d_m;
    const double ht = lm.fd_step_theta_rad;
    const PolarPosition dp = clamp({eta.d_m + hd, eta.theta_rad});
    const PolarPosition dm = clamp({eta.d_m - hd, eta.theta_rad});
    const Score sdp = raw(dp), sdm = raw(dm);
    const Score stp = raw({eta.d_m, eta.theta_rad + ht});
    const Score stm = raw({eta.d_m, eta.theta_rad - ht});
    const double span_d = dp.d_m - dm.d_m;
    Eigen::Matrix2d H;
    H << -2.0 * (sdp.d - sdm.d) / span_d, -2.0 * (stp.d - stm.d) / (2.0 * ht),
        -2.0 * (sdp.theta - sdm.theta) / span_d, -2.0 * (stp.theta - stm.theta) / (2.0 * ht);
    H = 0.5 * (H + H.transpose()).eval();
    const Eigen::Vector2d grad(-2.0 * s.d, -2.0 * s.theta);
    const Eigen::Vector2d diag(std::max(std::abs(H(0, 0)), 1e-300), std::max(std::abs(H(1, 1)), 1e-300));

    // Empty when the damped matrix is not positive definite.
    auto solve = [&](double lam) -> std::optional<Eigen::Vector2d> {
      Eigen::Matrix2d damped = H;
      damped.diagonal() += lam * diag;
      if (!(damped(0, 0) > 0.0 && damped.determinant() > 0.0)) return std::nullopt;
      return Eigen::Vector2d(damped.ldlt().solve(-grad));
    };

    const auto newton = solve(0.0);
    if (norm_of(s) < lm.tol_score && newton && std::abs((*newton)[0]) < lm.tol_step_d_m &&
        std::abs((*newton)[1]) < lm.tol_step_theta_rad) {
      out.converged = true;
      break;
    }

    std::optional<Eigen::Vector2d> step = solve(lambda);
    while (!step && lambda <= 1e16) {
      lambda *= lm.lambda_up;
      step = solve(lambda);
    }
    if (!step) break;

    const PolarPosition trial = clamp({eta.d_m + (*step)[0], eta.theta_rad + (*step)[1]});
    const double trial_cost = model.cost(trial);
    const Score trial_s = raw(trial);
    // Near the optimum the cost change drops below rounding, so a step that
    // ties the cost is kept when it reduces the score.
    const bool better = trial_cost < cost ||
                        (trial_cost <= cost + 1e-13 * std::abs(cost) && norm_of(trial_s) < norm_of(s));
    if (std::isfinite(trial_cost) && better) {
      eta = trial;
      s = trial_s;
      cost = trial_cost;
      lambda = std::max(lambda / lm.lambda_down, 1e-12);
    } else {
      lambda *= lm.lambda_up;
      if (lambda > 1e16) break;
    }
  }

  out.position = eta;
  out.score_norm = norm_of(s);
  return out;
}

MlEstimate estimate(const LikelihoodModel& model, const GridSpec& spec, const LmSettings& lm) {
  spec.validate();
  const std::vector<Basin> basins = coarse_grid_search(model, spec);
  const double d_upper = 1.5 * spec.d_max_m;

  MlEstimate best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < basins.size(); ++b) {
    const LmResult refined = lm_refine(basins[b].position, model, lm, d_upper);
    const double c = model.cost(refined.position);
    if (c < best.cost) {
      best.d_hat_m = refined.position.d_m;
      best.theta_hat_rad = wrap_angle(refined.position.theta_rad);
      best.cost = c;
      best.converged = refined.converged;
      best.iterations = refined.iterations;
      best.basin_index = static_cast<int>(b);
    }
  }
  return best;
}

MlEstimate estimate(const Observation& obs, const UcaGeometry& geom, const GridSpec& spec,
                    const LmSettings& lm) {
  return estimate(LikelihoodModel(obs, geom), spec, lm);
}

}  // namespace nfisac
