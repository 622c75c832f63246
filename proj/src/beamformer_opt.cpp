#include "nfisac/beamformer_opt.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace nfisac {

void OptimizerConfig::validate() const {
  if (max_iters < 0) throw ModelError("optimizer max_iters must be >= 0");
  if (!(grad_tol > 0.0)) throw ModelError("optimizer grad_tol must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ModelError("armijo_c must lie in (0, 1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw ModelError("backtrack_factor must lie in (0, 1)");
  }
  if (!(initial_step > 0.0)) throw ModelError("initial_step must be > 0");
  if (max_backtracks < 1) throw ModelError("max_backtracks must be >= 1");
}

CrlbTraceModel::CrlbTraceModel(const UcaGeometry& geom, const PolarPosition& pos,
                               const OfdmConfig& config)
    : sens_(sensitivities(geom, pos)),
      a_(steering_from_ranges(sens_.ranges_m, pos.d_m, geom.wavelength_m())),
      wavelength_m_(geom.wavelength_m()),
      scale_(fim_scale(config, geom.n_a())) {}

double CrlbTraceModel::value(const CVector& f) const {
  const BeamCoupling c = beam_coupling(a_, sens_, f);
  const GammaCoefficients g = gamma_coefficients(sens_, c, wavelength_m_);
  return crlb_from_fim(fim_from_gamma(g, sens_.ranges_m, scale_)).trace;
}

CVector CrlbTraceModel::gradient(const CVector& f) const {
  // γ^d_k = p_k β + q z^d and γ^θ_k = s_k β + t z^θ; R, T, X below are the FIM
  // entries divided by K, differentiated w.r.t. the conjugates of β, z^d, z^θ.
  const BeamCoupling c = beam_coupling(a_, sens_, f);
  const GammaCoefficients g = gamma_coefficients(sens_, c, wavelength_m_);
  const double k0 = kTwoPi / wavelength_m_;
  const cdouble q = kJ * k0;
  const cdouble t = -kJ * k0;

  double R = 0.0, T = 0.0, X = 0.0;
  cdouble R_b{}, R_zd{}, T_b{}, T_zt{}, X_b{}, X_zd{}, X_zt{};
  for (Eigen::Index k = 0; k < a_.size(); ++k) {
    const double r = sens_.ranges_m[k];
    const double w = 1.0 / (r * r);
    const double ad = sens_.alpha_d[k];
    const double at = sens_.alpha_theta[k];
    const cdouble p = -ad / r + kJ * k0 * (1.0 - ad);
    const cdouble s = -at / r - kJ * k0 * at;
    const cdouble gd = g.gamma_d[k];
    const cdouble gt = g.gamma_theta[k];

    R += w * std::norm(gd);
    T += w * std::norm(gt);
    X += w * (std::conj(gd) * gt).real();

    R_b += w * gd * std::conj(p);
    R_zd += w * gd * std::conj(q);
    T_b += w * gt * std::conj(s);
    T_zt += w * gt * std::conj(t);
    X_b += 0.5 * w * (std::conj(p) * gt + gd * std::conj(s));
    X_zd += 0.5 * w * std::conj(q) * gt;
    X_zt += 0.5 * w * gd * std::conj(t);
  }

  const double delta = R * T - X * X;
  const double num = R + T;
  const double denom = scale_ * delta * delta;
  auto quotient = [&](cdouble dR, cdouble dT, cdouble dX) {
    return (delta * (dR + dT) - num * (T * dR + R * dT - 2.0 * X * dX)) / denom;
  };
  const cdouble tr_b = quotient(R_b, T_b, X_b);
  const cdouble tr_zd = quotient(R_zd, 0.0, X_zd);
  const cdouble tr_zt = quotient(0.0, T_zt, X_zt);

  CVector grad(a_.size());
  for (Eigen::Index k = 0; k < a_.size(); ++k) {
    const cdouble chain =
        tr_b + (1.0 - sens_.alpha_d[k]) * tr_zd + sens_.alpha_theta[k] * tr_zt;
    grad[k] = 2.0 * std::conj(a_[k]) * chain;
  }
  return grad;
}

double trace_objective(const CVector& f, const UcaGeometry& geom, const PolarPosition& pos,
                       const OfdmConfig& config) {
  require_unit_norm(f, 1e-9, "beamformer");
  return CrlbTraceModel(geom, pos, config).value(f);
}

CVector wirtinger_gradient(const CVector& f, const UcaGeometry& geom, const PolarPosition& pos,
                           const OfdmConfig& config) {
  require_unit_norm(f, 1e-9, "beamformer");
  return CrlbTraceModel(geom, pos, config).gradient(f);
}

CVector tangent_project(const CVector& grad, const CVector& f) {
  const double radial = f.dot(grad).real();  // Eigen's dot conjugates the first argument
  return grad - radial * f;
}

CVector retract(const CVector& f, double step, const CVector& descent_dir) {
  CVector next = f - step * descent_dir;
  const double n = next.norm();
  if (!(n >= 1e-14)) throw StepTooLargeError("retraction collapsed to a zero vector");
  return next / n;
}

CVector conjugate_focus_beamformer(const UcaGeometry& geom, const PolarPosition& pos) {
  CVector f = steering_vector(geom, pos).conjugate();
  return f / f.norm();
}

namespace {

// Objective value with unidentifiable points treated as infinitely bad, so the
// line search simply backs off from them.
double safe_value(const CrlbTraceModel& model, const CVector& f) {
  try {
    return model.value(f);
  } catch (const UnidentifiableError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

OptimizerResult optimize_beamformer(const UcaGeometry& geom, const PolarPosition& pos,
                                    const OfdmConfig& config, const OptimizerConfig& opt,
                                    const std::optional<CVector>& init) {
  opt.validate();
  const CrlbTraceModel model(geom, pos, config);

  OptimizerResult result;
  CVector f = init ? *init : conjugate_focus_beamformer(geom, pos);
  require_unit_norm(f, 1e-9, "initial beamformer");
  f /= f.norm();

  double value = model.value(f);
  CVector rgrad = tangent_project(model.gradient(f), f);
  double gnorm = rgrad.norm();
  result.trace_history.push_back(value);

  double step = opt.initial_step;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    if (gnorm < opt.grad_tol * value) {
      result.converged = true;
      break;
    }
    const CVector dir = rgrad / gnorm;
    // Start from twice the last accepted step, capped at initial_step.
    double t = std::min(opt.initial_step, 2.0 * step);
    bool accepted = false;
    CVector candidate;
    double cand_value = 0.0;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      try {
        candidate = retract(f, t, dir);
      } catch (const StepTooLargeError&) {
        t *= opt.backtrack_factor;
        continue;
      }
      cand_value = safe_value(model, candidate);
      if (cand_value <= value - opt.armijo_c * t * gnorm) {
        accepted = true;
        break;
      }
      t *= opt.backtrack_factor;
    }
    if (!accepted) break;

    step = t;
    f = candidate;
    value = cand_value;
    rgrad = tangent_project(model.gradient(f), f);
    gnorm = rgrad.norm();
    result.trace_history.push_back(value);
  }
  if (!result.converged && it == opt.max_iters && gnorm < opt.grad_tol * value) {
    result.converged = true;
  }

  result.beamformer = f;
  result.final_grad_norm = gnorm;
  result.iterations = static_cast<int>(result.trace_history.size()) - 1;
  return result;
}

OptimizerResult optimize_beamformer_multistart(const UcaGeometry& geom, const PolarPosition& pos,
                                               const OfdmConfig& config,
                                               const OptimizerConfig& opt, int n_random,
                                               std::uint64_t seed) {
  OptimizerResult best = optimize_beamformer(geom, pos, config, opt);
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < n_random; ++s) {
    CVector init(geom.n_a());
    for (Eigen::Index k = 0; k < init.size(); ++k) init[k] = cdouble{unit(rng), unit(rng)};
    init /= init.norm();
    OptimizerResult run = optimize_beamformer(geom, pos, config, opt, init);
    if (run.trace_history.back() < best.trace_history.back()) best = std::move(run);
  }
  return best;
}

}  // namespace nfisac
