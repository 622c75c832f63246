#include "nfisac/fisher_crlb.hpp"

#include <cmath>

#include <fmt/format.h>

namespace nfisac {

BeamCoupling beam_coupling(const CVector& a, const GeometrySensitivities& sens, const CVector& f) {
  if (a.size() != f.size() || a.size() != sens.ranges_m.size()) {
    throw ModelError("beamformer length does not match the array");
  }
  BeamCoupling c{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const cdouble af = a[k] * f[k];
    c.beta += af;
    c.z_d += (1.0 - sens.alpha_d[k]) * af;
    c.z_theta += sens.alpha_theta[k] * af;
  }
  return c;
}

BeamCoupling beam_coupling(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f) {
  require_unit_norm(f, 1e-9, "beamformer");
  const GeometrySensitivities sens = sensitivities(geom, pos);
  const CVector a = steering_from_ranges(sens.ranges_m, pos.d_m, geom.wavelength_m());
  return beam_coupling(a, sens, f);
}

GammaCoefficients gamma_coefficients(const GeometrySensitivities& sens,
                                     const BeamCoupling& coupling, double wavelength_m) {
  const double k0 = kTwoPi / wavelength_m;
  const Eigen::Index n = sens.ranges_m.size();
  GammaCoefficients g{CVector(n), CVector(n)};
  const cdouble beta = coupling.beta;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r = sens.ranges_m[k];
    const double ad = sens.alpha_d[k];
    const double at = sens.alpha_theta[k];
    g.gamma_d[k] = -(ad / r) * beta + kJ * k0 * (coupling.z_d + beta * (1.0 - ad));
    g.gamma_theta[k] = -(at / r) * beta - kJ * k0 * (coupling.z_theta + beta * at);
  }
  return g;
}

double fim_scale(const OfdmConfig& config, int n_a) {
  if (!(config.sigma2_w > 0.0)) throw ModelError("the Fisher information needs sigma2 > 0");
  const double lambda = config.wavelength_m();
  return 2.0 * config.n_symbols * config.m_subcarriers * config.p_t_w * lambda * lambda /
         (16.0 * kPi * kPi * config.sigma2_w * n_a);
}

FisherMatrix fim_from_gamma(const GammaCoefficients& gamma, const RVector& ranges_m,
                            double scale) {
  double dd = 0.0;
  double dt = 0.0;
  double tt = 0.0;
  for (Eigen::Index k = 0; k < ranges_m.size(); ++k) {
    const double w = 1.0 / (ranges_m[k] * ranges_m[k]);
    const cdouble gd = gamma.gamma_d[k];
    const cdouble gt = gamma.gamma_theta[k];
    dd += w * std::norm(gd);
    tt += w * std::norm(gt);
    dt += w * (std::conj(gd) * gt).real();
  }
  return FisherMatrix{scale * dd, scale * dt, scale * tt};
}

FisherMatrix fim(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
                 const OfdmConfig& config) {
  require_unit_norm(f, 1e-9, "beamformer");
  const GeometrySensitivities sens = sensitivities(geom, pos);
  const CVector a = steering_from_ranges(sens.ranges_m, pos.d_m, geom.wavelength_m());
  const BeamCoupling coupling = beam_coupling(a, sens, f);
  const GammaCoefficients gamma = gamma_coefficients(sens, coupling, geom.wavelength_m());
  return fim_from_gamma(gamma, sens.ranges_m, fim_scale(config, geom.n_a()));
}

CrlbBound crlb_from_fim(const FisherMatrix& j) {
  const double det = j.determinant();
  if (!(det > kUnidentifiableTolerance * j.j_dd * j.j_thetatheta) || !(det > 0.0)) {
    throw UnidentifiableError(fmt::format(
        "singular Fisher information (det = {:.6g}, J_dd = {:.6g}, J_tt = {:.6g})", det, j.j_dd,
        j.j_thetatheta));
  }
  CrlbBound b;
  b.var_d = j.j_thetatheta / det;
  b.var_theta = j.j_dd / det;
  b.trace = (j.j_dd + j.j_thetatheta) / det;
  return b;
}

GeometrySums geometry_sums(const GeometrySensitivities& sens, const BeamCoupling& c) {
  GeometrySums s{};
  double sum_ad_r3 = 0.0;
  double sum_at_r3 = 0.0;
  const cdouble beta = c.beta;
  for (Eigen::Index k = 0; k < sens.ranges_m.size(); ++k) {
    const double r = sens.ranges_m[k];
    const double r2 = r * r;
    const double r3 = r2 * r;
    const double r4 = r2 * r2;
    const double ad = sens.alpha_d[k];
    const double at = sens.alpha_theta[k];
    s.a1 += ad * ad / r4;
    s.a2 += std::norm(beta * (1.0 - ad) + c.z_d) / r2;
    s.b1 += at * at / r4;
    s.b2 += std::norm(beta * at + c.z_theta) / r2;
    s.c1 += ad * at / r4;
    s.c2 += ((std::conj(c.z_d) + (1.0 - ad) * std::conj(beta)) * (c.z_theta + at * beta)).real() / r2;
    sum_ad_r3 += ad / r3;
    sum_at_r3 += at / r3;
  }
  const double br = beta.real();
  const double bi = beta.imag();
  s.a3 = (br * c.z_d.imag() - bi * c.z_d.real()) * sum_ad_r3;
  s.b3 = (br * c.z_theta.imag() - bi * c.z_theta.real()) * sum_at_r3;
  s.c3 = (br * c.z_theta.imag() - bi * c.z_theta.real()) * sum_ad_r3 +
         (bi * c.z_d.real() - br * c.z_d.imag()) * sum_at_r3;
  return s;
}

CrlbBound crlb_closed_form(const GeometrySensitivities& sens, const BeamCoupling& coupling,
                           const OfdmConfig& config, double wavelength_m) {
  const GeometrySums s = geometry_sums(sens, coupling);
  const double beta2 = std::norm(coupling.beta);
  const double k1 = kTwoPi / wavelength_m;  // 2π/λ
  const double k2 = k1 * k1;                // 4π²/λ²

  const double dd = beta2 * s.a1 + k2 * s.a2 + 2.0 * k1 * s.a3;
  // The B3 term enters with a minus sign; see the derivation of |γ^θ|².
  const double tt = beta2 * s.b1 + k2 * s.b2 - 2.0 * k1 * s.b3;
  const double dt = beta2 * s.c1 - k2 * s.c2 - k1 * s.c3;

  if (!(config.sigma2_w > 0.0)) throw ModelError("the Fisher information needs sigma2 > 0");
  const double n_a = static_cast<double>(sens.ranges_m.size());
  const double prefactor = config.n_symbols * config.m_subcarriers * config.p_t_w *
                           wavelength_m * wavelength_m /
                           (8.0 * kPi * kPi * config.sigma2_w * n_a);
  const double bracket = dd * tt - dt * dt;
  if (!(bracket > kUnidentifiableTolerance * dd * tt) || !(bracket > 0.0)) {
    throw UnidentifiableError(
        fmt::format("non-positive bound denominator ({:.6g})", prefactor * bracket));
  }
  CrlbBound b;
  b.var_d = tt / (prefactor * bracket);
  b.var_theta = dd / (prefactor * bracket);
  b.trace = b.var_d + b.var_theta;
  return b;
}

CrlbBound crlb(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
               const OfdmConfig& config) {
  require_unit_norm(f, 1e-9, "beamformer");
  const GeometrySensitivities sens = sensitivities(geom, pos);
  const CVector a = steering_from_ranges(sens.ranges_m, pos.d_m, geom.wavelength_m());
  return crlb_closed_form(sens, beam_coupling(a, sens, f), config, geom.wavelength_m());
}

}  // namespace nfisac
