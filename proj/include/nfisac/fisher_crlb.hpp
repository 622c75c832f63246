#pragma once

// Fisher information and Cramér–Rao bound for η = [d, θ]ᵀ.
//
// The mean of sample (n, m, k) is C_{n,m} g_k a_k β with β = aᵀf. Its
// derivative w.r.t. η_i is C_{n,m} g_k a_k γ_k^i, where the delay phase inside
// C_{n,m} is held fixed. Note that β, z^d and z^θ are transposed, not
// Hermitian, products: the conjugate-focus beam is f = a*, not f = a.

#include "nfisac/array_geometry.hpp"
#include "nfisac/common.hpp"
#include "nfisac/signal_model.hpp"

namespace nfisac {

struct BeamCoupling {
  cdouble beta;     // aᵀ f
  cdouble z_d;      // aᵀ diag(1 − α^d) f
  cdouble z_theta;  // aᵀ diag(α^θ) f
};

struct GammaCoefficients {
  CVector gamma_d;      // 1/m
  CVector gamma_theta;  // 1/rad
};

struct FisherMatrix {
  double j_dd = 0.0;
  double j_dtheta = 0.0;
  double j_thetatheta = 0.0;

  double determinant() const { return j_dd * j_thetatheta - j_dtheta * j_dtheta; }
};

struct CrlbBound {
  double var_d = 0.0;      // m²
  double var_theta = 0.0;  // rad²
  double trace = 0.0;
};

/// The nine geometry sums entering the expanded bound.
struct GeometrySums {
  double a1, a2, a3;
  double b1, b2, b3;
  double c1, c2, c3;
};

inline constexpr double kUnidentifiableTolerance = 1e-12;

BeamCoupling beam_coupling(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f);

/// No norm check; `a` is the steering vector at the position `sens` describes.
BeamCoupling beam_coupling(const CVector& a, const GeometrySensitivities& sens, const CVector& f);

GammaCoefficients gamma_coefficients(const GeometrySensitivities& sens,
                                     const BeamCoupling& coupling, double wavelength_m);

/// K = 2NMP_tλ² / (16π²σ²n_a).
double fim_scale(const OfdmConfig& config, int n_a);

FisherMatrix fim(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
                 const OfdmConfig& config);

/// FIM from precomputed pieces; `scale` is fim_scale().
FisherMatrix fim_from_gamma(const GammaCoefficients& gamma, const RVector& ranges_m,
                            double scale);

/// Inverts the 2×2 FIM. Throws UnidentifiableError when
/// det J ≤ 1e−12 · J_dd · J_θθ.
CrlbBound crlb_from_fim(const FisherMatrix& fim);

GeometrySums geometry_sums(const GeometrySensitivities& sens, const BeamCoupling& coupling);

/// Expanded closed-form bound built from the A/B/C sums.
CrlbBound crlb_closed_form(const GeometrySensitivities& sens, const BeamCoupling& coupling,
                           const OfdmConfig& config, double wavelength_m);

/// Convenience: closed-form bound at (geom, pos, f).
CrlbBound crlb(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
               const OfdmConfig& config);

}  // namespace nfisac
