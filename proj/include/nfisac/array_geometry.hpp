#pragma once

// Geometry and free-space primitives of a uniform circular array (UCA) lying
// in the azimuth plane. Element k (0-based here) sits at angle 2πk/n_a on a
// circle of radius R; the UE is at polar position (d, θ) measured from the
// array centre.

#include "nfisac/common.hpp"

namespace nfisac {

class UcaGeometry {
 public:
  UcaGeometry(int n_a, double radius_m, double wavelength_m);

  int n_a() const { return n_a_; }
  double radius_m() const { return radius_m_; }
  double wavelength_m() const { return wavelength_m_; }

  /// Angular position ψ of element `k` (0-based), in [0, 2π).
  double element_angle(int k) const { return kTwoPi * k / n_a_; }

 private:
  int n_a_;
  double radius_m_;
  double wavelength_m_;
};

struct PolarPosition {
  double d_m = 0.0;
  double theta_rad = 0.0;
};

/// Per-element quantities that the bound and the estimator keep re-using.
struct GeometrySensitivities {
  RVector ranges_m;     // r_k
  RVector alpha_d;      // ∂r_k/∂d, dimensionless direction cosine
  RVector alpha_theta;  // ∂r_k/∂θ, meters
  RVector gains;        // λ / (4π r_k)
};

/// Throws ModelError if the UE is on or inside the array circle.
void require_outside_array(const UcaGeometry& geom, const PolarPosition& pos);

RVector element_angles(const UcaGeometry& geom);

/// Law-of-cosines element-to-UE ranges.
RVector element_ranges(const UcaGeometry& geom, const PolarPosition& pos);

/// Unit-norm near-field steering vector a(d, θ); entry k is
/// e^{j2π(d − r_k)/λ} / √n_a.
CVector steering_vector(const UcaGeometry& geom, const PolarPosition& pos);

/// Same as steering_vector() but from precomputed ranges.
CVector steering_from_ranges(const RVector& ranges_m, double d_m, double wavelength_m);

/// Free-space amplitude gain λ/(4π r_k). Throws ModelError on r_k ≤ 0.
RVector element_gains(const RVector& ranges_m, double wavelength_m);

GeometrySensitivities sensitivities(const UcaGeometry& geom, const PolarPosition& pos);

/// 2D²/λ with D = 2R.
double rayleigh_distance(const UcaGeometry& geom);

/// 2D²/λ for a half-wavelength-spaced ULA with n_a elements.
double ula_rayleigh_distance(int n_a, double wavelength_m);

}  // namespace nfisac
