#include "nfisac/array_geometry.hpp"

#include <cmath>

#include <fmt/format.h>

namespace nfisac {

UcaGeometry::UcaGeometry(int n_a, double radius_m, double wavelength_m)
    : n_a_(n_a), radius_m_(radius_m), wavelength_m_(wavelength_m) {
  if (n_a < 1) throw ModelError(fmt::format("element count must be >= 1 (got {})", n_a));
  if (!(radius_m > 0.0)) throw ModelError(fmt::format("radius must be > 0 (got {})", radius_m));
  if (!(wavelength_m > 0.0)) {
    throw ModelError(fmt::format("wavelength must be > 0 (got {})", wavelength_m));
  }
}

void require_outside_array(const UcaGeometry& geom, const PolarPosition& pos) {
  if (!(pos.d_m > geom.radius_m())) {
    throw ModelError(fmt::format("UE distance {} m must exceed the array radius {} m", pos.d_m,
                                 geom.radius_m()));
  }
}

RVector element_angles(const UcaGeometry& geom) {
  RVector psi(geom.n_a());
  for (int k = 0; k < geom.n_a(); ++k) psi[k] = geom.element_angle(k);
  return psi;
}

RVector element_ranges(const UcaGeometry& geom, const PolarPosition& pos) {
  if (!(pos.d_m > 0.0)) throw ModelError("UE distance must be positive");
  const double d = pos.d_m;
  const double R = geom.radius_m();
  RVector r(geom.n_a());
  for (int k = 0; k < geom.n_a(); ++k) {
    const double phi = pos.theta_rad - geom.element_angle(k);
    // Clamp guards the collinear case d == R against a tiny negative radicand.
    r[k] = std::sqrt(std::max(0.0, d * d + R * R - 2.0 * d * R * std::cos(phi)));
  }
  return r;
}

CVector steering_from_ranges(const RVector& ranges_m, double d_m, double wavelength_m) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(ranges_m.size()));
  const double k0 = kTwoPi / wavelength_m;
  CVector a(ranges_m.size());
  for (Eigen::Index k = 0; k < ranges_m.size(); ++k) {
    a[k] = std::polar(scale, k0 * (d_m - ranges_m[k]));
  }
  return a;
}

CVector steering_vector(const UcaGeometry& geom, const PolarPosition& pos) {
  return steering_from_ranges(element_ranges(geom, pos), pos.d_m, geom.wavelength_m());
}

RVector element_gains(const RVector& ranges_m, double wavelength_m) {
  RVector g(ranges_m.size());
  for (Eigen::Index k = 0; k < ranges_m.size(); ++k) {
    if (!(ranges_m[k] > 0.0)) {
      throw ModelError(fmt::format("element {} range must be positive (got {})", k, ranges_m[k]));
    }
    g[k] = wavelength_m / (4.0 * kPi * ranges_m[k]);
  }
  return g;
}

GeometrySensitivities sensitivities(const UcaGeometry& geom, const PolarPosition& pos) {
  require_outside_array(geom, pos);
  const double d = pos.d_m;
  const double R = geom.radius_m();
  GeometrySensitivities s;
  s.ranges_m = element_ranges(geom, pos);
  s.alpha_d.resize(geom.n_a());
  s.alpha_theta.resize(geom.n_a());
  for (int k = 0; k < geom.n_a(); ++k) {
    const double phi = pos.theta_rad - geom.element_angle(k);
    s.alpha_d[k] = (d - R * std::cos(phi)) / s.ranges_m[k];
    s.alpha_theta[k] = d * R * std::sin(phi) / s.ranges_m[k];
  }
  s.gains = element_gains(s.ranges_m, geom.wavelength_m());
  return s;
}

double rayleigh_distance(const UcaGeometry& geom) {
  const double D = 2.0 * geom.radius_m();
  return 2.0 * D * D / geom.wavelength_m();
}

double ula_rayleigh_distance(int n_a, double wavelength_m) {
  if (n_a < 2) throw ModelError("a ULA needs at least two elements");
  if (!(wavelength_m > 0.0)) throw ModelError("wavelength must be > 0");
  const double D = (n_a - 1) * wavelength_m / 2.0;
  return 2.0 * D * D / wavelength_m;
}

}  // namespace nfisac
