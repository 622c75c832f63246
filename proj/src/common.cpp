#include "nfisac/common.hpp"

#include <cmath>

#include <fmt/format.h>

namespace nfisac {

double wrap_angle(double theta_rad) {
  double w = std::fmod(theta_rad, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

double angle_difference(double a_rad, double b_rad) {
  double diff = wrap_angle(a_rad - b_rad);
  if (diff > kPi) diff -= kTwoPi;
  return diff;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ (index * 0xd1342543de82ef95ULL + 1));
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double linear_to_db(double x) { return 10.0 * std::log10(x); }

void require_unit_norm(const CVector& f, double tol, const char* what) {
  const double n = f.norm();
  if (!(std::abs(n - 1.0) <= tol)) {
    throw ModelError(fmt::format("{} must have unit norm (got {:.17g})", what, n));
  }
}

}  // namespace nfisac
