#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nfisac {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr cdouble kJ{0.0, 1.0};

/// Raised when inputs fall outside the validity of the propagation model
/// (UE inside the array circle, non-unit beamformer, bad dimensions, ...).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The Fisher information is singular: range and angle cannot both be
/// estimated for this (position, beamformer) pair.
class UnidentifiableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A retraction produced a (numerically) zero vector.
class StepTooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle into [0, 2π).
double wrap_angle(double theta_rad);

/// Signed angular difference a - b mapped into (-π, π].
double angle_difference(double a_rad, double b_rad);

/// SplitMix64 finalizer; used to derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for stream `index` of `parent`.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double linear_to_db(double x);

/// Throws ModelError unless | ‖f‖₂ − 1 | ≤ tol.
void require_unit_norm(const CVector& f, double tol, const char* what);

}  // namespace nfisac
