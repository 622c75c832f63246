#pragma once

// CRLB-trace minimization over the complex unit sphere by Riemannian gradient
// descent (tangent projection, normalization retraction, Armijo backtracking).

#include <optional>
#include <vector>

#include "nfisac/array_geometry.hpp"
#include "nfisac/fisher_crlb.hpp"
#include "nfisac/signal_model.hpp"

namespace nfisac {

struct OptimizerConfig {
  int max_iters = 2000;
  double grad_tol = 1e-8;  // relative to the current objective value
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double initial_step = 1.0;  // arc length along the normalized descent direction
  int max_backtracks = 50;

  void validate() const;
};

struct OptimizerResult {
  CVector beamformer;
  std::vector<double> trace_history;  // one entry per accepted iterate, init first
  double final_grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Tr(C) as a function of f at a fixed position. Evaluations are O(n_a); the
/// member functions accept any nonzero f (no unit-norm check) so that
/// finite-difference oracles can probe off the sphere.
class CrlbTraceModel {
 public:
  CrlbTraceModel(const UcaGeometry& geom, const PolarPosition& pos, const OfdmConfig& config);

  double value(const CVector& f) const;

  /// Euclidean gradient in the real 2n_a-dimensional parameterization, i.e.
  /// 2 ∂Tr/∂f* (the Hermitian of the Wirtinger derivative, times 2). The
  /// directional derivative along v is Re{vᴴ · gradient(f)}.
  CVector gradient(const CVector& f) const;

  const CVector& steering() const { return a_; }
  double scale() const { return scale_; }

 private:
  GeometrySensitivities sens_;
  CVector a_;
  double wavelength_m_;
  double scale_;
};

double trace_objective(const CVector& f, const UcaGeometry& geom, const PolarPosition& pos,
                       const OfdmConfig& config);

CVector wirtinger_gradient(const CVector& f, const UcaGeometry& geom, const PolarPosition& pos,
                           const OfdmConfig& config);

/// grad − Re{fᴴ grad} f.
CVector tangent_project(const CVector& grad, const CVector& f);

/// (f − step·dir) / ‖f − step·dir‖. Throws StepTooLargeError if the update
/// norm drops below 1e−14.
CVector retract(const CVector& f, double step, const CVector& descent_dir);

/// a*(d, θ); unit norm and maximizes |aᵀf|.
CVector conjugate_focus_beamformer(const UcaGeometry& geom, const PolarPosition& pos);

OptimizerResult optimize_beamformer(const UcaGeometry& geom, const PolarPosition& pos,
                                    const OfdmConfig& config, const OptimizerConfig& opt,
                                    const std::optional<CVector>& init = std::nullopt);

/// Runs optimize_beamformer from the conjugate-focus start plus `n_random`
/// random unit starts drawn from `seed`, returning the lowest final trace.
OptimizerResult optimize_beamformer_multistart(const UcaGeometry& geom, const PolarPosition& pos,
                                               const OfdmConfig& config,
                                               const OptimizerConfig& opt, int n_random,
                                               std::uint64_t seed);

}  // namespace nfisac
