#pragma once

// Post-DFT OFDM sensing/communication model. Samples are indexed by OFDM
// symbol n, subcarrier m and receive element k; the continuous-time waveform
// and cyclic-prefix handling are never simulated explicitly.

#include <cstdint>
#include <vector>

#include "nfisac/array_geometry.hpp"
#include "nfisac/common.hpp"

namespace nfisac {

struct OfdmConfig {
  int m_subcarriers = 2048;
  int n_symbols = 14;
  double delta_f_hz = 480e3;
  double t_cp_s = 0.07 / 480e3;
  double p_t_w = 0.1;
  double sigma2_w = 3.981071705534973e-11;  // -74 dBm
  double carrier_hz = 60e9;
  double nu0_hz = 0.0;

  /// Default system parameters (60 GHz, 2048 × 480 kHz, 14 symbols, 100 mW,
  /// −74 dBm noise).
  static OfdmConfig nominal();

  double symbol_duration_s() const { return 1.0 / delta_f_hz + t_cp_s; }
  double bandwidth_hz() const { return m_subcarriers * delta_f_hz; }
  double wavelength_m() const { return kSpeedOfLight / carrier_hz; }

  /// Throws ModelError on a violated invariant (including |ν₀| > Δf/100).
  void validate() const;
};

/// x[n, m]: rows are OFDM symbols, columns subcarriers.
struct PilotGrid {
  Eigen::MatrixXcd symbols;

  int n_symbols() const { return static_cast<int>(symbols.rows()); }
  int m_subcarriers() const { return static_cast<int>(symbols.cols()); }
  double energy() const { return symbols.squaredNorm(); }
};

/// Dense N × M × n_a complex tensor, element index fastest.
class SampleCube {
 public:
  SampleCube() = default;
  SampleCube(int n_symbols, int m_subcarriers, int n_a);

  int n_symbols() const { return n_; }
  int m_subcarriers() const { return m_; }
  int n_a() const { return k_; }

  cdouble& operator()(int n, int m, int k) { return data_[index(n, m, k)]; }
  const cdouble& operator()(int n, int m, int k) const { return data_[index(n, m, k)]; }

  const std::vector<cdouble>& data() const { return data_; }
  std::vector<cdouble>& data() { return data_; }
  double squared_norm() const;

 private:
  std::size_t index(int n, int m, int k) const {
    return (static_cast<std::size_t>(n) * m_ + m) * k_ + k;
  }

  int n_ = 0;
  int m_ = 0;
  int k_ = 0;
  std::vector<cdouble> data_;
};

struct Observation {
  SampleCube samples;
  PilotGrid pilots;
  OfdmConfig config;
  CVector beamformer;
};

/// Uniform-phase constant-modulus pilots with |x[n,m]|² = P_t, deterministic in `seed`.
PilotGrid generate_pilots(const OfdmConfig& config, std::uint64_t seed);

/// C_{n,m} = x[n,m] e^{j2πν₀nT_o} e^{−j2πmΔf(T_cp+τ₀)}.
cdouble phase_factor(const OfdmConfig& config, const PilotGrid& pilots, int n, int m,
                     double tau0_s);

/// Noiseless back-scattered samples at true round-trip delay 2d/c.
SampleCube noiseless_mean(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
                          const OfdmConfig& config, const PilotGrid& pilots);

/// Noiseless samples with the delay phase evaluated at an explicit τ₀ instead
/// of 2d/c. Holding τ₀ fixed is the convention under which the closed-form
/// derivatives of the mean are exact.
SampleCube noiseless_mean_with_delay(const UcaGeometry& geom, const PolarPosition& pos,
                                     const CVector& f, const OfdmConfig& config,
                                     const PilotGrid& pilots, double tau0_s);

/// noiseless_mean() plus i.i.d. CN(0, σ²) noise drawn from `seed`.
Observation synthesize_observation(const UcaGeometry& geom, const PolarPosition& pos,
                                   const CVector& f, const OfdmConfig& config,
                                   const PilotGrid& pilots, std::uint64_t seed);

/// Downlink channel h_k = g_k a_k(d, θ). The UE receives hᵀf.
CVector comms_channel(const UcaGeometry& geom, const PolarPosition& pos);

struct Snr {
  double linear = 0.0;
  double db = 0.0;
};

/// P_t |hᵀf|² / σ² at the UE.
Snr ue_received_snr(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
                    const OfdmConfig& config);

/// B log₂(1 + SNR) with B = MΔf; the channel is always built at `pos_true`.
double achievable_rate(const UcaGeometry& geom, const CVector& f, const OfdmConfig& config,
                       const PolarPosition& pos_true);

/// Gain-weighted conjugate beam conj(h)/‖h‖ toward `pos`; maximizes |hᵀf| there.
CVector steered_beamformer(const UcaGeometry& geom, const PolarPosition& pos);

}  // namespace nfisac
