#include "nfisac/signal_model.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace nfisac {

OfdmConfig OfdmConfig::nominal() { return OfdmConfig{}; }

void OfdmConfig::validate() const {
  if (m_subcarriers < 1) throw ModelError("m_subcarriers must be >= 1");
  if (n_symbols < 1) throw ModelError("n_symbols must be >= 1");
  if (!(delta_f_hz > 0.0)) throw ModelError("delta_f_hz must be > 0");
  if (!(t_cp_s >= 0.0)) throw ModelError("t_cp_s must be >= 0");
  if (!(p_t_w > 0.0)) throw ModelError("p_t_w must be > 0");
  if (!(sigma2_w >= 0.0)) throw ModelError("sigma2_w must be >= 0");
  if (!(carrier_hz > 0.0)) throw ModelError("carrier_hz must be > 0");
  if (!(std::abs(nu0_hz) <= delta_f_hz / 100.0)) {
    throw ModelError(
        fmt::format("|nu0_hz| = {} violates the |nu0| <= delta_f/100 contract", std::abs(nu0_hz)));
  }
}

SampleCube::SampleCube(int n_symbols, int m_subcarriers, int n_a)
    : n_(n_symbols),
      m_(m_subcarriers),
      k_(n_a),
      data_(static_cast<std::size_t>(n_symbols) * m_subcarriers * n_a, cdouble{0.0, 0.0}) {}

double SampleCube::squared_norm() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return s;
}

PilotGrid generate_pilots(const OfdmConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const double amp = std::sqrt(config.p_t_w);
  PilotGrid grid{Eigen::MatrixXcd(config.n_symbols, config.m_subcarriers)};
  for (int n = 0; n < config.n_symbols; ++n) {
    for (int m = 0; m < config.m_subcarriers; ++m) grid.symbols(n, m) = std::polar(amp, phase(rng));
  }
  return grid;
}

cdouble phase_factor(const OfdmConfig& config, const PilotGrid& pilots, int n, int m,
                     double tau0_s) {
  const double doppler = kTwoPi * config.nu0_hz * n * config.symbol_duration_s();
  const double delay = -kTwoPi * m * config.delta_f_hz * (config.t_cp_s + tau0_s);
  return pilots.symbols(n, m) * std::polar(1.0, doppler + delay);
}

namespace {

void check_dimensions(const OfdmConfig& config, const PilotGrid& pilots) {
  if (pilots.n_symbols() != config.n_symbols || pilots.m_subcarriers() != config.m_subcarriers) {
    throw ModelError(fmt::format("pilot grid is {}x{} but config expects {}x{}",
                                 pilots.n_symbols(), pilots.m_subcarriers(), config.n_symbols,
                                 config.m_subcarriers));
  }
}

}  // namespace

SampleCube noiseless_mean_with_delay(const UcaGeometry& geom, const PolarPosition& pos,
                                     const CVector& f, const OfdmConfig& config,
                                     const PilotGrid& pilots, double tau0_s) {
  require_unit_norm(f, 1e-9, "beamformer");
  if (f.size() != geom.n_a()) throw ModelError("beamformer length does not match the array");
  check_dimensions(config, pilots);

  const RVector r = element_ranges(geom, pos);
  const RVector g = element_gains(r, geom.wavelength_m());
  const CVector a = steering_from_ranges(r, pos.d_m, geom.wavelength_m());
  const cdouble beta = a.transpose() * f;
  const CVector spatial = (g.cast<cdouble>().array() * a.array()).matrix() * beta;

  SampleCube mean(config.n_symbols, config.m_subcarriers, geom.n_a());
  for (int n = 0; n < config.n_symbols; ++n) {
    for (int m = 0; m < config.m_subcarriers; ++m) {
      const cdouble c = phase_factor(config, pilots, n, m, tau0_s);
      for (int k = 0; k < geom.n_a(); ++k) mean(n, m, k) = c * spatial[k];
    }
  }
  return mean;
}

SampleCube noiseless_mean(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
                          const OfdmConfig& config, const PilotGrid& pilots) {
  return noiseless_mean_with_delay(geom, pos, f, config, pilots, 2.0 * pos.d_m / kSpeedOfLight);
}

Observation synthesize_observation(const UcaGeometry& geom, const PolarPosition& pos,
                                   const CVector& f, const OfdmConfig& config,
                                   const PilotGrid& pilots, std::uint64_t seed) {
  Observation obs{noiseless_mean(geom, pos, f, config, pilots), pilots, config, f};
  if (config.sigma2_w > 0.0) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x6e6f697365ULL));
    std::normal_distribution<double> unit(0.0, 1.0);
    const double s = std::sqrt(config.sigma2_w / 2.0);
    for (auto& v : obs.samples.data()) {
      const double re = unit(rng);
      const double im = unit(rng);
      v += cdouble{s * re, s * im};
    }
  }
  return obs;
}

CVector comms_channel(const UcaGeometry& geom, const PolarPosition& pos) {
  const RVector r = element_ranges(geom, pos);
  const RVector g = element_gains(r, geom.wavelength_m());
  const CVector a = steering_from_ranges(r, pos.d_m, geom.wavelength_m());
  return (g.cast<cdouble>().array() * a.array()).matrix();
}

Snr ue_received_snr(const UcaGeometry& geom, const PolarPosition& pos, const CVector& f,
                    const OfdmConfig& config) {
  require_unit_norm(f, 1e-9, "beamformer");
  const CVector h = comms_channel(geom, pos);
  const cdouble hf = h.transpose() * f;
  Snr snr;
  snr.linear = config.p_t_w * std::norm(hf) / config.sigma2_w;
  snr.db = linear_to_db(snr.linear);
  return snr;
}

double achievable_rate(const UcaGeometry& geom, const CVector& f, const OfdmConfig& config,
                       const PolarPosition& pos_true) {
  const Snr snr = ue_received_snr(geom, pos_true, f, config);
  return config.bandwidth_hz() * std::log2(1.0 + snr.linear);
}

CVector steered_beamformer(const UcaGeometry& geom, const PolarPosition& pos) {
  const CVector h = comms_channel(geom, pos);
  return h.conjugate() / h.norm();
}

}  // namespace nfisac
