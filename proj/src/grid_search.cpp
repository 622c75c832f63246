// Coarse cost-surface search. Rows are ranges, columns are angles.
//
// With n_theta = L·n_a and θ_j = 2πj/n_theta, element k sees the UE at angular
// offset θ_j − ψ_k = 2π(j − kL)/n_theta, so every per-element quantity is a
// circular shift of one row template. β, Σ conj(ξ) and Σ 1/r² over a whole row
// then become circular convolutions of that template with per-element values.

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

#include <unsupported/Eigen/FFT>

#include "nfisac/ml_estimator.hpp"

namespace nfisac {

namespace {

// Largest |1 − ∂r/∂d| over the circle; bounds the spatial phase rate in d.
double max_one_minus_alpha_d(double d, double R) {
  constexpr int kSamples = 256;
  double best = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double phi = kTwoPi * i / kSamples;
    const double r = std::sqrt(std::max(d * d + R * R - 2.0 * d * R * std::cos(phi), 0.0));
    if (r <= 0.0) continue;
    best = std::max(best, std::abs(1.0 - (d - R * std::cos(phi)) / r));
  }
  return best;
}

using Key = std::tuple<double, int, int>;  // (cost, d index, θ index)

class BasinCollector {
 public:
  explicit BasinCollector(int capacity) : capacity_(static_cast<std::size_t>(capacity)) {}

  void offer(const Key& key) {
    if (heap_.size() < capacity_) {
      heap_.push(key);
    } else if (key < heap_.top()) {
      heap_.pop();
      heap_.push(key);
    }
  }

  std::vector<Key> sorted() {
    std::vector<Key> out;
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t capacity_;
  std::priority_queue<Key> heap_;  // max-heap: worst retained basin on top
};

// Produces one row of the cost surface at a time.
class RowEvaluator {
 public:
  RowEvaluator(const LikelihoodModel& model, int n_theta)
      : model_(model), n_theta_(n_theta), n_a_(model.geometry().n_a()) {
    use_fft_ = n_theta_ % n_a_ == 0;
    if (use_fft_) {
      stride_ = n_theta_ / n_a_;
      const CVector& f = model.beamformer();
      fft_.fwd(f_spectrum_, std::vector<cdouble>(f.data(), f.data() + n_a_));
      h_.resize(n_theta_);
      gh_.resize(n_theta_);
      inv_r2_.resize(n_theta_);
      phase_.resize(n_a_);
    }
  }

  bool uses_fft() const { return use_fft_; }

  std::vector<double> row(double d, bool force_direct = false) {
    const CVector w = model_.delay_sum(2.0 * d / kSpeedOfLight);
    return (use_fft_ && !force_direct) ? row_fft(d, w) : row_direct(d, w);
  }

 private:
  std::vector<double> row_direct(double d, const CVector& w) const {
    const UcaGeometry& geom = model_.geometry();
    const CVector& f = model_.beamformer();
    const double D = model_.deterministic_scale();
    std::vector<double> out(n_theta_);
    for (int j = 0; j < n_theta_; ++j) {
      const PolarPosition p{d, kTwoPi * j / n_theta_};
      const RVector r = element_ranges(geom, p);
      const CVector a = steering_from_ranges(r, d, geom.wavelength_m());
      const RVector g = element_gains(r, geom.wavelength_m());
      const cdouble beta = a.transpose() * f;
      cdouble corr{};
      double inv_r2 = 0.0;
      for (int k = 0; k < n_a_; ++k) {
        corr += g[k] * a[k] * std::conj(w[k]);
        inv_r2 += 1.0 / (r[k] * r[k]);
      }
      out[j] = D * std::norm(beta) * inv_r2 - 2.0 * (beta * corr).real();
    }
    return out;
  }

  // Index i = q + L·p splits each row convolution into L circular
  // convolutions of length n_a, one per residue q.
  std::vector<double> row_fft(double d, const CVector& w) {
    const UcaGeometry& geom = model_.geometry();
    const double R = geom.radius_m();
    const double lambda = geom.wavelength_m();
    const double inv_sqrt_na = 1.0 / std::sqrt(static_cast<double>(n_a_));

    // r(φ) = r(−φ), so only half the kernel needs trig.
    for (int i = 0; i <= n_theta_ / 2; ++i) {
      const double phi = kTwoPi * i / n_theta_;
      const double r = std::sqrt(std::max(d * d + R * R - 2.0 * d * R * std::cos(phi), 0.0));
      h_[i] = std::polar(inv_sqrt_na, kTwoPi * (d - r) / lambda);
      gh_[i] = (lambda / (4.0 * kPi * r)) * h_[i];
      inv_r2_[i] = 1.0 / (r * r);
    }
    for (int i = n_theta_ / 2 + 1; i < n_theta_; ++i) {
      h_[i] = h_[n_theta_ - i];
      gh_[i] = gh_[n_theta_ - i];
      inv_r2_[i] = inv_r2_[n_theta_ - i];
    }

    std::vector<cdouble> w_conj(n_a_);
    for (int k = 0; k < n_a_; ++k) w_conj[k] = std::conj(w[k]);
    fft_.fwd(w_spectrum_, w_conj);

    // Σ_k 1/r_k² repeats with period L in the angle index.
    std::vector<double> s(stride_, 0.0);
    for (int q = 0; q < stride_; ++q) {
      for (int p = 0; p < n_a_; ++p) s[q] += inv_r2_[q + p * stride_];
    }

    const double D = model_.deterministic_scale();
    std::vector<double> out(n_theta_);
    for (int q = 0; q < stride_; ++q) {
      for (int p = 0; p < n_a_; ++p) {
        phase_[p] = h_[q + p * stride_];
      }
      fft_.fwd(spec_a_, phase_);
      for (int p = 0; p < n_a_; ++p) {
        phase_[p] = gh_[q + p * stride_];
      }
      fft_.fwd(spec_b_, phase_);
      for (int p = 0; p < n_a_; ++p) {
        spec_a_[p] *= f_spectrum_[p];
        spec_b_[p] *= w_spectrum_[p];
      }
      fft_.inv(beta_, spec_a_);
      fft_.inv(corr_, spec_b_);
      for (int p = 0; p < n_a_; ++p) {
        out[q + p * stride_] = D * std::norm(beta_[p]) * s[q] - 2.0 * (beta_[p] * corr_[p]).real();
      }
    }
    return out;
  }

  const LikelihoodModel& model_;
  int n_theta_;
  int n_a_;
  bool use_fft_ = false;
  int stride_ = 1;
  Eigen::FFT<double> fft_;
  std::vector<cdouble> f_spectrum_, w_spectrum_;
  std::vector<cdouble> h_, gh_, phase_, spec_a_, spec_b_, beta_, corr_;
  std::vector<double> inv_r2_;
};

Eigen::MatrixXd full_surface(const LikelihoodModel& model, const ResolvedGrid& grid,
                             bool force_direct) {
  RowEvaluator eval(model, grid.n_theta);
  Eigen::MatrixXd out(grid.d_nodes_m.size(), grid.n_theta);
  for (std::size_t i = 0; i < grid.d_nodes_m.size(); ++i) {
    const std::vector<double> row = eval.row(grid.d_nodes_m[i], force_direct);
    for (int j = 0; j < grid.n_theta; ++j) out(static_cast<Eigen::Index>(i), j) = row[j];
  }
  return out;
}

}  // namespace

ResolvedGrid resolve_grid(const GridSpec& spec, const UcaGeometry& geom,
                          const OfdmConfig& config) {
  spec.validate();
  const double R = geom.radius_m();
  const double d_min = spec.d_min_m > 0.0 ? spec.d_min_m : std::max(2.0 * R, 1.0);
  if (!(d_min > R)) throw ModelError("grid d_min_m must exceed the array radius");
  if (!(d_min < spec.d_max_m)) throw ModelError("grid d_min_m must be below d_max_m");

  ResolvedGrid grid;
  if (spec.n_theta > 0) {
    grid.n_theta = spec.n_theta;
  } else {
    const double needed = 8.0 * kPi * spec.oversample * R / geom.wavelength_m();
    grid.n_theta = geom.n_a();
    while (grid.n_theta < needed) grid.n_theta *= 2;
  }

  if (spec.n_d > 0) {
    if (spec.n_d == 1) {
      grid.d_nodes_m.push_back(d_min);
    } else {
      const double ratio = std::log(spec.d_max_m / d_min);
      for (int i = 0; i < spec.n_d; ++i) {
        grid.d_nodes_m.push_back(d_min * std::exp(ratio * i / (spec.n_d - 1)));
      }
    }
  } else {
    // Half-period spacing of the fastest cost oscillation in d: the two-way
    // spatial phase plus the delay phase across the band.
    const double k0 = kTwoPi / geom.wavelength_m();
    const double delay_rate =
        4.0 * kPi * (config.m_subcarriers - 1) * config.delta_f_hz / kSpeedOfLight;
    double d = d_min;
    while (d < spec.d_max_m) {
      grid.d_nodes_m.push_back(d);
      const double rate = 2.0 * k0 * max_one_minus_alpha_d(d, R) + delay_rate;
      d += kPi / (spec.oversample * std::max(rate, 1e-12));
    }
    grid.d_nodes_m.push_back(spec.d_max_m);
  }
  return grid;
}

Eigen::MatrixXd grid_costs_direct(const LikelihoodModel& model, const ResolvedGrid& grid) {
  return full_surface(model, grid, true);
}

Eigen::MatrixXd grid_costs_fft(const LikelihoodModel& model, const ResolvedGrid& grid) {
  if (grid.n_theta % model.geometry().n_a() != 0) {
    throw ModelError("FFT grid evaluation needs n_theta to be a multiple of n_a");
  }
  return full_surface(model, grid, false);
}

std::vector<Basin> coarse_grid_search(const LikelihoodModel& model, const ResolvedGrid& grid,
                                      int n_basins) {
  if (n_basins < 1) throw ModelError("n_basins must be >= 1");
  const int n_d = static_cast<int>(grid.d_nodes_m.size());
  const int n_t = grid.n_theta;
  if (n_d < 1 || n_t < 1) throw ModelError("empty search grid");

  RowEvaluator eval(model, n_t);
  BasinCollector collector(n_basins);

  // Rolling window of three rows so memory stays O(n_theta).
  std::vector<double> prev;
  std::vector<double> cur = eval.row(grid.d_nodes_m[0]);
  std::vector<double> next;
  for (int i = 0; i < n_d; ++i) {
    next = (i + 1 < n_d) ? eval.row(grid.d_nodes_m[i + 1]) : std::vector<double>{};
    for (int j = 0; j < n_t; ++j) {
      const Key key{cur[j], i, j};
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di) {
        const std::vector<double>* row = di < 0 ? &prev : (di > 0 ? &next : &cur);
        if (row->empty()) continue;
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int jj = (j + dj + n_t) % n_t;
          if (di == 0 && jj == j) continue;
          if (Key{(*row)[jj], i + di, jj} < key) {
            is_min = false;
            break;
          }
        }
      }
      if (is_min) collector.offer(key);
    }
    prev = std::move(cur);
    cur = std::move(next);
  }

  std::vector<Basin> basins;
  for (const auto& [c, i, j] : collector.sorted()) {
    basins.push_back(Basin{PolarPosition{grid.d_nodes_m[i], grid.theta(j)}, c, i, j});
  }
  return basins;
}

std::vector<Basin> coarse_grid_search(const LikelihoodModel& model, const GridSpec& spec) {
  const ResolvedGrid grid = resolve_grid(spec, model.geometry(), model.config());
  return coarse_grid_search(model, grid, spec.n_basins);
}

std::vector<Basin> coarse_grid_search(const Observation& obs, const UcaGeometry& geom,
                                      const MatchedFilterBank& bank, const GridSpec& spec) {
  return coarse_grid_search(LikelihoodModel(obs, geom, bank), spec);
}

}  // namespace nfisac
