#include "nfisac/csv_output.hpp"

#include <cmath>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace nfisac {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

double deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace

const char* const kCrlbHeader = "radius_m,d_m,crlb_d_m,crlb_theta_rad,trace,snr_db,status";
const char* const kSummaryHeader =
    "radius_m,d_m,n_trials,n_failed,rmse_d_m,rmse_d_se_m,rmse_theta_rad,rmse_theta_se_rad,"
    "crlb_d_m,crlb_theta_rad,convergence_rate,success_rate,mean_snr_db,mean_rate_est_bps,"
    "mean_rate_opt_bps";
const char* const kTrialHeader =
    "radius_m,d_true_m,theta_true_deg,d_hat_m,theta_hat_deg,converged,success,failed,"
    "lm_iterations,snr_db,rate_est_bps,rate_opt_bps,seed";
const char* const kRateHeader = "radius_m,d_m,n_trials,mean_snr_db,mean_rate_est_bps,mean_rate_opt_bps";
const char* const kBeamformerHeader = "element,re,im";
const char* const kEstimateHeader =
    "d_true_m,theta_true_deg,d_hat_m,theta_hat_deg,cost,converged,lm_iterations,basin_index";

std::string provenance_line(std::uint64_t seed, const std::string& command) {
  return fmt::format("# nfisac {} seed={} command={}", kToolVersion, seed, command);
}

void write_crlb_csv(std::ostream& out, const std::vector<CrlbRow>& rows) {
  out << kCrlbHeader << '\n';
  for (const CrlbRow& r : rows) {
    // Errors go in the status column with commas stripped.
    std::string status = "ok";
    if (!r.ok) {
      status = "error:" + r.error;
      for (char& c : status) {
        if (c == ',' || c == '\n') c = ';';
      }
    }
    fmt::print(out, "{},{},{},{},{},{},{}\n", num(r.radius_m), num(r.d_m), num(r.crlb_d_m),
               num(r.crlb_theta_rad), num(r.trace), num(r.snr_db), status);
  }
}

void write_summary_csv(std::ostream& out, const std::vector<PointSummary>& rows) {
  out << kSummaryHeader << '\n';
  for (const PointSummary& p : rows) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(p.radius_m), num(p.d_m),
               p.n_trials, p.n_failed, num(p.rmse_d_m), num(p.rmse_d_se_m), num(p.rmse_theta_rad),
               num(p.rmse_theta_se_rad), num(p.crlb_d_m), num(p.crlb_theta_rad),
               num(p.convergence_rate), num(p.success_rate), num(p.mean_snr_db),
               num(p.mean_rate_est_bps), num(p.mean_rate_opt_bps));
  }
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& rows) {
  out << kTrialHeader << '\n';
  for (const TrialRecord& t : rows) {
    fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(t.radius_m), num(t.d_true_m),
               num(deg(t.theta_true_rad)), num(t.d_hat_m), num(deg(t.theta_hat_rad)),
               int(t.converged), int(t.success), int(t.failed), t.lm_iterations, num(t.snr_db),
               num(t.rate_est_bps), num(t.rate_opt_bps), t.seed);
  }
}

void write_rate_csv(std::ostream& out, const std::vector<PointSummary>& rows) {
  out << kRateHeader << '\n';
  for (const PointSummary& p : rows) {
    fmt::print(out, "{},{},{},{},{},{}\n", num(p.radius_m), num(p.d_m), p.n_trials,
               num(p.mean_snr_db), num(p.mean_rate_est_bps), num(p.mean_rate_opt_bps));
  }
}

void write_beamformer_csv(std::ostream& out, const CVector& f) {
  out << kBeamformerHeader << '\n';
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    fmt::print(out, "{},{},{}\n", k, num(f[k].real()), num(f[k].imag()));
  }
}

void write_estimate_csv(std::ostream& out, const EstimateRow& row) {
  out << kEstimateHeader << '\n';
  const MlEstimate& e = row.estimate;
  fmt::print(out, "{},{},{},{},{},{},{},{}\n", num(row.d_true_m), num(deg(row.theta_true_rad)),
             num(e.d_hat_m), num(deg(e.theta_hat_rad)), num(e.cost), int(e.converged),
             e.iterations, e.basin_index);
}

}  // namespace nfisac
