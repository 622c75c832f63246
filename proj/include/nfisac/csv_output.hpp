#pragma once

// Plot-ready CSV tables. Column names and order are part of the interface.
// Every file opens with one '#' provenance line; numbers use 17 significant
// digits so reruns compare bitwise.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nfisac/experiment_harness.hpp"

namespace nfisac {

inline constexpr const char* kToolVersion = "0.1.0";

struct EstimateRow {
  double d_true_m = 0.0;
  double theta_true_rad = 0.0;
  MlEstimate estimate;
};

std::string provenance_line(std::uint64_t seed, const std::string& command);

extern const char* const kCrlbHeader;
extern const char* const kSummaryHeader;
extern const char* const kTrialHeader;
extern const char* const kRateHeader;
extern const char* const kBeamformerHeader;
extern const char* const kEstimateHeader;

void write_crlb_csv(std::ostream& out, const std::vector<CrlbRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<PointSummary>& rows);
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& rows);
void write_rate_csv(std::ostream& out, const std::vector<PointSummary>& rows);
void write_beamformer_csv(std::ostream& out, const CVector& f);
void write_estimate_csv(std::ostream& out, const EstimateRow& row);

}  // namespace nfisac
