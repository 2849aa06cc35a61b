// Energy-time entanglement analysis: free-spectral-range admissibility for
// the folded analyzer, two-photon fringe simulation, and visibility fitting.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sagnac/types.hpp"

namespace sagnac {

struct FransonConfig {
  Scalar pump_linewidth_hz = 1e3;       // two-photon bandwidth
  Scalar fsr_hz = 1e9;
  Scalar photon_bandwidth_hz = 100e9;   // single-photon bandwidth
  Scalar detector_jitter_ps = 50.0;

  void validate() const;  // throws std::invalid_argument
};

struct FsrCheck {
  bool ok = false;             // strict pump_linewidth < FSR < photon_bandwidth
  bool jitter_warning = false; // 1/FSR below 10x the detector jitter
  std::string diagnostic;
};

FsrCheck validate_fsr(const FransonConfig& cfg);

struct FringeScan {
  std::vector<Scalar> phases_rad;
  std::vector<std::int64_t> coincidences;
  Scalar integration_s = 0.5;
};

// Poisson counts with mean mean_counts*(1 + V cos(phase + phase0)); the
// phase average of the mean equals mean_counts.
FringeScan simulate_fringe_scan(Scalar true_visibility, Scalar mean_counts,
                                const std::vector<Scalar>& phases, std::uint64_t seed,
                                Scalar phase0 = 0.0, Scalar integration_s = 0.5);

struct VisibilityFit {
  Scalar visibility = 0.0;
  Scalar visibility_sigma = 0.0;
  Scalar phase0 = 0.0;
  bool fallback = false;  // (max-min)/(max+min) used instead of the fit
};

// Least squares of a + b*cos(phase + phase0); visibility = b/a. Requires at
// least 5 points spanning at least one period; throws on degenerate scans.
VisibilityFit fit_visibility(const FringeScan& scan);

// (1 - v)/2.
Scalar visibility_to_qber(Scalar v);

void write_fringe_csv(const std::string& path, const FringeScan& scan);
FringeScan read_fringe_csv(const std::string& path);

}  // namespace sagnac
