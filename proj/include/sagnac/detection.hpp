// Monte-Carlo single-photon detection: time-tag stream generation from pair
// and noise rates, windowed coincidence counting, and time-tag persistence.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sagnac/types.hpp"

namespace sagnac {

// Per-detector Gaussian jitter chosen so the coincidence peak of two such
// detectors has a 50 ps FWHM.
inline constexpr Scalar kDefaultJitterSigmaPs = 50.0 / (2.3548200450309493 * 1.4142135623730951);

struct DetectorModel {
  Scalar efficiency = 0.80;
  Scalar dark_rate_hz = 50.0;
  Scalar jitter_sigma_ps = kDefaultJitterSigmaPs;
  Scalar dead_time_ns = 0.0;

  void validate() const;  // throws std::invalid_argument
};

struct TimeTagStream {
  std::uint8_t detector_id = 0;
  std::vector<std::int64_t> tags_ps;  // strictly increasing, within [0, duration]
  std::int64_t duration_ps = 0;

  void validate() const;
};

struct CoincidenceResult {
  std::int64_t true_window_counts = 0;
  Scalar accidental_estimate = 0.0;
  std::int64_t window_ps = 0;
  std::int64_t relative_delay_ps = 0;
};

// Poisson pair emissions thinned by each arm's efficiency, detection times
// smeared by per-detector Gaussian jitter (rounded to integer picoseconds),
// plus independent Poisson dark/noise counts per arm. Deterministic per seed.
// Throws std::length_error when the expected event count exceeds max_events.
std::pair<TimeTagStream, TimeTagStream> simulate_pair_streams(
    Scalar pair_rate_hz, Scalar noise_a_hz, Scalar noise_b_hz, Scalar duration_s,
    const DetectorModel& det_a, const DetectorModel& det_b, std::uint64_t seed,
    std::size_t max_events = 50000000);

// Greedy earliest matching of tag pairs with 2|t_a - t_b - delay| <= window;
// each tag joins at most one pair. Returns (index_a, index_b) pairs.
std::vector<std::pair<std::size_t, std::size_t>> match_coincidences(const TimeTagStream& a,
                                                                    const TimeTagStream& b,
                                                                    std::int64_t window_ps,
                                                                    std::int64_t delay_ps);

// Windowed coincidence count plus the offset-window accidental estimate
// (same counter at delay + accidental_offset_ps; 0 selects 100x the window).
CoincidenceResult count_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                                     std::int64_t window_ps, std::int64_t delay_ps,
                                     std::int64_t accidental_offset_ps = 0);

// r1 * r2 * window.
Scalar accidental_rate(Scalar r1_hz, Scalar r2_hz, Scalar window_s);

// Binary persistence: 16-byte header ("TTAG", u32 version, u64 duration_ps),
// then little-endian (u8 detector_id, u64 timestamp_ps) records merged in
// time order.
struct TimeTagFile {
  std::uint32_t version = 1;
  std::int64_t duration_ps = 0;
  std::vector<TimeTagStream> streams;  // ordered by detector_id
};

void write_ttag(const std::string& path, const std::vector<TimeTagStream>& streams);
TimeTagFile read_ttag(const std::string& path);
void write_ttag_csv(const std::string& path, const std::vector<TimeTagStream>& streams);

}  // namespace sagnac
