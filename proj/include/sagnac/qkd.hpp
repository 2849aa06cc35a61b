// Entanglement-based energy-time QKD accounting: link budget, basis sifting
// with bit extraction, asymptotic secret-key-rate bound, and long-session
// simulation with drift and outage events.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sagnac/detection.hpp"
#include "sagnac/types.hpp"

namespace sagnac {

// Shannon binary entropy in bits; h(0) = h(1) = 0.
Scalar binary_entropy(Scalar x);

// Asymptotic BBM92-style bound: max(0, sifted * (1 - f_ec h(qz) - h(qx))).
Scalar secret_key_rate(Scalar sifted_rate_hz, Scalar qber_x, Scalar qber_z, Scalar f_ec);

struct LinkConfig {
  Scalar fiber_length_km = 50.0;     // total link, split over symmetric arms
  Scalar loss_db_per_km = 0.2;
  Scalar insertion_loss_db = 3.0;    // per analyzer
  Scalar basis_split = 0.5;          // probability of the Z basis
  std::pair<int, int> channel_pair{19, 23};
  Scalar x_postselection = 0.5;      // central-peak fraction kept in the X basis

  void validate() const;
};

struct LinkBudget {
  Scalar coincidence_rate_hz = 0.0;
  Scalar sifted_rate_hz = 0.0;
  Scalar x_fraction = 0.0;  // share of sifted events in the X basis
  Scalar singles_a_hz = 0.0;
  Scalar singles_b_hz = 0.0;
};

LinkBudget link_budget(const LinkConfig& cfg, Scalar source_pair_rate_hz,
                       const DetectorModel& det);

// Visibility depression with exponential recovery, emulating a sudden
// interferometer phase drift.
struct DriftEvent {
  Scalar t_start_s = 0.0;
  Scalar visibility_drop = 0.0;
  Scalar recovery_tau_s = 60.0;
};

// Zero-rate interval, emulating post-processing latency.
struct OutageEvent {
  Scalar t_start_s = 0.0;
  Scalar duration_s = 0.0;
};

struct SessionEvents {
  std::vector<DriftEvent> drifts;
  std::vector<OutageEvent> outages;
};

struct SessionBin {
  Scalar t_s = 0.0;
  Scalar sifted_rate_hz = 0.0;
  Scalar qber_x = 0.0;
  Scalar qber_z = 0.0;
  Scalar skr_bps = 0.0;
};

struct SessionReport {
  std::vector<SessionBin> bins;
  Scalar bin_s = 0.0;
  Scalar mean_sifted_hz = 0.0;
  Scalar mean_qber_x = 0.0;
  Scalar mean_qber_z = 0.0;
  Scalar mean_skr_bps = 0.0;
};

// Per-bin Poisson sampling of sifted counts and errors. QBER_X follows the
// visibility process (1 - v(t))/2 with v(t) = base_visibility_x minus active
// drift depressions; outages zero the rate for their duration.
SessionReport simulate_session(Scalar sifted_rate_hz, Scalar base_visibility_x,
                               Scalar base_qber_z, Scalar duration_s, Scalar bin_s,
                               const SessionEvents& events, Scalar f_ec, Scalar x_fraction,
                               std::uint64_t seed);

void write_session_csv(const std::string& path, const SessionReport& report);

enum class Basis : std::uint8_t { Z = 0, X = 1 };

struct LabeledTag {
  std::int64_t t_ps = 0;
  Basis basis = Basis::Z;
  std::uint8_t bit = 0;  // Z: early/late time bin, X: interferometer output port
};

struct LabeledStream {
  std::uint8_t detector_id = 0;
  std::vector<LabeledTag> tags;
  std::int64_t duration_ps = 0;

  void validate() const;
};

struct SiftResult {
  std::int64_t coincidences = 0;
  std::vector<std::uint8_t> bits_a;
  std::vector<std::uint8_t> bits_b;
  std::vector<Basis> bases;
  std::int64_t n_z = 0, n_x = 0;
  std::int64_t errors_z = 0, errors_x = 0;
  Scalar qber_z = 0.0, qber_x = 0.0;
};

// Coincidence matching followed by basis filtering; kept pairs carry both
// parties' bits.
SiftResult sift(const LabeledStream& alice, const LabeledStream& bob, std::int64_t window_ps);

// Correlated labeled pair streams with injected error probabilities per
// basis; mismatched-basis outcomes are uniform.
std::pair<LabeledStream, LabeledStream> simulate_labeled_pair_streams(
    Scalar pair_rate_hz, Scalar duration_s, Scalar basis_split, Scalar qber_z, Scalar qber_x,
    Scalar jitter_sigma_ps, std::uint64_t seed);

}  // namespace sagnac
