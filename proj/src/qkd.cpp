#include "sagnac/qkd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "sagnac/rng.hpp"

namespace sagnac {

Scalar binary_entropy(Scalar x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("binary_entropy: x must be in [0, 1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

Scalar secret_key_rate(Scalar sifted_rate_hz, Scalar qber_x, Scalar qber_z, Scalar f_ec) {
  if (sifted_rate_hz < 0.0) throw std::invalid_argument("secret_key_rate: rate must be >= 0");
  if (qber_x < 0.0 || qber_x > 0.5 || qber_z < 0.0 || qber_z > 0.5)
    throw std::invalid_argument("secret_key_rate: QBERs must be in [0, 0.5]");
  if (f_ec < 1.0) throw std::invalid_argument("secret_key_rate: f_ec must be >= 1");
  const Scalar secret_fraction = 1.0 - f_ec * binary_entropy(qber_z) - binary_entropy(qber_x);
  return std::max(0.0, sifted_rate_hz * secret_fraction);
}

void LinkConfig::validate() const {
  if (fiber_length_km < 0.0 || loss_db_per_km < 0.0 || insertion_loss_db < 0.0)
    throw std::invalid_argument("LinkConfig: losses must be >= 0");
  if (!(basis_split > 0.0) || !(basis_split < 1.0))
    throw std::invalid_argument("LinkConfig: basis_split must be in (0, 1)");
  if (x_postselection <= 0.0 || x_postselection > 1.0)
    throw std::invalid_argument("LinkConfig: x_postselection must be in (0, 1]");
}

LinkBudget link_budget(const LinkConfig& cfg, Scalar source_pair_rate_hz,
                       const DetectorModel& det) {
  cfg.validate();
  det.validate();
  if (source_pair_rate_hz < 0.0)
    throw std::invalid_argument("link_budget: pair rate must be >= 0");

  const Scalar arm_db = 0.5 * cfg.fiber_length_km * cfg.loss_db_per_km + cfg.insertion_loss_db;
  const Scalar arm_transmittance = std::pow(10.0, -arm_db / 10.0);

  LinkBudget budget;
  budget.coincidence_rate_hz = source_pair_rate_hz * arm_transmittance * arm_transmittance *
                               det.efficiency * det.efficiency;
  const Scalar z_share = cfg.basis_split * cfg.basis_split;
  const Scalar x_share = (1.0 - cfg.basis_split) * (1.0 - cfg.basis_split) * cfg.x_postselection;
  budget.sifted_rate_hz = budget.coincidence_rate_hz * (z_share + x_share);
  budget.x_fraction = x_share / (z_share + x_share);
  budget.singles_a_hz =
      source_pair_rate_hz * arm_transmittance * det.efficiency + det.dark_rate_hz;
  budget.singles_b_hz = budget.singles_a_hz;
  return budget;
}

namespace {

Scalar visibility_at(Scalar t, Scalar base, const std::vector<DriftEvent>& drifts) {
  Scalar v = base;
  for (const auto& drift : drifts) {
    if (t < drift.t_start_s) continue;
    const Scalar tau = std::max(drift.recovery_tau_s, 1e-9);
    v -= drift.visibility_drop * std::exp(-(t - drift.t_start_s) / tau);
  }
  return std::clamp(v, 0.0, 1.0);
}

Scalar live_fraction(Scalar t0, Scalar t1, const std::vector<OutageEvent>& outages) {
  Scalar dead = 0.0;
  for (const auto& outage : outages) {
    const Scalar lo = std::max(t0, outage.t_start_s);
    const Scalar hi = std::min(t1, outage.t_start_s + outage.duration_s);
    dead += std::max(0.0, hi - lo);
  }
  return std::clamp(1.0 - dead / (t1 - t0), 0.0, 1.0);
}

}  // namespace

SessionReport simulate_session(Scalar sifted_rate_hz, Scalar base_visibility_x,
                               Scalar base_qber_z, Scalar duration_s, Scalar bin_s,
                               const SessionEvents& events, Scalar f_ec, Scalar x_fraction,
                               std::uint64_t seed) {
  if (sifted_rate_hz < 0.0) throw std::invalid_argument("simulate_session: rate must be >= 0");
  if (!(duration_s > 0) || !(bin_s > 0) || bin_s > duration_s)
    throw std::invalid_argument("simulate_session: need 0 < bin_s <= duration_s");
  if (base_visibility_x < 0.0 || base_visibility_x > 1.0)
    throw std::invalid_argument("simulate_session: visibility must be in [0, 1]");
  if (base_qber_z < 0.0 || base_qber_z > 0.5)
    throw std::invalid_argument("simulate_session: QBER_Z must be in [0, 0.5]");
  if (x_fraction < 0.0 || x_fraction > 1.0)
    throw std::invalid_argument("simulate_session: x_fraction must be in [0, 1]");

  Rng rng(seed);
  SessionReport report;
  report.bin_s = bin_s;
  const auto n_bins = static_cast<std::size_t>(std::max<std::int64_t>(
      1, std::llround(duration_s / bin_s)));
  report.bins.reserve(n_bins);

  Scalar sum_sifted = 0.0, sum_qx = 0.0, sum_qz = 0.0, sum_skr = 0.0;
  for (std::size_t k = 0; k < n_bins; ++k) {
    const Scalar t0 = static_cast<Scalar>(k) * bin_s;
    const Scalar t1 = t0 + bin_s;
    const Scalar live = live_fraction(t0, t1, events.outages);
    const Scalar qx_true =
        0.5 * (1.0 - visibility_at(t0 + 0.5 * bin_s, base_visibility_x, events.drifts));

    const std::int64_t n_x = rng.poisson(sifted_rate_hz * bin_s * live * x_fraction);
    const std::int64_t n_z = rng.poisson(sifted_rate_hz * bin_s * live * (1.0 - x_fraction));
    const std::int64_t e_x = std::min<std::int64_t>(rng.poisson(n_x * qx_true), n_x);
    const std::int64_t e_z = std::min<std::int64_t>(rng.poisson(n_z * base_qber_z), n_z);

    SessionBin bin;
    bin.t_s = t0;
    bin.sifted_rate_hz = static_cast<Scalar>(n_x + n_z) / bin_s;
    bin.qber_x = n_x > 0 ? std::min(0.5, static_cast<Scalar>(e_x) / n_x) : 0.0;
    bin.qber_z = n_z > 0 ? std::min(0.5, static_cast<Scalar>(e_z) / n_z) : 0.0;
    bin.skr_bps = secret_key_rate(bin.sifted_rate_hz, bin.qber_x, bin.qber_z, f_ec);
    report.bins.push_back(bin);

    sum_sifted += bin.sifted_rate_hz;
    sum_qx += bin.qber_x;
    sum_qz += bin.qber_z;
    sum_skr += bin.skr_bps;
  }

  const auto n = static_cast<Scalar>(report.bins.size());
  report.mean_sifted_hz = sum_sifted / n;
  report.mean_qber_x = sum_qx / n;
  report.mean_qber_z = sum_qz / n;
  report.mean_skr_bps = sum_skr / n;
  return report;
}

void write_session_csv(const std::string& path, const SessionReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_session_csv: cannot open " + path);
  out << "t_s,sifted_hz,qber_x,qber_z,skr_bps\n";
  char buf[160];
  for (const auto& bin : report.bins) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g\n", bin.t_s, bin.sifted_rate_hz,
                  bin.qber_x, bin.qber_z, bin.skr_bps);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_session_csv: write failed for " + path);
}

void LabeledStream::validate() const {
  std::int64_t prev = -1;
  for (const auto& tag : tags) {
    if (tag.t_ps <= prev) throw std::invalid_argument("LabeledStream: tags not strictly sorted");
    if (tag.t_ps < 0 || tag.t_ps > duration_ps)
      throw std::invalid_argument("LabeledStream: tag outside [0, duration]");
    if (tag.bit > 1) throw std::invalid_argument("LabeledStream: bit must be 0 or 1");
    if (tag.basis != Basis::Z && tag.basis != Basis::X)
      throw std::invalid_argument("LabeledStream: unlabeled tag");
    prev = tag.t_ps;
  }
}

SiftResult sift(const LabeledStream& alice, const LabeledStream& bob, std::int64_t window_ps) {
  alice.validate();
  bob.validate();

  TimeTagStream tags_a{0, {}, alice.duration_ps};
  TimeTagStream tags_b{1, {}, bob.duration_ps};
  tags_a.tags_ps.reserve(alice.tags.size());
  tags_b.tags_ps.reserve(bob.tags.size());
  for (const auto& tag : alice.tags) tags_a.tags_ps.push_back(tag.t_ps);
  for (const auto& tag : bob.tags) tags_b.tags_ps.push_back(tag.t_ps);

  SiftResult result;
  for (const auto& [ia, ib] : match_coincidences(tags_a, tags_b, window_ps, 0)) {
    ++result.coincidences;
    const LabeledTag& ta = alice.tags[ia];
    const LabeledTag& tb = bob.tags[ib];
    if (ta.basis != tb.basis) continue;
    result.bits_a.push_back(ta.bit);
    result.bits_b.push_back(tb.bit);
    result.bases.push_back(ta.basis);
    const bool error = ta.bit != tb.bit;
    if (ta.basis == Basis::Z) {
      ++result.n_z;
      result.errors_z += error;
    } else {
      ++result.n_x;
      result.errors_x += error;
    }
  }
  result.qber_z = result.n_z > 0 ? static_cast<Scalar>(result.errors_z) / result.n_z : 0.0;
  result.qber_x = result.n_x > 0 ? static_cast<Scalar>(result.errors_x) / result.n_x : 0.0;
  return result;
}

std::pair<LabeledStream, LabeledStream> simulate_labeled_pair_streams(
    Scalar pair_rate_hz, Scalar duration_s, Scalar basis_split, Scalar qber_z, Scalar qber_x,
    Scalar jitter_sigma_ps, std::uint64_t seed) {
  if (pair_rate_hz < 0.0 || !(duration_s > 0))
    throw std::invalid_argument("simulate_labeled_pair_streams: bad rate or duration");
  if (!(basis_split > 0.0) || !(basis_split < 1.0))
    throw std::invalid_argument("simulate_labeled_pair_streams: basis_split must be in (0, 1)");
  if (qber_z < 0.0 || qber_z > 0.5 || qber_x < 0.0 || qber_x > 0.5)
    throw std::invalid_argument("simulate_labeled_pair_streams: QBERs must be in [0, 0.5]");

  const std::int64_t duration_ps = std::llround(duration_s * 1e12);
  LabeledStream alice{0, {}, duration_ps};
  LabeledStream bob{1, {}, duration_ps};

  Rng rng(seed);
  Scalar t = 0.0;
  if (pair_rate_hz > 0.0) {
    while (true) {
      t += rng.exponential(pair_rate_hz);
      if (t >= duration_s) break;
      const Scalar t_ps = t * 1e12;
      const Basis basis_a = rng.uniform() < basis_split ? Basis::Z : Basis::X;
      const Basis basis_b = rng.uniform() < basis_split ? Basis::Z : Basis::X;
      const auto bit_a = static_cast<std::uint8_t>(rng.uniform() < 0.5);
      std::uint8_t bit_b = 0;
      if (basis_a == basis_b) {
        const Scalar q = basis_a == Basis::Z ? qber_z : qber_x;
        bit_b = rng.uniform() < q ? static_cast<std::uint8_t>(1 - bit_a) : bit_a;
      } else {
        bit_b = static_cast<std::uint8_t>(rng.uniform() < 0.5);
      }
      const std::int64_t tag_a = std::llround(t_ps + rng.normal(0.0, jitter_sigma_ps));
      const std::int64_t tag_b = std::llround(t_ps + rng.normal(0.0, jitter_sigma_ps));
      if (tag_a >= 0 && tag_a <= duration_ps) alice.tags.push_back({tag_a, basis_a, bit_a});
      if (tag_b >= 0 && tag_b <= duration_ps) bob.tags.push_back({tag_b, basis_b, bit_b});
    }
  }

  const auto by_time = [](const LabeledTag& x, const LabeledTag& y) { return x.t_ps < y.t_ps; };
  std::sort(alice.tags.begin(), alice.tags.end(), by_time);
  std::sort(bob.tags.begin(), bob.tags.end(), by_time);
  const auto dedupe = [](LabeledStream& s) {
    std::vector<LabeledTag> kept;
    kept.reserve(s.tags.size());
    std::int64_t prev = -1;
    for (const auto& tag : s.tags) {
      if (tag.t_ps == prev) continue;
      kept.push_back(tag);
      prev = tag.t_ps;
    }
    s.tags = std::move(kept);
    s.validate();
  };
  dedupe(alice);
  dedupe(bob);
  return {std::move(alice), std::move(bob)};
}

}  // namespace sagnac
