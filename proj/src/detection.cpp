#include "sagnac/detection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "sagnac/rng.hpp"

namespace sagnac {

void DetectorModel::validate() const {
  if (efficiency < 0.0 || efficiency > 1.0)
    throw std::invalid_argument("DetectorModel: efficiency must be in [0, 1]");
  if (dark_rate_hz < 0.0 || jitter_sigma_ps < 0.0 || dead_time_ns < 0.0)
    throw std::invalid_argument("DetectorModel: rates, jitter, and dead time must be >= 0");
}

void TimeTagStream::validate() const {
  std::int64_t prev = -1;
  for (const std::int64_t t : tags_ps) {
    if (t <= prev) throw std::invalid_argument("TimeTagStream: tags not strictly increasing");
    if (t < 0 || t > duration_ps)
      throw std::invalid_argument("TimeTagStream: tag outside [0, duration]");
    prev = t;
  }
}

namespace {

// Sort, then enforce dead time and strict ordering.
void finalize_stream(TimeTagStream& stream, Scalar dead_time_ns) {
  std::sort(stream.tags_ps.begin(), stream.tags_ps.end());
  const std::int64_t dead_ps = std::llround(dead_time_ns * 1e3);
  std::vector<std::int64_t> kept;
  kept.reserve(stream.tags_ps.size());
  std::int64_t last = 0;
  for (const std::int64_t t : stream.tags_ps) {
    if (!kept.empty() && (t <= last || t - last < dead_ps)) continue;
    kept.push_back(t);
    last = t;
  }
  stream.tags_ps = std::move(kept);
  stream.validate();
}

void append_poisson_tags(TimeTagStream& stream, Scalar rate_hz, Scalar duration_s, Rng& rng) {
  if (rate_hz <= 0.0) return;
  Scalar t = 0.0;
  while (true) {
    t += rng.exponential(rate_hz);
    if (t >= duration_s) break;
    stream.tags_ps.push_back(std::llround(t * 1e12));
  }
}

}  // namespace

std::pair<TimeTagStream, TimeTagStream> simulate_pair_streams(
    Scalar pair_rate_hz, Scalar noise_a_hz, Scalar noise_b_hz, Scalar duration_s,
    const DetectorModel& det_a, const DetectorModel& det_b, std::uint64_t seed,
    std::size_t max_events) {
  if (pair_rate_hz < 0.0 || noise_a_hz < 0.0 || noise_b_hz < 0.0)
    throw std::invalid_argument("simulate_pair_streams: rates must be >= 0");
  if (!(duration_s > 0.0))
    throw std::invalid_argument("simulate_pair_streams: duration must be > 0");
  det_a.validate();
  det_b.validate();

  const Scalar expected = duration_s * (2.0 * pair_rate_hz + noise_a_hz + noise_b_hz +
                                        det_a.dark_rate_hz + det_b.dark_rate_hz);
  if (expected > static_cast<Scalar>(max_events))
    throw std::length_error("simulate_pair_streams: expected event count exceeds memory bound");

  const std::int64_t duration_ps = std::llround(duration_s * 1e12);
  TimeTagStream a{0, {}, duration_ps};
  TimeTagStream b{1, {}, duration_ps};

  Rng rng(seed);
  Rng pair_rng = rng.derive(0);
  Rng noise_a_rng = rng.derive(1);
  Rng noise_b_rng = rng.derive(2);

  if (pair_rate_hz > 0.0) {
    Scalar t = 0.0;
    while (true) {
      t += pair_rng.exponential(pair_rate_hz);
      if (t >= duration_s) break;
      const bool hit_a = pair_rng.uniform() < det_a.efficiency;
      const bool hit_b = pair_rng.uniform() < det_b.efficiency;
      const Scalar t_ps = t * 1e12;
      if (hit_a) {
        const std::int64_t tag = std::llround(t_ps + pair_rng.normal(0.0, det_a.jitter_sigma_ps));
        if (tag >= 0 && tag <= duration_ps) a.tags_ps.push_back(tag);
      }
      if (hit_b) {
        const std::int64_t tag = std::llround(t_ps + pair_rng.normal(0.0, det_b.jitter_sigma_ps));
        if (tag >= 0 && tag <= duration_ps) b.tags_ps.push_back(tag);
      }
    }
  }

  append_poisson_tags(a, noise_a_hz + det_a.dark_rate_hz, duration_s, noise_a_rng);
  append_poisson_tags(b, noise_b_hz + det_b.dark_rate_hz, duration_s, noise_b_rng);

  finalize_stream(a, det_a.dead_time_ns);
  finalize_stream(b, det_b.dead_time_ns);
  return {std::move(a), std::move(b)};
}

std::vector<std::pair<std::size_t, std::size_t>> match_coincidences(const TimeTagStream& a,
                                                                    const TimeTagStream& b,
                                                                    std::int64_t window_ps,
                                                                    std::int64_t delay_ps) {
  if (window_ps <= 0) throw std::invalid_argument("match_coincidences: window must be > 0");
  a.validate();
  b.validate();

  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::size_t i = 0, j = 0;
  while (i < a.tags_ps.size() && j < b.tags_ps.size()) {
    const std::int64_t d = a.tags_ps[i] - b.tags_ps[j] - delay_ps;
    if (2 * std::abs(d) <= window_ps) {
      matches.emplace_back(i, j);
      ++i;
      ++j;
    } else if (d < 0) {
      ++i;
    } else {
      ++j;
    }
  }
  return matches;
}

CoincidenceResult count_coincidences(const TimeTagStream& a, const TimeTagStream& b,
                                     std::int64_t window_ps, std::int64_t delay_ps,
                                     std::int64_t accidental_offset_ps) {
  if (accidental_offset_ps == 0) accidental_offset_ps = 100 * window_ps;
  CoincidenceResult result;
  result.window_ps = window_ps;
  result.relative_delay_ps = delay_ps;
  result.true_window_counts =
      static_cast<std::int64_t>(match_coincidences(a, b, window_ps, delay_ps).size());
  result.accidental_estimate = static_cast<Scalar>(
      match_coincidences(a, b, window_ps, delay_ps + accidental_offset_ps).size());
  return result;
}

Scalar accidental_rate(Scalar r1_hz, Scalar r2_hz, Scalar window_s) {
  if (r1_hz < 0.0 || r2_hz < 0.0 || window_s < 0.0)
    throw std::invalid_argument("accidental_rate: inputs must be >= 0");
  return r1_hz * r2_hz * window_s;
}

namespace {

constexpr char kTtagMagic[4] = {'T', 'T', 'A', 'G'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::vector<std::pair<std::int64_t, std::uint8_t>> merge_records(
    const std::vector<TimeTagStream>& streams) {
  std::vector<std::pair<std::int64_t, std::uint8_t>> records;
  for (const auto& s : streams) {
    s.validate();
    for (const std::int64_t t : s.tags_ps) records.emplace_back(t, s.detector_id);
  }
  std::sort(records.begin(), records.end());
  return records;
}

}  // namespace

void write_ttag(const std::string& path, const std::vector<TimeTagStream>& streams) {
  if (streams.empty()) throw std::invalid_argument("write_ttag: no streams");
  const std::int64_t duration = streams.front().duration_ps;
  for (const auto& s : streams)
    if (s.duration_ps != duration)
      throw std::invalid_argument("write_ttag: streams disagree on duration");

  std::string buf;
  buf.append(kTtagMagic, 4);
  put_u32(buf, 1);
  put_u64(buf, static_cast<std::uint64_t>(duration));
  for (const auto& [t, id] : merge_records(streams)) {
    buf.push_back(static_cast<char>(id));
    put_u64(buf, static_cast<std::uint64_t>(t));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ttag: cannot open " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write_ttag: write failed for " + path);
}

TimeTagFile read_ttag(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ttag: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16 || buf.compare(0, 4, kTtagMagic, 4) != 0)
    throw std::runtime_error("read_ttag: bad header in " + path);
  const auto* base = reinterpret_cast<const unsigned char*>(buf.data());

  TimeTagFile file;
  file.version = get_u32(base + 4);
  file.duration_ps = static_cast<std::int64_t>(get_u64(base + 8));
  if ((buf.size() - 16) % 9 != 0)
    throw std::runtime_error("read_ttag: truncated record in " + path);

  std::map<std::uint8_t, TimeTagStream> by_id;
  for (std::size_t off = 16; off < buf.size(); off += 9) {
    const std::uint8_t id = base[off];
    const auto t = static_cast<std::int64_t>(get_u64(base + off + 1));
    auto& stream = by_id[id];
    stream.detector_id = id;
    stream.duration_ps = file.duration_ps;
    stream.tags_ps.push_back(t);
  }
  for (auto& [id, stream] : by_id) {
    stream.validate();
    file.streams.push_back(std::move(stream));
  }
  return file;
}

void write_ttag_csv(const std::string& path, const std::vector<TimeTagStream>& streams) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_ttag_csv: cannot open " + path);
  out << "detector_id,timestamp_ps\n";
  for (const auto& [t, id] : merge_records(streams))
    out << static_cast<int>(id) << ',' << t << '\n';
  if (!out) throw std::runtime_error("write_ttag_csv: write failed for " + path);
}

}  // namespace sagnac
