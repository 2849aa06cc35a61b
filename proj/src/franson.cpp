#include "sagnac/franson.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sagnac/rng.hpp"

namespace sagnac {

namespace {

// Minimum phase span accepted as "one period"; admits endpoint-exclusive
// uniform grids over [0, 2pi).
constexpr Scalar kMinPhaseSpan = 1.9 * M_PI;

}  // namespace

void FransonConfig::validate() const {
  if (!(pump_linewidth_hz > 0) || !(fsr_hz > 0) || !(photon_bandwidth_hz > 0) ||
      !(detector_jitter_ps > 0))
    throw std::invalid_argument("FransonConfig: all fields must be > 0");
}

FsrCheck validate_fsr(const FransonConfig& cfg) {
  cfg.validate();
  FsrCheck check;
  check.ok = cfg.pump_linewidth_hz < cfg.fsr_hz && cfg.fsr_hz < cfg.photon_bandwidth_hz;

  const Scalar delay_ps = 1e12 / cfg.fsr_hz;
  check.jitter_warning = delay_ps < 10.0 * cfg.detector_jitter_ps;

  std::ostringstream msg;
  msg << (check.ok ? "FSR admissible: " : "FSR inadmissible: ") << cfg.pump_linewidth_hz
      << " Hz < " << cfg.fsr_hz << " Hz < " << cfg.photon_bandwidth_hz << " Hz "
      << (check.ok ? "holds" : "violated");
  if (check.jitter_warning)
    msg << "; warning: interferometer delay " << delay_ps << " ps is below 10x detector jitter ("
        << cfg.detector_jitter_ps << " ps)";
  check.diagnostic = msg.str();
  return check;
}

FringeScan simulate_fringe_scan(Scalar true_visibility, Scalar mean_counts,
                                const std::vector<Scalar>& phases, std::uint64_t seed,
                                Scalar phase0, Scalar integration_s) {
  if (true_visibility < 0.0 || true_visibility > 1.0)
    throw std::invalid_argument("simulate_fringe_scan: visibility must be in [0, 1]");
  if (!(mean_counts > 0))
    throw std::invalid_argument("simulate_fringe_scan: mean counts must be > 0");

  Rng rng(seed);
  FringeScan scan;
  scan.phases_rad = phases;
  scan.integration_s = integration_s;
  scan.coincidences.reserve(phases.size());
  for (const Scalar phase : phases) {
    const Scalar mu = mean_counts * (1.0 + true_visibility * std::cos(phase + phase0));
    scan.coincidences.push_back(rng.poisson(std::max(mu, 0.0)));
  }
  return scan;
}

VisibilityFit fit_visibility(const FringeScan& scan) {
  const std::size_t n = scan.phases_rad.size();
  if (n != scan.coincidences.size())
    throw std::invalid_argument("fit_visibility: phase/count length mismatch");
  if (n < 5) throw std::invalid_argument("fit_visibility: need at least 5 phase points");

  const auto [min_it, max_it] =
      std::minmax_element(scan.phases_rad.begin(), scan.phases_rad.end());
  if (*max_it - *min_it < kMinPhaseSpan)
    throw std::invalid_argument("fit_visibility: phases must span at least one period");

  std::int64_t count_max = 0;
  for (const std::int64_t c : scan.coincidences) count_max = std::max(count_max, c);
  if (count_max == 0) throw std::invalid_argument("fit_visibility: all-zero scan");

  // a + b cos(phase + phase0) is linear in (a, c, s) with c = b cos(phase0),
  // s = -b sin(phase0).
  MatX design(static_cast<Eigen::Index>(n), 3);
  VecX y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    design(row, 0) = 1.0;
    design(row, 1) = std::cos(scan.phases_rad[i]);
    design(row, 2) = -std::sin(scan.phases_rad[i]);
    y(row) = static_cast<Scalar>(scan.coincidences[i]);
  }

  const MatX normal = design.transpose() * design;
  const Eigen::FullPivLU<MatX> lu(normal);
  VisibilityFit fit;
  if (!lu.isInvertible()) {
    Scalar lo = static_cast<Scalar>(*std::min_element(scan.coincidences.begin(),
                                                      scan.coincidences.end()));
    Scalar hi = static_cast<Scalar>(count_max);
    fit.visibility = (hi - lo) / (hi + lo);
    fit.visibility_sigma = 0.0;
    fit.phase0 = 0.0;
    fit.fallback = true;
    return fit;
  }

  const MatX cov_shape = lu.inverse();
  const VecX beta = cov_shape * (design.transpose() * y);
  const Scalar a = beta(0), c = beta(1), s = beta(2);
  const Scalar b = std::hypot(c, s);
  if (!(a > 0)) {
    Scalar lo = static_cast<Scalar>(*std::min_element(scan.coincidences.begin(),
                                                      scan.coincidences.end()));
    Scalar hi = static_cast<Scalar>(count_max);
    fit.visibility = (hi - lo) / (hi + lo);
    fit.fallback = true;
    return fit;
  }

  fit.visibility = b / a;
  fit.phase0 = b > 0 ? std::atan2(s, c) : 0.0;

  const VecX residual = y - design * beta;
  const Scalar dof = static_cast<Scalar>(n) - 3.0;
  const Scalar sigma2 = dof > 0 ? residual.squaredNorm() / dof : 0.0;
  const MatX cov = sigma2 * cov_shape;
  if (b > 0) {
    Eigen::Vector3d grad(-b / (a * a), c / (a * b), s / (a * b));
    fit.visibility_sigma = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  } else {
    fit.visibility_sigma = std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2))) / a;
  }
  return fit;
}

Scalar visibility_to_qber(Scalar v) {
  if (v < 0.0 || v > 1.0) throw std::invalid_argument("visibility_to_qber: v must be in [0, 1]");
  return 0.5 * (1.0 - v);
}

void write_fringe_csv(const std::string& path, const FringeScan& scan) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_fringe_csv: cannot open " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", scan.integration_s);
  out << "integration_s," << buf << '\n';
  out << "phase_rad,counts\n";
  for (std::size_t i = 0; i < scan.phases_rad.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", scan.phases_rad[i]);
    out << buf << ',' << scan.coincidences[i] << '\n';
  }
  if (!out) throw std::runtime_error("write_fringe_csv: write failed for " + path);
}

FringeScan read_fringe_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_fringe_csv: cannot open " + path);
  FringeScan scan;
  std::string line;
  std::size_t lineno = 0;
  bool integration_seen = false, header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!integration_seen) {
      if (line.rfind("integration_s,", 0) != 0)
        throw std::runtime_error("read_fringe_csv: missing integration header in " + path);
      scan.integration_s = std::stod(line.substr(14));
      integration_seen = true;
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    Scalar phase = 0;
    char comma = 0;
    std::int64_t count = 0;
    if (!(ss >> phase >> comma >> count) || comma != ',')
      throw std::runtime_error("read_fringe_csv: malformed row at " + path + ":" +
                               std::to_string(lineno));
    scan.phases_rad.push_back(phase);
    scan.coincidences.push_back(count);
  }
  return scan;
}

}  // namespace sagnac
