// Shared test helpers: random states, independent oracles, and file scratch
// space. Oracles here must stay independent of the implementation paths they
// check.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sagnac/rng.hpp"
#include "sagnac/state.hpp"
#include "sagnac/tomography.hpp"
#include "sagnac/types.hpp"

namespace test_util {

using namespace sagnac;

inline Mat4c random_density(Rng& rng) {
  Mat4c t;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) t(r, c) = Complex(rng.normal(), rng.normal());
  Mat4c m = t.adjoint() * t;
  return m / m.trace().real();
}

inline Scalar trace_distance(const Mat4c& x, const Mat4c& y) {
  const Eigen::SelfAdjointEigenSolver<Mat4c> es(x - y, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// O(n^2) earliest-match greedy pairing; the coincidence-counter oracle.
inline std::size_t brute_force_matches(const std::vector<std::int64_t>& a,
                                       const std::vector<std::int64_t>& b,
                                       std::int64_t window_ps, std::int64_t delay_ps) {
  std::vector<bool> used(b.size(), false);
  std::size_t count = 0;
  for (const std::int64_t ta : a) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      if (2 * std::llabs(ta - b[j] - delay_ps) <= window_ps) {
        used[j] = true;
        ++count;
        break;
      }
    }
  }
  return count;
}

// Poisson log-likelihood (up to the factorial constant) of a physical state
// against recorded counts, with the {H,V}^2-group exposure.
inline Scalar poisson_log_likelihood(const std::vector<CountRecord>& counts,
                                     const TomographySchedule& schedule, const Mat4c& rho) {
  Scalar exposure = 0.0;
  for (const auto& rec : counts) {
    const auto& [a, b] = schedule.settings[static_cast<std::size_t>(rec.setting_index)];
    const auto in_z = [](PolLabel l) { return l == PolLabel::H || l == PolLabel::V; };
    if (in_z(a) && in_z(b)) exposure += static_cast<Scalar>(rec.coincidences);
  }
  Scalar ll = 0.0;
  for (const auto& rec : counts) {
    const auto& [a, b] = schedule.settings[static_cast<std::size_t>(rec.setting_index)];
    const Vec2c ja = jones_vector(a);
    const Vec2c jb = jones_vector(b);
    const Mat4c proj = kron(ja * ja.adjoint(), jb * jb.adjoint());
    const Scalar p = std::max((rho * proj).trace().real(), 1e-15);
    const Scalar mu = exposure * p;
    const auto n = static_cast<Scalar>(rec.coincidences);
    ll += n > 0 ? n * std::log(mu) - mu : -mu;
  }
  return ll;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sagnacsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace test_util
