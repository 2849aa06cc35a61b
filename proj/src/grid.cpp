#include "sagnac/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace sagnac {

Scalar itu_channel_frequency_thz(int n) { return 190.0 + 0.1 * n; }

Scalar itu_channel_wavelength_nm(int n) {
  const Scalar f_hz = itu_channel_frequency_thz(n) * 1e12;
  return kSpeedOfLightMps / f_hz * 1e9;
}

int conjugate_channel(int n, int pump) { return 2 * pump - n; }

void ChannelPlan::validate() const {
  if (pairs.empty()) throw std::invalid_argument("ChannelPlan: empty plan");
  int prev_dist = 0;
  for (const auto& [s, i] : pairs) {
    if (s + i != 2 * pump_channel)
      throw std::invalid_argument("ChannelPlan: pair (" + std::to_string(s) + "," +
                                  std::to_string(i) + ") is not symmetric about the pump");
    if (s == pump_channel || i == pump_channel || excluded.count(s) || excluded.count(i))
      throw std::invalid_argument("ChannelPlan: pair touches the pump or an excluded channel");
    const int dist = std::abs(s - pump_channel);
    if (dist <= prev_dist)
      throw std::invalid_argument("ChannelPlan: pairs not sorted by distance from the pump");
    prev_dist = dist;
  }
}

ChannelPlan build_channel_plan(int pump, int n_pairs, const std::set<int>& excluded,
                               int max_abs_channel) {
  if (n_pairs < 1) throw std::invalid_argument("build_channel_plan: n_pairs must be >= 1");

  ChannelPlan plan;
  plan.pump_channel = pump;
  plan.excluded = excluded;

  for (int d = 1; static_cast<int>(plan.pairs.size()) < n_pairs; ++d) {
    const int s = pump - d;
    const int i = pump + d;
    if (std::abs(s) > max_abs_channel || std::abs(i) > max_abs_channel)
      throw std::runtime_error("build_channel_plan: plan exceeds grid bound |n| <= " +
                               std::to_string(max_abs_channel));
    if (excluded.count(s) || excluded.count(i)) continue;
    plan.pairs.emplace_back(s, i);
  }

  plan.validate();
  return plan;
}

}  // namespace sagnac
