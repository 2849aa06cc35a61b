// 100 GHz ITU frequency grid and symmetric DWDM channel-pair planning.

#pragma once

#include <set>
#include <utility>
#include <vector>

#include "sagnac/types.hpp"

namespace sagnac {

// Grid anchor: f(n) = 190.0 + 0.1*n THz. Channel 21 sits at 192.1 THz
// (1560.61 nm); negative n extrapolates the same 100 GHz ladder into the
// L band.
Scalar itu_channel_frequency_thz(int n);
Scalar itu_channel_wavelength_nm(int n);

// Energy-conserving partner of channel n for a degenerate source pumped at
// twice the frequency of `pump`.
int conjugate_channel(int n, int pump);

struct ChannelPlan {
  int pump_channel = 21;
  std::vector<std::pair<int, int>> pairs;  // (signal, idler), signal below pump
  std::set<int> excluded;
  Scalar channel_spacing_ghz = 100.0;

  // Throws std::invalid_argument on any violated invariant: pair symmetry
  // s + i = 2*pump, no pair touching the pump or an excluded channel, pairs
  // sorted by distance from the pump.
  void validate() const;
};

// The n_pairs nearest symmetric pairs around `pump`, skipping pairs that
// touch an excluded channel. Throws if n_pairs < 1 or if the plan would need
// channels with |n| > max_abs_channel.
ChannelPlan build_channel_plan(int pump, int n_pairs, const std::set<int>& excluded,
                               int max_abs_channel = 60);

}  // namespace sagnac
