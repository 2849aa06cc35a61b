// Emission spectrum and pair-rate model of the bidirectionally pumped SPDC
// source, plus ingestion of a measured Raman noise spectrum.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sagnac/types.hpp"

namespace sagnac {

// 100 GHz channel width at 1560 nm, as a wavelength interval.
inline constexpr Scalar kDefaultChannelBandwidthNm = 0.8;

struct SourceParams {
  Scalar pump_wavelength_nm = 1560.6;
  Scalar pump_linewidth_hz = 1e3;
  Scalar spdc_fwhm_nm = 92.0;
  Scalar normalized_brightness_pairs_per_s_nm_mw2 = 10.3e3;
  Scalar shg_efficiency_per_w = 0.392;
  Scalar smf_coupling = 0.62;

  void validate() const;  // throws std::invalid_argument
};

// Relative SPDC spectral density, Gaussian in wavelength: 1 at the pump
// wavelength, 0.5 at +- FWHM/2.
Scalar spdc_spectral_density(Scalar wavelength_nm, const SourceParams& params);

// Pair generation rate into one channel: brightness * bandwidth * power^2,
// at the spectrum center.
Scalar pair_rate(Scalar pump_power_mw, Scalar channel_bandwidth_nm, const SourceParams& params);
// Same, scaled by the spectral density at the channel center.
Scalar pair_rate(Scalar pump_power_mw, Scalar channel_bandwidth_nm, const SourceParams& params,
                 Scalar channel_center_nm);

// Measured noise spectrum, counts/s/nm/mW vs wavelength. Linear interpolation
// between samples, zero outside the sampled range.
class NoiseSpectrum {
 public:
  NoiseSpectrum() = default;

  // Rows are (wavelength_nm, rate); wavelengths must be strictly increasing
  // and rates nonnegative, else std::invalid_argument.
  static NoiseSpectrum from_table(std::vector<std::pair<Scalar, Scalar>> rows);
  // Two-column CSV, comment lines starting with '#' skipped.
  static NoiseSpectrum load_csv(const std::string& path);

  Scalar rate_at(Scalar wavelength_nm) const;
  bool empty() const { return samples_.empty(); }
  const std::vector<std::pair<Scalar, Scalar>>& samples() const { return samples_; }

 private:
  std::vector<std::pair<Scalar, Scalar>> samples_;
};

}  // namespace sagnac
