#include "sagnac/source.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sagnac {

void SourceParams::validate() const {
  if (!(pump_wavelength_nm > 0) || !(pump_linewidth_hz > 0) || !(spdc_fwhm_nm > 0) ||
      !(normalized_brightness_pairs_per_s_nm_mw2 > 0) || !(shg_efficiency_per_w > 0) ||
      !(smf_coupling > 0))
    throw std::invalid_argument("SourceParams: all fields must be strictly positive");
  if (smf_coupling > 1.0)
    throw std::invalid_argument("SourceParams: smf_coupling must be <= 1");
  if (pump_linewidth_hz >= 100e9)
    throw std::invalid_argument("SourceParams: pump linewidth must be below the channel bandwidth");
}

Scalar spdc_spectral_density(Scalar wavelength_nm, const SourceParams& params) {
  params.validate();
  const Scalar x = wavelength_nm - params.pump_wavelength_nm;
  const Scalar fwhm = params.spdc_fwhm_nm;
  return std::exp(-4.0 * M_LN2 * x * x / (fwhm * fwhm));
}

Scalar pair_rate(Scalar pump_power_mw, Scalar channel_bandwidth_nm, const SourceParams& params) {
  return pair_rate(pump_power_mw, channel_bandwidth_nm, params, params.pump_wavelength_nm);
}

Scalar pair_rate(Scalar pump_power_mw, Scalar channel_bandwidth_nm, const SourceParams& params,
                 Scalar channel_center_nm) {
  params.validate();
  if (pump_power_mw < 0) throw std::invalid_argument("pair_rate: pump power must be >= 0");
  if (!(channel_bandwidth_nm > 0))
    throw std::invalid_argument("pair_rate: channel bandwidth must be > 0");
  return params.normalized_brightness_pairs_per_s_nm_mw2 * channel_bandwidth_nm *
         pump_power_mw * pump_power_mw * spdc_spectral_density(channel_center_nm, params);
}

NoiseSpectrum NoiseSpectrum::from_table(std::vector<std::pair<Scalar, Scalar>> rows) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i].first > rows[i - 1].first))
      throw std::invalid_argument("NoiseSpectrum: wavelengths must be strictly increasing");
    if (rows[i].second < 0)
      throw std::invalid_argument("NoiseSpectrum: rates must be >= 0");
  }
  NoiseSpectrum spectrum;
  spectrum.samples_ = std::move(rows);
  return spectrum;
}

NoiseSpectrum NoiseSpectrum::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("NoiseSpectrum: cannot open " + path);
  std::vector<std::pair<Scalar, Scalar>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Scalar wl = 0, rate = 0;
    char comma = 0;
    if (!(ss >> wl >> comma >> rate) || comma != ',')
      throw std::runtime_error("NoiseSpectrum: malformed row at " + path + ":" +
                               std::to_string(lineno));
    rows.emplace_back(wl, rate);
  }
  return from_table(std::move(rows));
}

Scalar NoiseSpectrum::rate_at(Scalar wavelength_nm) const {
  if (samples_.empty()) return 0.0;
  if (wavelength_nm < samples_.front().first || wavelength_nm > samples_.back().first) return 0.0;
  if (samples_.size() == 1)
    return wavelength_nm == samples_.front().first ? samples_.front().second : 0.0;
  auto hi = std::lower_bound(samples_.begin(), samples_.end(), wavelength_nm,
                             [](const auto& s, Scalar w) { return s.first < w; });
  if (hi == samples_.begin()) return samples_.front().second;
  const auto lo = hi - 1;
  const Scalar t = (wavelength_nm - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

}  // namespace sagnac
