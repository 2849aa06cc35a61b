#include <cmath>
#include <fstream>

#include <doctest.h>

#include "sagnac/source.hpp"
#include "test_util.hpp"

using namespace sagnac;

namespace {

SourceParams crystal1() {
  SourceParams params;
  params.spdc_fwhm_nm = 91.0;
  params.shg_efficiency_per_w = 0.34;
  params.smf_coupling = 0.655;
  return params;
}

}  // namespace

TEST_SUITE("source") {
  TEST_CASE("spectral density: center, half maximum, symmetry") {
    const SourceParams params = crystal1();
    CHECK(spdc_spectral_density(1560.6, params) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spdc_spectral_density(1560.6 + 45.5, params) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(spdc_spectral_density(1560.6 - 45.5, params) == doctest::Approx(0.5).epsilon(1e-12));
    for (const double x : {10.0, 30.0, 60.0}) {
      CHECK(spdc_spectral_density(1560.6 + x, params) ==
            doctest::Approx(spdc_spectral_density(1560.6 - x, params)).epsilon(1e-12));
    }
  }

  TEST_CASE("density integral over +-3 FWHM is finite and positive") {
    const SourceParams params = crystal1();
    const double a = 1560.6 - 3.0 * 91.0, b = 1560.6 + 3.0 * 91.0;
    const int n = 4000;
    double integral = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x0 = a + (b - a) * i / n;
      const double x1 = a + (b - a) * (i + 1) / n;
      integral += 0.5 * (spdc_spectral_density(x0, params) + spdc_spectral_density(x1, params)) *
                  (x1 - x0);
    }
    CHECK(std::isfinite(integral));
    CHECK(integral > 0.0);
    // Gaussian closed form: FWHM * sqrt(pi / (4 ln 2))
    CHECK(integral == doctest::Approx(91.0 * std::sqrt(M_PI / (4.0 * M_LN2))).epsilon(1e-6));
  }

  TEST_CASE("pair rate arithmetic") {
    const SourceParams params;  // brightness 10.3e3
    CHECK(pair_rate(1.0, 0.8, params) == doctest::Approx(8240.0).epsilon(1e-12));
    CHECK(pair_rate(0.0, 0.8, params) == 0.0);
    for (const double p : {0.5, 1.0, 2.0}) {
      CHECK(pair_rate(2.0 * p, 0.8, params) / pair_rate(p, 0.8, params) ==
            doctest::Approx(4.0).epsilon(1e-12));
    }
  }

  TEST_CASE("pair rate is monotone and additive over bandwidth at fixed center") {
    const SourceParams params;
    CHECK(pair_rate(2.0, 0.8, params) > pair_rate(1.0, 0.8, params));
    CHECK(pair_rate(1.0, 1.6, params) > pair_rate(1.0, 0.8, params));
    const double center = 1580.0;
    CHECK(pair_rate(1.0, 0.5 + 0.3, params, center) ==
          doctest::Approx(pair_rate(1.0, 0.5, params, center) +
                          pair_rate(1.0, 0.3, params, center))
              .epsilon(1e-12));
    CHECK(pair_rate(1.0, 0.8, params, center) < pair_rate(1.0, 0.8, params, 1560.6));
  }

  TEST_CASE("parameter validation") {
    SourceParams params;
    params.smf_coupling = 1.2;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = SourceParams{};
    params.spdc_fwhm_nm = 0.0;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    params = SourceParams{};
    params.pump_linewidth_hz = 2e11;
    CHECK_THROWS_AS(params.validate(), std::invalid_argument);
    CHECK_THROWS_AS(pair_rate(-1.0, 0.8, SourceParams{}), std::invalid_argument);
    CHECK_THROWS_AS(pair_rate(1.0, 0.0, SourceParams{}), std::invalid_argument);
  }

  TEST_CASE("noise spectrum interpolation rules") {
    const NoiseSpectrum empty;
    CHECK(empty.rate_at(1560.0) == 0.0);

    const auto single = NoiseSpectrum::from_table({{1560.0, 100.0}});
    CHECK(single.rate_at(1560.0) == doctest::Approx(100.0));
    CHECK(single.rate_at(1550.0) == 0.0);

    const auto two = NoiseSpectrum::from_table({{1550.0, 0.0}, {1570.0, 200.0}});
    CHECK(two.rate_at(1560.0) == doctest::Approx(100.0));
    CHECK(two.rate_at(1550.0) == doctest::Approx(0.0));
    CHECK(two.rate_at(1570.0) == doctest::Approx(200.0));
    CHECK(two.rate_at(1540.0) == 0.0);
    CHECK(two.rate_at(1580.0) == 0.0);
  }

  TEST_CASE("noise spectrum validation") {
    CHECK_THROWS_AS(NoiseSpectrum::from_table({{1560.0, 1.0}, {1550.0, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(NoiseSpectrum::from_table({{1550.0, 1.0}, {1550.0, 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(NoiseSpectrum::from_table({{1550.0, -1.0}}), std::invalid_argument);
  }

  TEST_CASE("noise spectrum csv ingestion") {
    const auto dir = test_util::scratch_dir("noise_csv");
    const auto path = dir / "raman.csv";
    {
      std::ofstream out(path);
      out << "# wavelength_nm,rate\n1550.0,0.0\n1560.0,50.0\n1570.0,200.0\n";
    }
    const auto spectrum = NoiseSpectrum::load_csv(path.string());
    CHECK(spectrum.samples().size() == 3);
    CHECK(spectrum.rate_at(1555.0) == doctest::Approx(25.0));
    CHECK_THROWS(NoiseSpectrum::load_csv((dir / "missing.csv").string()));
  }
}
