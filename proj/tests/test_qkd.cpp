#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "sagnac/qkd.hpp"
#include "test_util.hpp"

using namespace sagnac;

TEST_SUITE("qkd") {
  TEST_CASE("binary entropy reference values") {
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(std::abs(binary_entropy(0.047) - 0.2736) < 1e-4);
    CHECK_THROWS_AS(binary_entropy(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(binary_entropy(1.1), std::invalid_argument);
  }

  TEST_CASE("binary entropy is concave on a grid") {
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      const double y = 1.0 - x;
      CHECK(binary_entropy(0.5 * (x + y)) >=
            0.5 * (binary_entropy(x) + binary_entropy(y)) - 1e-12);
      if (i < 100) {
        const double x2 = (i + 1) / 100.0;
        CHECK(binary_entropy(0.5 * (x + x2)) >=
              0.5 * (binary_entropy(x) + binary_entropy(x2)) - 1e-12);
      }
    }
  }

  TEST_CASE("secret key rate limits and deployed operating point") {
    CHECK(secret_key_rate(1000.0, 0.0, 0.0, 1.0) == doctest::Approx(1000.0));
    const double fraction = secret_key_rate(1.0, 0.065, 0.047, 1.1);
    CHECK(std::abs(fraction - 0.352) < 0.002);
    CHECK(secret_key_rate(5540.0, 0.065, 0.047, 1.1) == doctest::Approx(1950.0).epsilon(0.02));
    CHECK(secret_key_rate(1000.0, 0.25, 0.25, 1.1) == 0.0);
  }

  TEST_CASE("secret key rate is monotone non-increasing and clamps at q*") {
    double prev = secret_key_rate(1000.0, 0.0, 0.047, 1.1);
    for (int i = 1; i <= 50; ++i) {
      const double q = 0.5 * i / 50.0;
      const double rate = secret_key_rate(1000.0, q, 0.047, 1.1);
      CHECK(rate <= prev + 1e-9);
      prev = rate;
    }
    // bisect the zero crossing of 1 - 1.1 h(0.047) - h(q)
    double lo = 0.0, hi = 0.5;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (1.0 - 1.1 * binary_entropy(0.047) - binary_entropy(mid) > 0.0 ? lo : hi) = mid;
    }
    CHECK(secret_key_rate(1000.0, std::min(0.5, hi + 1e-6), 0.047, 1.1) == 0.0);
    CHECK(secret_key_rate(1000.0, lo - 1e-6, 0.047, 1.1) > 0.0);

    CHECK(secret_key_rate(1000.0, 0.065, 0.1, 1.1) <= secret_key_rate(1000.0, 0.065, 0.047, 1.1));
    CHECK(secret_key_rate(1000.0, 0.065, 0.047, 1.2) <= secret_key_rate(1000.0, 0.065, 0.047, 1.1));
    CHECK_THROWS_AS(secret_key_rate(1000.0, 0.6, 0.0, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(secret_key_rate(1000.0, 0.0, 0.0, 0.9), std::invalid_argument);
  }

  TEST_CASE("link budget: basis matching only") {
    LinkConfig cfg;
    cfg.fiber_length_km = 0.0;
    cfg.insertion_loss_db = 0.0;
    cfg.basis_split = 0.5;
    cfg.x_postselection = 1.0;  // idealized analyzer without the satellite-peak cut
    DetectorModel det;
    det.efficiency = 1.0;
    det.dark_rate_hz = 0.0;
    const LinkBudget budget = link_budget(cfg, 1e6, det);
    CHECK(budget.sifted_rate_hz == doctest::Approx(0.5e6).epsilon(1e-12));
    CHECK(budget.coincidence_rate_hz == doctest::Approx(1e6).epsilon(1e-12));
  }

  TEST_CASE("link budget: fiber loss arithmetic") {
    LinkConfig cfg;
    cfg.fiber_length_km = 50.0;
    cfg.loss_db_per_km = 0.2;
    cfg.insertion_loss_db = 0.0;
    DetectorModel det;
    det.efficiency = 1.0;
    det.dark_rate_hz = 0.0;
    const LinkBudget budget = link_budget(cfg, 1e6, det);
    // 25 km per arm at 0.2 dB/km: transmittance 10^-0.5 per arm
    CHECK(budget.coincidence_rate_hz == doctest::Approx(1e6 * 0.1).epsilon(1e-9));
    const double per_arm = std::sqrt(budget.coincidence_rate_hz / 1e6);
    CHECK(per_arm == doctest::Approx(std::pow(10.0, -0.5)).epsilon(1e-9));
  }

  TEST_CASE("default-parameter budget lands within a factor two of 5.5 kHz") {
    const LinkConfig cfg;  // 50 km, 0.2 dB/km, 3 dB analyzers, 50/50 split, 0.5 post-selection
    const DetectorModel det;  // 80%, 50 Hz
    const LinkBudget budget = link_budget(cfg, 1e6, det);
    CHECK(budget.sifted_rate_hz > 5.5e3 / 2.0);
    CHECK(budget.sifted_rate_hz < 5.5e3 * 2.0);
  }

  TEST_CASE("session reproduces the mean secret key rate") {
    const SessionReport report =
        simulate_session(5540.0, 0.87, 0.047, 1200.0, 10.0, {}, 1.1, 1.0 / 3.0, 109);
    CHECK(report.bins.size() == 120);
    CHECK(std::abs(report.mean_skr_bps - 1950.0) / 1950.0 < 0.05);
    CHECK(std::abs(report.mean_qber_x - 0.065) < 0.005);
    CHECK(std::abs(report.mean_qber_z - 0.047) < 0.005);

    // linearity: mean SKR matches the formula applied to mean inputs
    const double formula = secret_key_rate(report.mean_sifted_hz, report.mean_qber_x,
                                           report.mean_qber_z, 1.1);
    CHECK(std::abs(report.mean_skr_bps - formula) / formula < 0.02);
  }

  TEST_CASE("noiseless session yields skr equal to the sifted rate in every bin") {
    const SessionReport report =
        simulate_session(1000.0, 1.0, 0.0, 100.0, 5.0, {}, 1.1, 0.5, 113);
    for (const auto& bin : report.bins) {
      CHECK(bin.qber_x == 0.0);
      CHECK(bin.qber_z == 0.0);
      CHECK(bin.skr_bps == bin.sifted_rate_hz);
    }
  }

  TEST_CASE("an outage removes its duty-cycle share of the key") {
    SessionEvents events;
    events.outages.push_back({300.0, 60.0});
    const SessionReport with_outage =
        simulate_session(5540.0, 0.87, 0.047, 600.0, 10.0, events, 1.1, 1.0 / 3.0, 127);
    const SessionReport without =
        simulate_session(5540.0, 0.87, 0.047, 600.0, 10.0, {}, 1.1, 1.0 / 3.0, 127);
    const double ratio = with_outage.mean_skr_bps / without.mean_skr_bps;
    CHECK(std::abs(ratio - 0.9) < 0.02);
    int zero_bins = 0;
    for (const auto& bin : with_outage.bins) zero_bins += bin.skr_bps == 0.0;
    CHECK(zero_bins >= 6);
  }

  TEST_CASE("drift events raise qber_x and it recovers") {
    SessionEvents events;
    events.drifts.push_back({200.0, 0.4, 50.0});
    const SessionReport report =
        simulate_session(5540.0, 0.87, 0.047, 600.0, 10.0, events, 1.1, 1.0 / 3.0, 131);
    double before = 0.0, at_peak = 0.0, late = 0.0;
    for (const auto& bin : report.bins) {
      if (bin.t_s < 190.0) before = std::max(before, bin.qber_x);
      if (bin.t_s >= 200.0 && bin.t_s < 220.0) at_peak = std::max(at_peak, bin.qber_x);
      if (bin.t_s >= 500.0) late = std::max(late, bin.qber_x);
    }
    CHECK(before < 0.09);
    CHECK(at_peak > 0.2);
    CHECK(late < 0.09);
  }

  TEST_CASE("sift keeps every coincidence when bases always match") {
    LabeledStream alice{0, {}, 1000000};
    LabeledStream bob{1, {}, 1000000};
    for (int k = 0; k < 100; ++k) {
      const std::int64_t t = 1000 * (k + 1);
      alice.tags.push_back({t, Basis::Z, static_cast<std::uint8_t>(k % 2)});
      bob.tags.push_back({t + 5, Basis::Z, static_cast<std::uint8_t>(k % 2)});
    }
    const SiftResult result = sift(alice, bob, 100);
    CHECK(result.coincidences == 100);
    CHECK(result.n_z == 100);
    CHECK(result.n_x == 0);
    CHECK(result.qber_z == 0.0);
  }

  TEST_CASE("independent uniform bases keep half the coincidences") {
    const auto [alice, bob] =
        simulate_labeled_pair_streams(1e5, 1.0, 0.5, 0.0, 0.0, 0.0, 137);
    const SiftResult result = sift(alice, bob, 100);
    REQUIRE(result.coincidences > 90000);
    const double kept = static_cast<double>(result.n_z + result.n_x);
    const double fraction = kept / static_cast<double>(result.coincidences);
    const double sigma = std::sqrt(0.25 / static_cast<double>(result.coincidences));
    CHECK(std::abs(fraction - 0.5) < 3.0 * sigma);
  }

  TEST_CASE("injected z errors appear as qber_z") {
    const auto [alice, bob] =
        simulate_labeled_pair_streams(1e5, 1.0, 0.5, 0.047, 0.0, 0.0, 139);
    const SiftResult result = sift(alice, bob, 100);
    REQUIRE(result.n_z > 10000);
    const double sigma = std::sqrt(0.047 * 0.953 / static_cast<double>(result.n_z));
    CHECK(std::abs(result.qber_z - 0.047) < 3.0 * sigma);
    CHECK(result.qber_x == 0.0);

    // agreement fraction of the sifted bit strings matches 1 - qber
    std::int64_t agree = 0;
    for (std::size_t i = 0; i < result.bits_a.size(); ++i)
      agree += result.bits_a[i] == result.bits_b[i];
    const double measured =
        static_cast<double>(agree) / static_cast<double>(result.bits_a.size());
    const double expected =
        1.0 - 0.047 * static_cast<double>(result.n_z) /
                  static_cast<double>(result.n_z + result.n_x);
    CHECK(std::abs(measured - expected) < 0.01);
  }

  TEST_CASE("unlabeled tags are rejected") {
    LabeledStream stream{0, {{100, static_cast<Basis>(7), 0}}, 1000};
    LabeledStream ok{1, {{100, Basis::Z, 0}}, 1000};
    CHECK_THROWS_AS(sift(stream, ok, 100), std::invalid_argument);
    LabeledStream badbit{0, {{100, Basis::Z, 2}}, 1000};
    CHECK_THROWS_AS(sift(badbit, ok, 100), std::invalid_argument);
  }

  TEST_CASE("session csv export") {
    const SessionReport report =
        simulate_session(1000.0, 0.9, 0.02, 50.0, 10.0, {}, 1.1, 0.5, 149);
    const auto dir = test_util::scratch_dir("session_csv");
    const auto path = (dir / "session.csv").string();
    write_session_csv(path, report);
    const std::string text = test_util::slurp(path);
    CHECK(text.rfind("t_s,sifted_hz,qber_x,qber_z,skr_bps\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);  // header + 5 bins
  }
}
