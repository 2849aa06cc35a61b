#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "sagnac/scenario.hpp"
#include "test_util.hpp"

using namespace sagnac;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_config(const fs::path& out) {
  ScenarioConfig cfg = default_config();
  cfg.output_dir = out.string();
  cfg.n_pairs = 2;
  cfg.tomo_rate_hz = 1e5;
  cfg.tomo_integration_s = 1.0;
  cfg.tomo_bootstrap_replicas = 5;
  cfg.franson_n_phases = 25;
  cfg.franson_mean_counts = 10000.0;
  cfg.qkd_duration_s = 100.0;
  cfg.qkd_bin_s = 10.0;
  cfg.tt_pair_rate_hz = 1e4;
  cfg.tt_duration_s = 0.2;
  return cfg;
}

std::vector<std::string> run_all(const fs::path& out) {
  const ScenarioConfig cfg = small_config(out);
  std::ostringstream log;
  for (const char* command : {"plan", "tomography", "franson", "qkd", "timetags"}) {
    ScenarioConfig sub = cfg;
    sub.output_dir = (out / command).string();
    REQUIRE(run_scenario(command, sub, log) == 0);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(out))
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), out).string());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("plan command writes the expected first pair") {
    const auto dir = test_util::scratch_dir("scenario_plan");
    ScenarioConfig cfg = default_config();
    cfg.output_dir = dir.string();
    std::ostringstream log;
    REQUIRE(run_scenario("plan", cfg, log) == 0);

    std::ifstream in(dir / "channel_plan.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header.rfind("pair_index,signal_channel,idler_channel", 0) == 0);
    CHECK(first.rfind("0,19,23,", 0) == 0);

    int rows = 1;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 20);
  }

  TEST_CASE("manifest covers every emitted file") {
    const auto dir = test_util::scratch_dir("scenario_manifest");
    ScenarioConfig cfg = small_config(dir);
    std::ostringstream log;
    REQUIRE(run_scenario("tomography", cfg, log) == 0);

    const std::string manifest = test_util::slurp(dir / "manifest.json");
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string rel = fs::relative(entry.path(), dir).generic_string();
      if (rel == "manifest.json") continue;
      CHECK(manifest.find(rel) != std::string::npos);
    }
    CHECK(manifest.find("fnv1a64") != std::string::npos);
    CHECK(manifest.find("\"seed\"") != std::string::npos);
  }

  TEST_CASE("identical config and seed give byte-identical artifacts") {
    const auto dir1 = test_util::scratch_dir("scenario_rerun1");
    const auto dir2 = test_util::scratch_dir("scenario_rerun2");
    const auto files1 = run_all(dir1);
    const auto files2 = run_all(dir2);
    REQUIRE(files1 == files2);
    REQUIRE(!files1.empty());
    for (const auto& rel : files1) CHECK(test_util::slurp(dir1 / rel) == test_util::slurp(dir2 / rel));
  }

  TEST_CASE("tomography artifacts stay in the Werner band") {
    const auto dir = test_util::scratch_dir("scenario_tomo");
    ScenarioConfig cfg = small_config(dir);
    cfg.tomo_rate_hz = 1e6;  // rate * integration = 1e6 per setting
    std::ostringstream log;
    REQUIRE(run_scenario("tomography", cfg, log) == 0);

    std::ifstream in(dir / "fidelity_table.csv");
    std::string line;
    std::getline(in, line);  // header
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++rows;
      std::istringstream ss(line);
      std::string field;
      for (int i = 0; i < 4; ++i) std::getline(ss, field, ',');
      const double fidelity = std::stod(field);
      CHECK(fidelity > 0.955);
      CHECK(fidelity < 0.985);
    }
    CHECK(rows == 2);
    CHECK(fs::exists(dir / "density_matrices.json"));
    CHECK(fs::exists(dir / "counts" / "tomo_counts_19_23.csv"));
  }

  TEST_CASE("default tomography run fills the 20-row fidelity table in band") {
    const auto dir = test_util::scratch_dir("scenario_tomo_full");
    ScenarioConfig cfg = default_config();  // rate 2000 Hz x 500 s = 1e6 per setting
    cfg.output_dir = dir.string();
    cfg.tomo_bootstrap_replicas = 5;
    std::ostringstream log;
    REQUIRE(run_scenario("tomography", cfg, log) == 0);

    std::ifstream in(dir / "fidelity_table.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++rows;
      std::istringstream ss(line);
      std::string field;
      for (int i = 0; i < 4; ++i) std::getline(ss, field, ',');
      const double fidelity = std::stod(field);
      CHECK(fidelity > 0.955);
      CHECK(fidelity < 0.985);
    }
    CHECK(rows == 20);
  }

  TEST_CASE("config parse errors carry a line number") {
    const auto dir = test_util::scratch_dir("scenario_badcfg");
    const auto path = dir / "bad.json";
    {
      std::ofstream out(path);
      out << "{\n  \"seed\": oops\n}\n";
    }
    try {
      load_config(path.string());
      FAIL("expected parse failure");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find(":2") != std::string::npos);
    }
  }

  TEST_CASE("unknown keys are rejected with their path") {
    const auto dir = test_util::scratch_dir("scenario_unknown");
    const auto path = dir / "cfg.json";
    {
      std::ofstream out(path);
      out << R"({"qkd": {"fec": 1.1}})";
    }
    try {
      load_config(path.string());
      FAIL("expected config rejection");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find("qkd") != std::string::npos);
      CHECK(msg.find("fec") != std::string::npos);
    }
  }

  TEST_CASE("config file round trip drives the run") {
    const auto dir = test_util::scratch_dir("scenario_cfgfile");
    const auto path = dir / "cfg.json";
    {
      std::ofstream out(path);
      out << R"({
        "seed": 777,
        "plan": {"n_pairs": 3},
        "qkd": {
          "sifted_rate_hz_override": 5540.0,
          "duration_s": 100.0, "bin_s": 10.0,
          "events": {"outages": [{"t_start_s": 10.0, "duration_s": 20.0}]}
        }
      })";
    }
    ScenarioConfig cfg = load_config(path.string());
    CHECK(cfg.seed == 777);
    CHECK(cfg.n_pairs == 3);
    CHECK(cfg.qkd_sifted_override_hz == doctest::Approx(5540.0));
    REQUIRE(cfg.qkd_events.outages.size() == 1);

    cfg.output_dir = (dir / "out").string();
    std::ostringstream log;
    REQUIRE(run_scenario("qkd", cfg, log) == 0);
    const std::string summary = test_util::slurp(dir / "out" / "qkd_summary.json");
    CHECK(summary.find("mean_skr_bps") != std::string::npos);
  }

  TEST_CASE("channel override replaces the plan") {
    const auto dir = test_util::scratch_dir("scenario_channels");
    ScenarioConfig cfg = default_config();
    cfg.output_dir = dir.string();
    apply_channel_override(cfg, "17:25,19:23");
    std::ostringstream log;
    REQUIRE(run_scenario("plan", cfg, log) == 0);

    std::ifstream in(dir / "channel_plan.csv");
    std::string header, first, second;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, second);
    CHECK(first.rfind("0,19,23,", 0) == 0);  // sorted by distance from the pump
    CHECK(second.rfind("1,17,25,", 0) == 0);

    ScenarioConfig bad = default_config();
    bad.output_dir = dir.string();
    apply_channel_override(bad, "19:24");
    CHECK(run_scenario("plan", bad, log) == 1);  // asymmetric pair
    CHECK_THROWS(apply_channel_override(bad, "1923"));
  }

  TEST_CASE("unknown command fails") {
    std::ostringstream log;
    CHECK(run_scenario("frobnicate", default_config(), log) == 1);
  }
}
