#include "sagnac/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "sagnac/grid.hpp"
#include "sagnac/io_util.hpp"
#include "sagnac/rng.hpp"
#include "sagnac/state.hpp"
#include "sagnac/tomography.hpp"
#include "sagnac/version.hpp"

namespace sagnac {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int log_level() {
  const char* env = std::getenv("SAGNACSIM_LOG");
  if (env == nullptr) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void info(std::ostream& log, const std::string& msg) {
  if (log_level() >= 1) log << "[info] " << msg << '\n';
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int line_of_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(path + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void parse_source(const json& j, ScenarioConfig& cfg) {
  check_keys(j,
             {"pump_wavelength_nm", "pump_linewidth_hz", "spdc_fwhm_nm",
              "brightness_pairs_per_s_nm_mw2", "shg_efficiency_per_w", "smf_coupling",
              "pump_power_mw", "channel_bandwidth_nm"},
             "source");
  read_field(j, "pump_wavelength_nm", cfg.source.pump_wavelength_nm);
  read_field(j, "pump_linewidth_hz", cfg.source.pump_linewidth_hz);
  read_field(j, "spdc_fwhm_nm", cfg.source.spdc_fwhm_nm);
  read_field(j, "brightness_pairs_per_s_nm_mw2",
             cfg.source.normalized_brightness_pairs_per_s_nm_mw2);
  read_field(j, "shg_efficiency_per_w", cfg.source.shg_efficiency_per_w);
  read_field(j, "smf_coupling", cfg.source.smf_coupling);
  read_field(j, "pump_power_mw", cfg.pump_power_mw);
  read_field(j, "channel_bandwidth_nm", cfg.channel_bandwidth_nm);
}

void parse_plan(const json& j, ScenarioConfig& cfg) {
  check_keys(j, {"pump_channel", "n_pairs", "excluded", "max_abs_channel"}, "plan");
  read_field(j, "pump_channel", cfg.pump_channel);
  read_field(j, "n_pairs", cfg.n_pairs);
  if (j.contains("excluded")) {
    cfg.excluded.clear();
    for (const auto& c : j.at("excluded")) cfg.excluded.insert(c.get<int>());
  }
  read_field(j, "max_abs_channel", cfg.max_abs_channel);
}

void parse_detector(const json& j, DetectorModel& det, const std::string& path) {
  check_keys(j, {"efficiency", "dark_rate_hz", "jitter_sigma_ps", "dead_time_ns"}, path);
  read_field(j, "efficiency", det.efficiency);
  read_field(j, "dark_rate_hz", det.dark_rate_hz);
  read_field(j, "jitter_sigma_ps", det.jitter_sigma_ps);
  read_field(j, "dead_time_ns", det.dead_time_ns);
}

void parse_tomography(const json& j, ScenarioConfig& cfg) {
  check_keys(j,
             {"werner_p", "rate_hz", "integration_s", "bootstrap_replicas",
              "misalignment_rad_per_pair"},
             "tomography");
  read_field(j, "werner_p", cfg.tomo_werner_p);
  read_field(j, "rate_hz", cfg.tomo_rate_hz);
  read_field(j, "integration_s", cfg.tomo_integration_s);
  read_field(j, "bootstrap_replicas", cfg.tomo_bootstrap_replicas);
  read_field(j, "misalignment_rad_per_pair", cfg.tomo_misalignment_rad_per_pair);
}

void parse_franson(const json& j, ScenarioConfig& cfg) {
  check_keys(j,
             {"visibility", "mean_counts", "n_phases", "phase0_rad", "integration_s", "fsr_hz",
              "photon_bandwidth_hz", "detector_jitter_ps"},
             "franson");
  read_field(j, "visibility", cfg.franson_visibility);
  read_field(j, "mean_counts", cfg.franson_mean_counts);
  read_field(j, "n_phases", cfg.franson_n_phases);
  read_field(j, "phase0_rad", cfg.franson_phase0);
  read_field(j, "integration_s", cfg.franson_integration_s);
  read_field(j, "fsr_hz", cfg.franson.fsr_hz);
  read_field(j, "photon_bandwidth_hz", cfg.franson.photon_bandwidth_hz);
  read_field(j, "detector_jitter_ps", cfg.franson.detector_jitter_ps);
}

void parse_qkd(const json& j, ScenarioConfig& cfg) {
  check_keys(j,
             {"fiber_length_km", "loss_db_per_km", "insertion_loss_db", "basis_split",
              "x_postselection", "channel_pair", "visibility_x", "qber_z", "f_ec", "duration_s",
              "bin_s", "sifted_rate_hz_override", "events"},
             "qkd");
  read_field(j, "fiber_length_km", cfg.link.fiber_length_km);
  read_field(j, "loss_db_per_km", cfg.link.loss_db_per_km);
  read_field(j, "insertion_loss_db", cfg.link.insertion_loss_db);
  read_field(j, "basis_split", cfg.link.basis_split);
  read_field(j, "x_postselection", cfg.link.x_postselection);
  if (j.contains("channel_pair")) {
    const auto& pair = j.at("channel_pair");
    if (!pair.is_array() || pair.size() != 2)
      throw ConfigError("qkd.channel_pair: expected [signal, idler]");
    cfg.link.channel_pair = {pair[0].get<int>(), pair[1].get<int>()};
  }
  read_field(j, "visibility_x", cfg.qkd_visibility_x);
  read_field(j, "qber_z", cfg.qkd_qber_z);
  read_field(j, "f_ec", cfg.qkd_f_ec);
  read_field(j, "duration_s", cfg.qkd_duration_s);
  read_field(j, "bin_s", cfg.qkd_bin_s);
  read_field(j, "sifted_rate_hz_override", cfg.qkd_sifted_override_hz);
  if (j.contains("events")) {
    const auto& events = j.at("events");
    check_keys(events, {"drifts", "outages"}, "qkd.events");
    if (events.contains("drifts")) {
      for (const auto& d : events.at("drifts")) {
        check_keys(d, {"t_start_s", "visibility_drop", "recovery_tau_s"}, "qkd.events.drifts[]");
        DriftEvent drift;
        read_field(d, "t_start_s", drift.t_start_s);
        read_field(d, "visibility_drop", drift.visibility_drop);
        read_field(d, "recovery_tau_s", drift.recovery_tau_s);
        cfg.qkd_events.drifts.push_back(drift);
      }
    }
    if (events.contains("outages")) {
      for (const auto& o : events.at("outages")) {
        check_keys(o, {"t_start_s", "duration_s"}, "qkd.events.outages[]");
        OutageEvent outage;
        read_field(o, "t_start_s", outage.t_start_s);
        read_field(o, "duration_s", outage.duration_s);
        cfg.qkd_events.outages.push_back(outage);
      }
    }
  }
}

void parse_timetags(const json& j, ScenarioConfig& cfg) {
  check_keys(j, {"pair_rate_hz", "noise_hz_per_arm", "duration_s", "window_ps", "csv_export"},
             "timetags");
  read_field(j, "pair_rate_hz", cfg.tt_pair_rate_hz);
  read_field(j, "noise_hz_per_arm", cfg.tt_noise_hz_per_arm);
  read_field(j, "duration_s", cfg.tt_duration_s);
  read_field(j, "window_ps", cfg.tt_window_ps);
  read_field(j, "csv_export", cfg.tt_csv_export);
}

json config_to_json(const ScenarioConfig& cfg) {
  // output_dir is deliberately not echoed: artifacts are byte-identical
  // across run locations for a fixed (command, config, seed).
  json j;
  j["seed"] = cfg.seed;
  j["source"] = {{"pump_wavelength_nm", cfg.source.pump_wavelength_nm},
                 {"pump_linewidth_hz", cfg.source.pump_linewidth_hz},
                 {"spdc_fwhm_nm", cfg.source.spdc_fwhm_nm},
                 {"brightness_pairs_per_s_nm_mw2",
                  cfg.source.normalized_brightness_pairs_per_s_nm_mw2},
                 {"shg_efficiency_per_w", cfg.source.shg_efficiency_per_w},
                 {"smf_coupling", cfg.source.smf_coupling},
                 {"pump_power_mw", cfg.pump_power_mw},
                 {"channel_bandwidth_nm", cfg.channel_bandwidth_nm}};
  j["plan"] = {{"pump_channel", cfg.pump_channel},
               {"n_pairs", cfg.n_pairs},
               {"excluded", cfg.excluded},
               {"max_abs_channel", cfg.max_abs_channel}};
  if (!cfg.channel_override.empty()) {
    json pairs = json::array();
    for (const auto& [s, i] : cfg.channel_override) pairs.push_back({s, i});
    j["plan"]["override_pairs"] = pairs;
  }
  j["noise_spectrum_csv"] = cfg.noise_spectrum_csv;
  const auto det_json = [](const DetectorModel& d) {
    return json{{"efficiency", d.efficiency},
                {"dark_rate_hz", d.dark_rate_hz},
                {"jitter_sigma_ps", d.jitter_sigma_ps},
                {"dead_time_ns", d.dead_time_ns}};
  };
  j["detector_a"] = det_json(cfg.detector_a);
  j["detector_b"] = det_json(cfg.detector_b);
  j["tomography"] = {{"werner_p", cfg.tomo_werner_p},
                     {"rate_hz", cfg.tomo_rate_hz},
                     {"integration_s", cfg.tomo_integration_s},
                     {"bootstrap_replicas", cfg.tomo_bootstrap_replicas},
                     {"misalignment_rad_per_pair", cfg.tomo_misalignment_rad_per_pair}};
  j["franson"] = {{"visibility", cfg.franson_visibility},
                  {"mean_counts", cfg.franson_mean_counts},
                  {"n_phases", cfg.franson_n_phases},
                  {"phase0_rad", cfg.franson_phase0},
                  {"integration_s", cfg.franson_integration_s},
                  {"fsr_hz", cfg.franson.fsr_hz},
                  {"photon_bandwidth_hz", cfg.franson.photon_bandwidth_hz},
                  {"detector_jitter_ps", cfg.franson.detector_jitter_ps}};
  json drifts = json::array();
  for (const auto& d : cfg.qkd_events.drifts)
    drifts.push_back({{"t_start_s", d.t_start_s},
                      {"visibility_drop", d.visibility_drop},
                      {"recovery_tau_s", d.recovery_tau_s}});
  json outages = json::array();
  for (const auto& o : cfg.qkd_events.outages)
    outages.push_back({{"t_start_s", o.t_start_s}, {"duration_s", o.duration_s}});
  j["qkd"] = {{"fiber_length_km", cfg.link.fiber_length_km},
              {"loss_db_per_km", cfg.link.loss_db_per_km},
              {"insertion_loss_db", cfg.link.insertion_loss_db},
              {"basis_split", cfg.link.basis_split},
              {"x_postselection", cfg.link.x_postselection},
              {"channel_pair", {cfg.link.channel_pair.first, cfg.link.channel_pair.second}},
              {"visibility_x", cfg.qkd_visibility_x},
              {"qber_z", cfg.qkd_qber_z},
              {"f_ec", cfg.qkd_f_ec},
              {"duration_s", cfg.qkd_duration_s},
              {"bin_s", cfg.qkd_bin_s},
              {"sifted_rate_hz_override", cfg.qkd_sifted_override_hz},
              {"events", {{"drifts", drifts}, {"outages", outages}}}};
  j["timetags"] = {{"pair_rate_hz", cfg.tt_pair_rate_hz},
                   {"noise_hz_per_arm", cfg.tt_noise_hz_per_arm},
                   {"duration_s", cfg.tt_duration_s},
                   {"window_ps", cfg.tt_window_ps},
                   {"csv_export", cfg.tt_csv_export}};
  return j;
}

ChannelPlan build_plan(const ScenarioConfig& cfg) {
  if (!cfg.channel_override.empty()) {
    ChannelPlan plan;
    plan.pump_channel = cfg.pump_channel;
    plan.pairs = cfg.channel_override;
    std::sort(plan.pairs.begin(), plan.pairs.end(),
              [&](const auto& lhs, const auto& rhs) {
                return std::abs(lhs.first - cfg.pump_channel) <
                       std::abs(rhs.first - cfg.pump_channel);
              });
    plan.excluded = cfg.excluded;
    for (const auto& [s, i] : plan.pairs) {
      plan.excluded.erase(s);
      plan.excluded.erase(i);
    }
    plan.validate();
    return plan;
  }
  return build_channel_plan(cfg.pump_channel, cfg.n_pairs, cfg.excluded, cfg.max_abs_channel);
}

std::string format_g(Scalar v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

json rho_to_json(const Mat4c& rho) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back({rho(r, c).real(), rho(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

// Writes text deterministically and registers the file for the manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write_text(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
    names_.push_back(name);
  }

  void register_external(const std::string& name) { names_.push_back(name); }

  // Path for a file written by a module's own writer; parent directories are
  // created here, the caller must register_external() afterwards.
  fs::path prepare(const std::string& name) const {
    const fs::path path = dir_ / name;
    fs::create_directories(path.parent_path());
    return path;
  }

  void write_manifest(const std::string& command, const ScenarioConfig& cfg) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["seed"] = cfg.seed;
    manifest["config"] = config_to_json(cfg);
    json outputs = json::array();
    std::sort(names_.begin(), names_.end());
    for (const auto& name : names_) {
      const fs::path path = dir_ / name;
      outputs.push_back({{"path", name},
                         {"bytes", fs::file_size(path)},
                         {"fnv1a64", to_hex(fnv1a64_file(path.string()))}});
    }
    manifest["outputs"] = outputs;
    const fs::path path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << manifest.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

NoiseSpectrum load_noise(const ScenarioConfig& cfg) {
  if (cfg.noise_spectrum_csv.empty()) return {};
  return NoiseSpectrum::load_csv(cfg.noise_spectrum_csv);
}

Scalar channel_noise_hz(const ScenarioConfig& cfg, const NoiseSpectrum& noise, int channel) {
  return noise.rate_at(itu_channel_wavelength_nm(channel)) * cfg.pump_power_mw *
         cfg.channel_bandwidth_nm;
}

int run_plan(const ScenarioConfig& cfg, ArtifactWriter& writer, std::ostream& log) {
  const ChannelPlan plan = build_plan(cfg);
  const NoiseSpectrum noise = load_noise(cfg);

  std::ostringstream csv;
  csv << "pair_index,signal_channel,idler_channel,signal_thz,idler_thz,signal_nm,idler_nm,"
         "pair_rate_hz,noise_signal_hz,noise_idler_hz\n";
  for (std::size_t k = 0; k < plan.pairs.size(); ++k) {
    const auto [s, i] = plan.pairs[k];
    const Scalar rate = pair_rate(cfg.pump_power_mw, cfg.channel_bandwidth_nm, cfg.source,
                                  itu_channel_wavelength_nm(s));
    csv << k << ',' << s << ',' << i << ',' << format_g(itu_channel_frequency_thz(s)) << ','
        << format_g(itu_channel_frequency_thz(i)) << ',' << format_g(itu_channel_wavelength_nm(s))
        << ',' << format_g(itu_channel_wavelength_nm(i)) << ',' << format_g(rate) << ','
        << format_g(channel_noise_hz(cfg, noise, s)) << ','
        << format_g(channel_noise_hz(cfg, noise, i)) << '\n';
  }
  writer.write_text("channel_plan.csv", csv.str());
  info(log, "plan: " + std::to_string(plan.pairs.size()) + " channel pairs around ITU" +
                std::to_string(plan.pump_channel));
  return 0;
}

int run_tomography(const ScenarioConfig& cfg, ArtifactWriter& writer, std::ostream& log) {
  const ChannelPlan plan = build_plan(cfg);
  const TomographySchedule schedule = TomographySchedule::canonical();

  const DensityMatrix target = sagnac_state(SagnacState(1.0 / std::sqrt(2.0),
                                                        1.0 / std::sqrt(2.0), 0.0));
  std::vector<DensityMatrix> states;
  states.reserve(plan.pairs.size());
  for (std::size_t k = 0; k < plan.pairs.size(); ++k) {
    DensityMatrix state = werner_mix(cfg.tomo_werner_p, target);
    const Scalar theta = cfg.tomo_misalignment_rad_per_pair * static_cast<Scalar>(k);
    if (theta != 0.0) {
      // single-arm rotation: a balanced R(theta) x R(theta) leaves the Bell
      // state invariant and would emulate nothing
      Mat2c rot;
      rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
      const Mat4c u = kron(rot, Mat2c::Identity());
      state = DensityMatrix::from_matrix(u * state.matrix() * u.adjoint());
    }
    states.push_back(state);
  }

  MleOptions options;
  options.bootstrap_replicas = cfg.tomo_bootstrap_replicas;
  const auto sweep = run_channel_sweep(states, plan, schedule, cfg.tomo_rate_hz,
                                       cfg.tomo_integration_s, cfg.seed, options);

  std::ostringstream csv;
  csv << "pair_index,signal_channel,idler_channel,fidelity,fidelity_sigma,purity,purity_sigma,"
         "converged\n";
  json matrices = json::array();
  int failures = 0;
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    const auto& entry = sweep[k];
    const auto [s, i] = entry.channel_pair;
    if (!entry.result) {
      ++failures;
      csv << k << ',' << s << ',' << i << ",,,,,failed\n";
      continue;
    }
    const auto& res = *entry.result;
    if (!entry.ok) ++failures;
    csv << k << ',' << s << ',' << i << ',' << format_g(res.fidelity) << ','
        << format_g(res.fidelity_sigma) << ',' << format_g(res.purity) << ','
        << format_g(res.purity_sigma) << ',' << (res.converged ? "true" : "false") << '\n';
    matrices.push_back({{"signal_channel", s},
                        {"idler_channel", i},
                        {"basis", {"HH", "HV", "VH", "VV"}},
                        {"rho", rho_to_json(res.rho.matrix())},
                        {"fidelity", res.fidelity},
                        {"fidelity_sigma", res.fidelity_sigma},
                        {"purity", res.purity},
                        {"purity_sigma", res.purity_sigma},
                        {"log_likelihood", res.log_likelihood},
                        {"converged", res.converged}});

    const auto counts = simulate_tomography_counts(states[k], schedule, cfg.tomo_rate_hz,
                                                   cfg.tomo_integration_s,
                                                   channel_seed(cfg.seed, k));
    const std::string name =
        "counts/tomo_counts_" + std::to_string(s) + "_" + std::to_string(i) + ".csv";
    write_count_records_csv(writer.prepare(name).string(), schedule, counts);
    writer.register_external(name);
  }
  writer.write_text("fidelity_table.csv", csv.str());
  writer.write_text("density_matrices.json", matrices.dump(2) + "\n");

  const SweepSummary summary = summarize_sweep(sweep);
  json sj = {{"channels", summary.channels},
             {"failures", summary.failures},
             {"min_fidelity", summary.min_fidelity},
             {"mean_fidelity", summary.mean_fidelity},
             {"min_purity", summary.min_purity},
             {"mean_purity", summary.mean_purity}};
  writer.write_text("tomography_summary.json", sj.dump(2) + "\n");

  info(log, "tomography: mean fidelity " + format_g(summary.mean_fidelity) + ", mean purity " +
                format_g(summary.mean_purity));
  if (failures > 0) {
    log << "[warn] tomography: " << failures << " channel(s) failed\n";
    return 2;
  }
  return 0;
}

int run_franson(const ScenarioConfig& cfg, ArtifactWriter& writer, std::ostream& log) {
  FransonConfig franson = cfg.franson;
  franson.pump_linewidth_hz = cfg.source.pump_linewidth_hz;
  const FsrCheck check = validate_fsr(franson);
  info(log, check.diagnostic);

  std::vector<Scalar> phases;
  phases.reserve(static_cast<std::size_t>(cfg.franson_n_phases));
  for (int k = 0; k < cfg.franson_n_phases; ++k)
    phases.push_back(2.0 * M_PI * k / std::max(1, cfg.franson_n_phases - 1));

  const FringeScan scan =
      simulate_fringe_scan(cfg.franson_visibility, cfg.franson_mean_counts, phases, cfg.seed,
                           cfg.franson_phase0, cfg.franson_integration_s);
  write_fringe_csv(writer.prepare("fringe_scan.csv").string(), scan);
  writer.register_external("fringe_scan.csv");

  const VisibilityFit fit = fit_visibility(scan);
  json fj = {{"visibility", fit.visibility},
             {"visibility_sigma", fit.visibility_sigma},
             {"phase0_rad", fit.phase0},
             {"fallback_estimator", fit.fallback},
             {"equivalent_qber_x", visibility_to_qber(std::clamp(fit.visibility, 0.0, 1.0))},
             {"fsr_ok", check.ok},
             {"fsr_jitter_warning", check.jitter_warning},
             {"fsr_diagnostic", check.diagnostic}};
  writer.write_text("franson_fit.json", fj.dump(2) + "\n");

  info(log, "franson: fitted visibility " + format_g(fit.visibility) + " +- " +
                format_g(fit.visibility_sigma));
  return check.ok ? 0 : 2;
}

int run_qkd(const ScenarioConfig& cfg, ArtifactWriter& writer, std::ostream& log) {
  const Scalar source_rate =
      pair_rate(cfg.pump_power_mw, cfg.channel_bandwidth_nm, cfg.source,
                itu_channel_wavelength_nm(cfg.link.channel_pair.first));
  const LinkBudget budget = link_budget(cfg.link, source_rate, cfg.detector_a);
  const Scalar sifted =
      cfg.qkd_sifted_override_hz >= 0.0 ? cfg.qkd_sifted_override_hz : budget.sifted_rate_hz;

  const SessionReport report =
      simulate_session(sifted, cfg.qkd_visibility_x, cfg.qkd_qber_z, cfg.qkd_duration_s,
                       cfg.qkd_bin_s, cfg.qkd_events, cfg.qkd_f_ec, budget.x_fraction, cfg.seed);
  write_session_csv(writer.prepare("qkd_session.csv").string(), report);
  writer.register_external("qkd_session.csv");

  json sj = {{"mean_skr_bps", report.mean_skr_bps},
             {"mean_qber_x", report.mean_qber_x},
             {"mean_qber_z", report.mean_qber_z},
             {"mean_sifted_hz", report.mean_sifted_hz},
             {"bin_s", report.bin_s},
             {"sifted_rate_hz_input", sifted},
             {"f_ec", cfg.qkd_f_ec},
             {"link_budget",
              {{"source_pair_rate_hz", source_rate},
               {"coincidence_rate_hz", budget.coincidence_rate_hz},
               {"sifted_rate_hz", budget.sifted_rate_hz},
               {"x_fraction", budget.x_fraction},
               {"singles_a_hz", budget.singles_a_hz},
               {"singles_b_hz", budget.singles_b_hz}}}};
  writer.write_text("qkd_summary.json", sj.dump(2) + "\n");

  info(log, "qkd: mean SKR " + format_g(report.mean_skr_bps) + " bps over " +
                format_g(cfg.qkd_duration_s) + " s");
  return 0;
}

int run_timetags(const ScenarioConfig& cfg, ArtifactWriter& writer, std::ostream& log) {
  const NoiseSpectrum noise = load_noise(cfg);
  Scalar noise_a = cfg.tt_noise_hz_per_arm;
  Scalar noise_b = cfg.tt_noise_hz_per_arm;
  if (!noise.empty()) {
    const ChannelPlan plan = build_plan(cfg);
    noise_a += channel_noise_hz(cfg, noise, plan.pairs.front().first);
    noise_b += channel_noise_hz(cfg, noise, plan.pairs.front().second);
  }

  const auto [a, b] = simulate_pair_streams(cfg.tt_pair_rate_hz, noise_a, noise_b,
                                            cfg.tt_duration_s, cfg.detector_a, cfg.detector_b,
                                            cfg.seed);
  write_ttag(writer.prepare("timetags.ttag").string(), {a, b});
  writer.register_external("timetags.ttag");
  if (cfg.tt_csv_export) {
    write_ttag_csv(writer.prepare("timetags.csv").string(), {a, b});
    writer.register_external("timetags.csv");
  }

  const CoincidenceResult coinc = count_coincidences(a, b, cfg.tt_window_ps, 0);
  const Scalar car = coinc.accidental_estimate > 0
                         ? coinc.true_window_counts / coinc.accidental_estimate
                         : 0.0;
  json cj = {{"tags_a", a.tags_ps.size()},
             {"tags_b", b.tags_ps.size()},
             {"window_ps", coinc.window_ps},
             {"true_window_counts", coinc.true_window_counts},
             {"accidental_estimate", coinc.accidental_estimate},
             {"coincidence_to_accidental_ratio", car}};
  writer.write_text("coincidences.json", cj.dump(2) + "\n");

  info(log, "timetags: " + std::to_string(coinc.true_window_counts) + " coincidences in " +
                format_g(cfg.tt_duration_s) + " s");
  return 0;
}

}  // namespace

ScenarioConfig default_config() { return {}; }

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open config file");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ":" + std::to_string(line_of_offset(text, e.byte)) + ": " +
                             e.what());
  }

  ScenarioConfig cfg;
  try {
    check_keys(j,
               {"seed", "output_dir", "source", "plan", "noise_spectrum_csv", "detector_a",
                "detector_b", "detectors", "tomography", "franson", "qkd", "timetags"},
               "config");
    read_field(j, "seed", cfg.seed);
    read_field(j, "output_dir", cfg.output_dir);
    if (j.contains("source")) parse_source(j.at("source"), cfg);
    if (j.contains("plan")) parse_plan(j.at("plan"), cfg);
    read_field(j, "noise_spectrum_csv", cfg.noise_spectrum_csv);
    if (j.contains("detectors")) {
      parse_detector(j.at("detectors"), cfg.detector_a, "detectors");
      cfg.detector_b = cfg.detector_a;
    }
    if (j.contains("detector_a")) parse_detector(j.at("detector_a"), cfg.detector_a, "detector_a");
    if (j.contains("detector_b")) parse_detector(j.at("detector_b"), cfg.detector_b, "detector_b");
    if (j.contains("tomography")) parse_tomography(j.at("tomography"), cfg);
    if (j.contains("franson")) parse_franson(j.at("franson"), cfg);
    if (j.contains("qkd")) parse_qkd(j.at("qkd"), cfg);
    if (j.contains("timetags")) parse_timetags(j.at("timetags"), cfg);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return cfg;
}

void apply_channel_override(ScenarioConfig& cfg, const std::string& spec) {
  std::vector<std::pair<int, int>> pairs;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("--channels: expected 'signal:idler' in '" + item + "'");
    pairs.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
  }
  if (pairs.empty()) throw std::runtime_error("--channels: empty channel list");
  cfg.channel_override = std::move(pairs);
  cfg.n_pairs = static_cast<int>(cfg.channel_override.size());
}

int run_scenario(const std::string& command, const ScenarioConfig& cfg, std::ostream& log) {
  try {
    cfg.source.validate();
    cfg.detector_a.validate();
    cfg.detector_b.validate();
    if (log_level() >= 2)
      log << "[debug] effective config: " << config_to_json(cfg).dump() << '\n';
    ArtifactWriter writer{fs::path(cfg.output_dir)};

    int status = 0;
    if (command == "plan") {
      status = run_plan(cfg, writer, log);
    } else if (command == "tomography") {
      status = run_tomography(cfg, writer, log);
    } else if (command == "franson") {
      status = run_franson(cfg, writer, log);
    } else if (command == "qkd") {
      status = run_qkd(cfg, writer, log);
    } else if (command == "timetags") {
      status = run_timetags(cfg, writer, log);
    } else {
      log << "[error] unknown command '" << command << "'\n";
      return 1;
    }
    writer.write_manifest(command, cfg);
    return status;
  } catch (const std::exception& e) {
    log << "[error] " << e.what() << '\n';
    return 1;
  }
}

}  // namespace sagnac
