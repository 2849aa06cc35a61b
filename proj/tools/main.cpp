// sagnacsim: simulator and analysis toolkit for a fiber-based Sagnac
// entangled-pair source feeding a DWDM quantum network.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sagnac/scenario.hpp"
#include "sagnac/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sagnac entangled-pair source simulator"};
  app.set_version_flag("--version", sagnac::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string channels;
  std::uint64_t seed = 0;
  bool seed_set = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON scenario config");
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--channels", channels, "plan override, e.g. 19:23,18:24");
    sub->add_option("--seed", seed, "RNG seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });
  };

  add_common(app.add_subcommand("plan", "export the DWDM channel plan"));
  add_common(app.add_subcommand("tomography", "tomography sweep over the channel plan"));
  add_common(app.add_subcommand("franson", "two-photon fringe scan and visibility fit"));
  add_common(app.add_subcommand("qkd", "long-session QKD simulation"));
  add_common(app.add_subcommand("timetags", "Monte-Carlo time-tag streams and coincidences"));

  CLI11_PARSE(app, argc, argv);

  try {
    sagnac::ScenarioConfig cfg =
        config_path.empty() ? sagnac::default_config() : sagnac::load_config(config_path);
    if (seed_set) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!channels.empty()) sagnac::apply_channel_override(cfg, channels);

    const std::string command = app.get_subcommands().front()->get_name();
    return sagnac::run_scenario(command, cfg, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "[error] " << e.what() << '\n';
    return 1;
  }
}
