// turbcancel: command-line driver for the virtual slit experiment.
//
//   turbcancel calibrate|run|fit|report|screens-stats [options]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical guard, 4 I/O.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "turbcancel/report.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turbulence-cancellation virtual experiment"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> channel;
  std::optional<std::size_t> samples;
  std::optional<unsigned> threads;

  app.add_option("command", command, "calibrate | run | fit | report | screens-stats")
      ->required()
      ->check(CLI::IsMember({"calibrate", "run", "fit", "report", "screens-stats"}));
  app.add_option("--config", config_path, "configuration file (defaults if omitted)");
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--channel", channel,
                 "restrict run/fit to laser_calibration, coincidence_direct or "
                 "coincidence_inverted_x");
  app.add_option("--samples", samples, "realizations per data point (overrides the config)")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    turbcancel::RunConfig config =
        config_path.empty() ? turbcancel::default_config() : turbcancel::parse_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir) config.output_dir = *out_dir;
    if (samples) config.n_samples = *samples;
    if (threads) config.threads = *threads;
    std::optional<turbcancel::Channel> selected;
    if (channel) selected = turbcancel::parse_channel(*channel);

    turbcancel::run_pipeline(config, turbcancel::parse_stage(command), selected, &std::cerr);
    return 0;
  } catch (const turbcancel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const turbcancel::NumericalGuardError& e) {
    std::cerr << "numerical guard: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const turbcancel::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
