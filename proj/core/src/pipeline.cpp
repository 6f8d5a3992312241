#include <chrono>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "turbcancel/detail/parallel.hpp"
#include "turbcancel/report.hpp"

namespace turbcancel {

namespace {

constexpr std::uint64_t kStatsStream = 3;

const char* const kCalibrationFile = "calibration.json";
const char* const kCurvesFile = "curves.json";
const char* const kFitsFile = "fits.json";

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Loads earlier-stage records, naming every missing one, and checks they were
// produced by this configuration.
std::vector<ResultRecord> load_inputs(const RunConfig& config, const std::string& hash,
                                      std::initializer_list<const char*> names) {
  std::vector<std::string> missing;
  for (const char* name : names) {
    if (!std::filesystem::exists(config.output_dir / name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw IoError("missing inputs in " + config.output_dir.string() + ": " + list);
  }
  std::vector<ResultRecord> records;
  for (const char* name : names) {
    records.push_back(parse_record_json(read_text(config.output_dir / name)));
    const auto& r = records.back();
    if (r.config_hash != hash) {
      throw ConfigError(std::string(name) + " was produced by config " + r.config_hash +
                        ", current config is " + hash + " (mixed inputs; rerun earlier stages)");
    }
  }
  return records;
}

std::vector<Channel> selected_channels(const RunConfig& config, std::optional<Channel> channel) {
  if (channel) return {*channel};
  return config.channels;
}

std::string report_csv(const ResultRecord& record) {
  std::string s = "# config_hash=" + record.config_hash + " seed=" + std::to_string(record.seed) +
                  "\nsigma_R2";
  for (const auto& c : record.curves) {
    s += std::string(",") + channel_name(c.channel) + "_mean," + channel_name(c.channel) +
         "_stderr";
  }
  s += "\n";
  const std::size_t rows = record.curves.empty() ? 0 : record.curves.front().points.size();
  for (std::size_t i = 0; i < rows; ++i) {
    s += format_number(record.curves.front().points[i].sigma_r2);
    for (const auto& c : record.curves) {
      s += "," + format_number(c.points[i].mean) + "," + format_number(c.points[i].std_error);
    }
    s += "\n";
  }
  return s;
}

std::string model_csv(const ResultRecord& record, const VirtualExperiment& experiment) {
  double top = 0.0;
  for (const auto& c : record.curves) {
    for (const auto& p : c.points) top = std::max(top, p.sigma_r2);
  }
  std::string s = "# config_hash=" + record.config_hash + " seed=" + std::to_string(record.seed) +
                  "\nsigma_R2";
  for (const auto& f : record.fits) s += std::string(",") + channel_name(f.channel) + "_model";
  s += "\n";
  constexpr int kPoints = 101;
  for (int i = 0; i < kPoints; ++i) {
    const double sigma = top * i / (kPoints - 1);
    s += format_number(sigma);
    for (const auto& f : record.fits) {
      s += "," + format_number(
                     erf_transmission_model(sigma, f.fit.alpha, experiment.erf_model(f.channel)));
    }
    s += "\n";
  }
  return s;
}

std::string gnuplot_script(const ResultRecord& record) {
  std::string s =
      "# gnuplot script: normalised slit counts against sigma_R^2\n"
      "set datafile separator ','\n"
      "set xlabel 'sigma_R^2'\n"
      "set ylabel 'normalised counts'\n"
      "set key bottom left\n"
      "plot ";
  std::string sep;
  int column = 2;
  for (const auto& c : record.curves) {
    s += sep + "'report.csv' every ::2 using 1:" + std::to_string(column) + ":" +
         std::to_string(column + 1) + " with yerrorbars title '" + channel_name(c.channel) + "'";
    sep = ", \\\n     ";
    column += 2;
  }
  column = 2;
  for (const auto& f : record.fits) {
    s += sep + "'model_curves.csv' every ::2 using 1:" + std::to_string(column) +
         " with lines title '" + channel_name(f.channel) + " alpha=" + format_number(f.fit.alpha) +
         "'";
    ++column;
  }
  s += "\n";
  return s;
}

ResultRecord stage_calibrate(const RunConfig& config, const std::string& hash) {
  const VirtualExperiment experiment(config.experiment_options());
  ResultRecord r;
  r.config_hash = hash;
  r.seed = config.seed;
  r.calibration = experiment.calibrate(config.strengths, config.calibration_samples, config.seed);
  write_file_atomic(config.output_dir / "calibration.csv", calibration_csv(r));
  emit_json(r, config.output_dir / kCalibrationFile);
  return r;
}

ResultRecord stage_run(const RunConfig& config, const std::string& hash,
                       std::optional<Channel> channel) {
  const auto inputs = load_inputs(config, hash, {kCalibrationFile});
  const VirtualExperiment experiment(config.experiment_options());
  ResultRecord r;
  r.config_hash = hash;
  r.seed = config.seed;
  r.calibration = inputs[0].calibration;
  const auto channels = selected_channels(config, channel);
  r.curves = experiment.run_monte_carlo(channels, config.sigma_r2_targets, r.calibration,
                                        config.n_samples, config.seed);
  for (const auto& curve : r.curves) {
    write_file_atomic(config.output_dir / (std::string("curve_") + channel_name(curve.channel) + ".csv"),
                      curve_csv(r, curve));
    if (!curve.long_term_widths.empty()) {
      std::string s = "# config_hash=" + hash + " seed=" + std::to_string(config.seed) +
                      "\nsigma_R2,w_lt_m\n";
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        s += format_number(curve.points[i].sigma_r2) + "," +
             format_number(curve.long_term_widths[i]) + "\n";
      }
      write_file_atomic(config.output_dir / "long_term_width.csv", s);
    }
  }
  emit_json(r, config.output_dir / kCurvesFile);
  return r;
}

ResultRecord stage_fit(const RunConfig& config, const std::string& hash,
                       std::optional<Channel> channel) {
  const auto inputs = load_inputs(config, hash, {kCurvesFile});
  const VirtualExperiment experiment(config.experiment_options());
  ResultRecord r;
  r.config_hash = hash;
  r.seed = config.seed;
  r.calibration = inputs[0].calibration;
  r.curves = inputs[0].curves;
  bool found = !channel;
  for (const auto& curve : r.curves) {
    if (channel && curve.channel != *channel) continue;
    found = true;
    try {
      r.fits.push_back(ChannelFit{curve.channel,
                                  fit_alpha(curve.points, experiment.erf_model(curve.channel),
                                            10.0 * experiment.alpha_c())});
    } catch (const NumericalGuardError& e) {
      throw NumericalGuardError(std::string(channel_name(curve.channel)) + ": " + e.what());
    }
  }
  if (!found) {
    throw IoError(std::string("no curve for channel ") + channel_name(*channel) + " in " +
                  kCurvesFile);
  }
  write_file_atomic(config.output_dir / "fits.csv", fits_csv(r));
  emit_json(r, config.output_dir / kFitsFile);
  return r;
}

ResultRecord stage_report(const RunConfig& config, const std::string& hash) {
  const auto inputs = load_inputs(config, hash, {kCalibrationFile, kCurvesFile, kFitsFile});
  const VirtualExperiment experiment(config.experiment_options());
  ResultRecord r;
  r.config_hash = hash;
  r.seed = config.seed;
  r.calibration = inputs[0].calibration;
  r.curves = inputs[1].curves;
  r.fits = inputs[2].fits;
  write_file_atomic(config.output_dir / "report.csv", report_csv(r));
  write_file_atomic(config.output_dir / "model_curves.csv", model_csv(r, experiment));
  write_file_atomic(config.output_dir / "plot.gp", gnuplot_script(r));
  emit_json(r, config.output_dir / "report.json");
  return r;
}

ResultRecord stage_screens_stats(const RunConfig& config, const std::string& hash) {
  const Grid2D grid = config.grid();
  const double r0 = config.resolved_stats_r0();
  const double k = config.setup.k_cal();
  const double z = 0.5 * config.setup.distance;
  StructureFunctionAccumulator acc(grid);
  nlohmann::json archive = nlohmann::json::array();

  const std::size_t batch = std::max(1u, config.threads);
  for (std::size_t start = 0; start < config.stats_screens; start += batch) {
    const std::size_t count = std::min(batch, config.stats_screens - start);
    std::vector<std::optional<PhaseScreen>> screens(count);
    detail::parallel_for(count, config.threads, [&](std::size_t j) {
      screens[j] = make_kolmogorov_screen(grid, r0, k,
                                          detail::derive_seed(config.seed, kStatsStream, start + j),
                                          config.subharmonic_levels, z);
    });
    for (std::size_t j = 0; j < count; ++j) {
      const auto& phase = screens[j]->phase;
      archive.push_back(
          {{"index", start + j},
           {"seed", detail::derive_seed(config.seed, kStatsStream, start + j)},
           {"sha1", sha1_hex(std::string_view(reinterpret_cast<const char*>(phase.data()),
                                              phase.size() * sizeof(double)))}});
      acc.add(*screens[j]);
    }
  }
  ResultRecord r;
  r.config_hash = hash;
  r.seed = config.seed;
  r.structure = acc.result();
  write_file_atomic(config.output_dir / "structure_function.csv", structure_csv(r, r0));
  nlohmann::json screens = {{"config_hash", hash},
                            {"seed", config.seed},
                            {"grid_n", grid.n()},
                            {"grid_dx_m", grid.dx()},
                            {"r0_m", r0},
                            {"subharmonic_levels", config.subharmonic_levels},
                            {"screens", archive}};
  write_file_atomic(config.output_dir / "screens.json", screens.dump(2) + "\n");
  emit_json(r, config.output_dir / "structure_function.json");
  return r;
}

}  // namespace

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::calibrate, Stage::run, Stage::fit, Stage::report, Stage::screens_stats}) {
    if (name == stage_name(s)) return s;
  }
  throw ConfigError("unknown subcommand '" + std::string(name) + "'");
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::calibrate:
      return "calibrate";
    case Stage::run:
      return "run";
    case Stage::fit:
      return "fit";
    case Stage::report:
      return "report";
    case Stage::screens_stats:
      return "screens-stats";
  }
  return "unknown";
}

ResultRecord run_pipeline(const RunConfig& config, Stage stage, std::optional<Channel> channel,
                          std::ostream* log) {
  const std::string prefix = std::string(stage_name(stage)) + ": ";
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::string hash = config_hash(config);
    ResultRecord record;
    switch (stage) {
      case Stage::calibrate:
        record = stage_calibrate(config, hash);
        break;
      case Stage::run:
        record = stage_run(config, hash, channel);
        break;
      case Stage::fit:
        record = stage_fit(config, hash, channel);
        break;
      case Stage::report:
        record = stage_report(config, hash);
        break;
      case Stage::screens_stats:
        record = stage_screens_stats(config, hash);
        break;
    }
    if (log) {
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      *log << stage_name(stage) << ": done in " << seconds << " s, outputs in "
           << config.output_dir.string() << "\n";
    }
    return record;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const NumericalGuardError& e) {
    throw NumericalGuardError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(prefix + e.what());
  }
}

}  // namespace turbcancel
