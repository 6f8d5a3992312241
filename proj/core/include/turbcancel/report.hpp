#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "turbcancel/experiment.hpp"
#include "turbcancel/turbulence.hpp"

namespace turbcancel {

struct RunConfig {
  PhysicalSetup setup;
  /// 0 selects the grid automatically (experiment_grid).
  std::size_t grid_n = 0;
  double grid_extent = 0.0;
  TurbulenceModel model = TurbulenceModel::kolmogorov;
  /// Calibration strengths, see CalibrationRow::strength.
  std::vector<double> strengths;
  std::vector<double> sigma_r2_targets;
  int subharmonic_levels = 3;
  double coefficient = kChamberCoefficient;
  std::vector<Channel> channels;
  std::size_t n_samples = 100;
  std::size_t calibration_samples = 100;
  double poisson_mean_count = 0.0;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  /// screens-stats ensemble; r0 = 0 means 20 dx.
  std::size_t stats_screens = 200;
  double stats_r0 = 0.0;

  Grid2D grid() const;
  ExperimentOptions experiment_options() const;
  double resolved_stats_r0() const;
};

/// Default configuration: the chamber experiment with Kolmogorov screens.
RunConfig default_config();

/// INI-style text: optional [setup] [grid] [turbulence] [run] [stats]
/// sections, `key = value` lines, `#` or `;` comments. Lengths take a unit
/// suffix (nm, um, mm, cm, m), angles (nrad, urad, mrad, rad). Unknown keys,
/// bad units and violated constraints are ConfigError with the line number.
RunConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Canonical text of everything that affects results (not threads, output
/// directory or channel selection) and its SHA-1.
std::string canonical_config(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// --- records -------------------------------------------------------------------

struct ChannelFit {
  Channel channel;
  FitResult fit;
};

struct ResultRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<CalibrationRow> calibration;
  std::vector<ChannelCurve> curves;
  std::vector<ChannelFit> fits;
  std::vector<StructureBin> structure;
  /// Set on emit: git blob SHA-1 of the JSON content without this field.
  std::string checksum;
};

/// Shortest decimal that round-trips, exponent without padding ("5.9e-5").
std::string format_number(double value);

/// SHA-1 of "blob <size>\0<content>", hex.
std::string git_blob_sha1(std::string_view content);
std::string sha1_hex(std::string_view content);

/// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string calibration_csv(const ResultRecord& record);
std::string curve_csv(const ResultRecord& record, const ChannelCurve& curve);
std::string fits_csv(const ResultRecord& record);
std::string structure_csv(const ResultRecord& record, double r0);

std::string record_json(const ResultRecord& record);
ResultRecord parse_record_json(std::string_view text);

void emit_csv(const ResultRecord& record, const std::filesystem::path& directory);
void emit_json(const ResultRecord& record, const std::filesystem::path& path);

// --- pipeline ------------------------------------------------------------------

enum class Stage { calibrate, run, fit, report, screens_stats };

Stage parse_stage(std::string_view name);
const char* stage_name(Stage stage);

/// Runs one stage, reading earlier stages' JSON from config.output_dir and
/// writing this stage's files there. `channel` restricts run and fit.
/// Errors keep their type and gain the failing stage as a prefix.
ResultRecord run_pipeline(const RunConfig& config, Stage stage,
                          std::optional<Channel> channel = std::nullopt,
                          std::ostream* log = nullptr);

}  // namespace turbcancel
