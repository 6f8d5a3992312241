#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "turbcancel/report.hpp"

namespace turbcancel {

namespace {

struct Unit {
  std::string_view suffix;
  double scale;
};

constexpr Unit kLengthUnits[] = {{"nm", 1e-9}, {"um", 1e-6}, {"mm", 1e-3}, {"cm", 1e-2}, {"m", 1.0}};
constexpr Unit kAngleUnits[] = {{"nrad", 1e-9}, {"urad", 1e-6}, {"mrad", 1e-3}, {"rad", 1.0}};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class Parser {
 public:
  Parser(std::string origin, std::size_t line, std::string key)
      : origin_(std::move(origin)), line_(line), key_(std::move(key)) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + key_ + ": " + message);
  }

  double number(std::string_view text) const {
    const std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    // Zero needs no unit.
    if (t == "0") return 0.0;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
      fail("expected a number, got '" + t + "'");
    }
    return value;
  }

  template <std::size_t N>
  double quantity(std::string_view text, const Unit (&units)[N], const char* kind) const {
    const std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    // Zero needs no unit.
    if (t == "0") return 0.0;
    for (const Unit& unit : units) {
      if (t.size() > unit.suffix.size() && t.ends_with(unit.suffix)) {
        const std::string head = t.substr(0, t.size() - unit.suffix.size());
        // "5mm" must not match "m" with head "5m".
        if (!head.empty() && (std::isalpha(static_cast<unsigned char>(head.back())) != 0)) continue;
        return number(head) * unit.scale;
      }
    }
    fail(std::string("expected a ") + kind + " with a unit suffix, got '" + t + "'");
  }

  double length(std::string_view text) const { return quantity(text, kLengthUnits, "length"); }
  double angle(std::string_view text) const { return quantity(text, kAngleUnits, "angle"); }

  double positive_length(std::string_view text) const {
    const double v = length(text);
    if (!(v > 0.0) || !std::isfinite(v)) fail("must be a positive finite length, got '" + trim(text) + "'");
    return v;
  }

  std::uint64_t unsigned_integer(std::string_view text) const {
    const std::string t = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
      fail("expected a non-negative integer, got '" + t + "'");
    }
    return value;
  }

 private:
  std::string origin_;
  std::size_t line_;
  std::string key_;
};

const std::map<std::string, std::string, std::less<>>& key_sections() {
  static const std::map<std::string, std::string, std::less<>> keys = {
      {"lambda_pump", "setup"},        {"lambda_down", "setup"},
      {"lambda_cal", "setup"},         {"distance", "setup"},
      {"w0", "setup"},                 {"w_pump", "setup"},
      {"crystal_thickness", "setup"},  {"slit_width", "setup"},
      {"n", "grid"},                   {"extent", "grid"},
      {"model", "turbulence"},         {"r0", "turbulence"},
      {"tilt_sigma", "turbulence"},    {"subharmonic_levels", "turbulence"},
      {"coefficient", "turbulence"},   {"sigma_r2", "turbulence"},
      {"channels", "run"},             {"n_samples", "run"},
      {"calibration_samples", "run"},  {"poisson_mean_count", "run"},
      {"seed", "run"},                 {"output", "run"},
      {"threads", "run"},              {"screens", "stats"},
      {"stats_r0", "stats"}};
  return keys;
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  for (double r0 : {20e-3, 10e-3, 6e-3, 4e-3, 3e-3, 2e-3, 1.5e-3, 1.2e-3}) {
    c.strengths.push_back(1.0 / r0);
  }
  c.strengths.insert(c.strengths.begin(), 0.0);
  c.sigma_r2_targets = {0.0, 5.0e-4, 3.7e-3, 1.7e-2, 4.4e-2, 9.8e-2, 0.17, 0.26};
  c.channels = {Channel::laser_calibration, Channel::coincidence_direct,
                Channel::coincidence_inverted_x};
  return c;
}

Grid2D RunConfig::grid() const {
  if (grid_n == 0 && grid_extent == 0.0) return experiment_grid(setup);
  if (grid_n == 0 || grid_extent == 0.0) {
    throw ConfigError("grid: n and extent must be given together (or both left automatic)");
  }
  return make_grid(grid_n, grid_extent);
}

ExperimentOptions RunConfig::experiment_options() const {
  ExperimentOptions o;
  o.setup = setup;
  o.grid = grid();
  o.model = model;
  o.subharmonic_levels = subharmonic_levels;
  o.width_coefficient = coefficient;
  o.poisson_mean_count = poisson_mean_count;
  o.threads = threads;
  return o;
}

double RunConfig::resolved_stats_r0() const {
  return stats_r0 > 0.0 ? stats_r0 : 20.0 * grid().dx();
}

RunConfig parse_config_text(std::string_view text, std::string_view origin_view) {
  const std::string origin(origin_view);
  RunConfig c = default_config();
  bool r0_given = false;
  bool tilt_given = false;
  std::vector<double> r0_values;
  std::vector<double> tilt_values;
  std::size_t r0_line = 0;
  std::size_t tilt_line = 0;
  std::set<std::string, std::less<>> seen;

  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(raw.substr(0, comment));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "setup" && section != "grid" && section != "turbulence" && section != "run" &&
          section != "stats") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value', got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto known = key_sections().find(key);
    if (known == key_sections().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!section.empty() && known->second != section) {
      throw ConfigError(where + "key '" + key + "' belongs in [" + known->second + "], not [" +
                        section + "]");
    }
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(where + key + ": missing value");
    const Parser p(origin, line_no, key);

    if (key == "lambda_pump") c.setup.lambda_pump = p.positive_length(value);
    else if (key == "lambda_down") c.setup.lambda_down = p.positive_length(value);
    else if (key == "lambda_cal") c.setup.lambda_cal = p.positive_length(value);
    else if (key == "distance") c.setup.distance = p.positive_length(value);
    else if (key == "w0") c.setup.w0 = p.positive_length(value);
    else if (key == "w_pump") c.setup.w_pump = p.positive_length(value);
    else if (key == "crystal_thickness") c.setup.crystal_thickness = p.positive_length(value);
    else if (key == "slit_width") c.setup.slit_width = p.positive_length(value);
    else if (key == "n") {
      if (value != "auto") {
        c.grid_n = p.unsigned_integer(value);
        if (c.grid_n < 32 || (c.grid_n & (c.grid_n - 1)) != 0) p.fail("must be a power of two >= 32");
      }
    } else if (key == "extent") {
      if (value != "auto") c.grid_extent = p.positive_length(value);
    } else if (key == "model") {
      if (value == "kolmogorov") c.model = TurbulenceModel::kolmogorov;
      else if (value == "tilt") c.model = TurbulenceModel::tilt;
      else p.fail("expected kolmogorov or tilt, got '" + value + "'");
    } else if (key == "r0") {
      r0_given = true;
      r0_line = line_no;
      for (const auto& item : split_list(value)) {
        const double r0 = p.length(item);
        if (!(r0 > 0.0)) p.fail("Fried parameters must be positive (inf for no turbulence)");
        r0_values.push_back(r0);
      }
    } else if (key == "tilt_sigma") {
      tilt_given = true;
      tilt_line = line_no;
      for (const auto& item : split_list(value)) {
        const double s = p.angle(item);
        if (!(s >= 0.0) || !std::isfinite(s)) p.fail("tilt deviations must be finite and >= 0");
        tilt_values.push_back(s);
      }
    } else if (key == "subharmonic_levels") {
      const auto levels = p.unsigned_integer(value);
      if (levels > 12) p.fail("must be <= 12");
      c.subharmonic_levels = static_cast<int>(levels);
    } else if (key == "coefficient") {
      if (value == "chamber") c.coefficient = kChamberCoefficient;
      else if (value == "open_atmosphere") c.coefficient = kOpenAtmosphereCoefficient;
      else {
        c.coefficient = p.number(value);
        if (!(c.coefficient > 0.0) || !std::isfinite(c.coefficient)) {
          p.fail("expected chamber, open_atmosphere or a positive number");
        }
      }
    } else if (key == "sigma_r2") {
      c.sigma_r2_targets.clear();
      for (const auto& item : split_list(value)) {
        const double s = p.number(item);
        if (!(s >= 0.0) || !std::isfinite(s)) p.fail("targets must be finite and >= 0");
        c.sigma_r2_targets.push_back(s);
      }
    } else if (key == "channels") {
      c.channels.clear();
      for (const auto& item : split_list(value)) {
        try {
          c.channels.push_back(parse_channel(item));
        } catch (const std::invalid_argument& e) {
          p.fail(e.what());
        }
      }
    } else if (key == "n_samples") {
      c.n_samples = p.unsigned_integer(value);
      if (c.n_samples < 2) p.fail("must be >= 2");
    } else if (key == "calibration_samples") {
      c.calibration_samples = p.unsigned_integer(value);
      if (c.calibration_samples < 50) p.fail("must be >= 50");
    } else if (key == "poisson_mean_count") {
      c.poisson_mean_count = p.number(value);
      if (!(c.poisson_mean_count >= 0.0) || !std::isfinite(c.poisson_mean_count)) {
        p.fail("must be finite and >= 0");
      }
    } else if (key == "seed") {
      c.seed = p.unsigned_integer(value);
    } else if (key == "output") {
      c.output_dir = value;
    } else if (key == "threads") {
      const auto t = p.unsigned_integer(value);
      if (t < 1 || t > 1024) p.fail("must be between 1 and 1024");
      c.threads = static_cast<unsigned>(t);
    } else if (key == "screens") {
      c.stats_screens = p.unsigned_integer(value);
      if (c.stats_screens < 50) p.fail("must be >= 50");
    } else if (key == "stats_r0") {
      c.stats_r0 = p.positive_length(value);
    }
  }

  if (c.model == TurbulenceModel::kolmogorov) {
    if (tilt_given) {
      throw ConfigError(origin + ":" + std::to_string(tilt_line) +
                        ": tilt_sigma: only valid with model = tilt");
    }
    if (r0_given) {
      c.strengths.clear();
      for (double r0 : r0_values) c.strengths.push_back(std::isinf(r0) ? 0.0 : 1.0 / r0);
    }
  } else {
    if (r0_given) {
      throw ConfigError(origin + ":" + std::to_string(r0_line) +
                        ": r0: only valid with model = kolmogorov");
    }
    if (tilt_given) {
      c.strengths = tilt_values;
    } else {
      c.strengths.clear();
      for (double s : {0.0, 10e-6, 20e-6, 40e-6, 60e-6, 80e-6, 100e-6, 130e-6, 160e-6, 200e-6}) {
        c.strengths.push_back(s);
      }
    }
  }
  if (c.channels.empty()) throw ConfigError(origin + ": channels: at least one channel is required");
  try {
    c.setup.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

std::string canonical_config(const RunConfig& c) {
  const Grid2D grid = c.grid();
  std::ostringstream out;
  auto line = [&](const char* key, const std::string& value) { out << key << '=' << value << '\n'; };
  auto list = [](const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_number(values[i]);
    return s;
  };
  line("lambda_pump", format_number(c.setup.lambda_pump));
  line("lambda_down", format_number(c.setup.lambda_down));
  line("lambda_cal", format_number(c.setup.lambda_cal));
  line("distance", format_number(c.setup.distance));
  line("w0", format_number(c.setup.w0));
  line("w_pump", format_number(c.setup.w_pump));
  line("crystal_thickness", format_number(c.setup.crystal_thickness));
  line("slit_width", format_number(c.setup.slit_width));
  line("grid_n", std::to_string(grid.n()));
  line("grid_dx", format_number(grid.dx()));
  line("model", c.model == TurbulenceModel::kolmogorov ? "kolmogorov" : "tilt");
  line("strengths", list(c.strengths));
  line("sigma_r2", list(c.sigma_r2_targets));
  line("subharmonic_levels", std::to_string(c.subharmonic_levels));
  line("coefficient", format_number(c.coefficient));
  line("n_samples", std::to_string(c.n_samples));
  line("calibration_samples", std::to_string(c.calibration_samples));
  line("poisson_mean_count", format_number(c.poisson_mean_count));
  line("seed", std::to_string(c.seed));
  line("stats_screens", std::to_string(c.stats_screens));
  line("stats_r0", format_number(c.resolved_stats_r0()));
  return out.str();
}

std::string config_hash(const RunConfig& config) { return sha1_hex(canonical_config(config)); }

}  // namespace turbcancel
