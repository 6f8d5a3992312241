#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "turbcancel/report.hpp"

namespace turbcancel {

namespace {

using nlohmann::json;

std::string header(const ResultRecord& record) {
  return "# config_hash=" + record.config_hash + " seed=" + std::to_string(record.seed) + "\n";
}

json number_json(double v) {
  // JSON has no infinity; keep it as a string.
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double json_number(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw IoError("malformed number '" + s + "' in record");
  }
  return j.get<double>();
}

json record_body(const ResultRecord& r) {
  json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  json cal = json::array();
  for (const auto& row : r.calibration) {
    cal.push_back({{"strength", number_json(row.strength)},
                   {"w_lt_m", number_json(row.w_lt)},
                   {"sigma_R2", number_json(row.sigma_r2)}});
  }
  j["calibration"] = cal;
  json curves = json::array();
  for (const auto& c : r.curves) {
    json points = json::array();
    for (const auto& p : c.points) {
      points.push_back({{"sigma_R2", number_json(p.sigma_r2)},
                        {"mean", number_json(p.mean)},
                        {"stderr", number_json(p.std_error)},
                        {"n", p.n_samples}});
    }
    json widths = json::array();
    for (double w : c.long_term_widths) widths.push_back(number_json(w));
    curves.push_back(
        {{"channel", channel_name(c.channel)}, {"points", points}, {"w_lt_m", widths}});
  }
  j["curves"] = curves;
  json fits = json::array();
  for (const auto& f : r.fits) {
    fits.push_back({{"channel", channel_name(f.channel)},
                    {"alpha", number_json(f.fit.alpha)},
                    {"residual_rms", number_json(f.fit.residual_rms)},
                    {"ci", number_json(f.fit.alpha_ci_halfwidth)},
                    {"weakly_conditioned", f.fit.weakly_conditioned}});
  }
  j["fits"] = fits;
  json structure = json::array();
  for (const auto& b : r.structure) {
    structure.push_back({{"r_m", number_json(b.r)},
                         {"d_rad2", number_json(b.d)},
                         {"stderr", number_json(b.std_error)},
                         {"lag_count", b.lag_count}});
  }
  j["structure_function"] = structure;
  return j;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  std::string s(buffer, end);
  const auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mantissa = s.substr(0, e);
  std::string exponent = s.substr(e + 1);
  bool negative = false;
  if (!exponent.empty() && (exponent[0] == '+' || exponent[0] == '-')) {
    negative = exponent[0] == '-';
    exponent.erase(0, 1);
  }
  exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
  return mantissa + "e" + (negative ? "-" : "") + exponent;
}

std::string sha1_hex(std::string_view content) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-1 computation failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string git_blob_sha1(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  return sha1_hex(blob);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + temp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to " + temp.string() + " failed");
  }
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp);
    throw IoError("cannot rename " + temp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string calibration_csv(const ResultRecord& record) {
  std::string s = header(record) + "strength,w_lt_m,sigma_R2\n";
  for (const auto& row : record.calibration) {
    s += format_number(row.strength) + "," + format_number(row.w_lt) + "," +
         format_number(row.sigma_r2) + "\n";
  }
  return s;
}

std::string curve_csv(const ResultRecord& record, const ChannelCurve& curve) {
  std::string s = header(record) + "sigma_R2,mean,stderr,n\n";
  for (const auto& p : curve.points) {
    s += format_number(p.sigma_r2) + "," + format_number(p.mean) + "," +
         format_number(p.std_error) + "," + std::to_string(p.n_samples) + "\n";
  }
  return s;
}

std::string fits_csv(const ResultRecord& record) {
  std::string s = header(record) + "channel,alpha,residual_rms,ci\n";
  for (const auto& f : record.fits) {
    s += std::string(channel_name(f.channel)) + "," + format_number(f.fit.alpha) + "," +
         format_number(f.fit.residual_rms) + "," + format_number(f.fit.alpha_ci_halfwidth) + "\n";
  }
  return s;
}

std::string structure_csv(const ResultRecord& record, double r0) {
  std::string s = header(record) + "r_m,d_rad2,stderr,kolmogorov_rad2,lag_count\n";
  for (const auto& b : record.structure) {
    s += format_number(b.r) + "," + format_number(b.d) + "," + format_number(b.std_error) + "," +
         format_number(kolmogorov_structure_function(b.r, r0)) + "," +
         std::to_string(b.lag_count) + "\n";
  }
  return s;
}

std::string record_json(const ResultRecord& record) {
  json j = record_body(record);
  j["checksum"] = git_blob_sha1(record_body(record).dump(2));
  return j.dump(2) + "\n";
}

ResultRecord parse_record_json(std::string_view text) {
  ResultRecord r;
  try {
    const json j = json::parse(text);
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& row : j.at("calibration")) {
      r.calibration.push_back(CalibrationRow{json_number(row.at("strength")),
                                             json_number(row.at("w_lt_m")),
                                             json_number(row.at("sigma_R2"))});
    }
    for (const auto& c : j.at("curves")) {
      ChannelCurve curve{parse_channel(c.at("channel").get<std::string>()), {}, {}};
      for (const auto& p : c.at("points")) {
        curve.points.push_back(DataPoint{json_number(p.at("sigma_R2")), json_number(p.at("mean")),
                                         json_number(p.at("stderr")),
                                         p.at("n").get<std::size_t>()});
      }
      for (const auto& w : c.at("w_lt_m")) curve.long_term_widths.push_back(json_number(w));
      r.curves.push_back(std::move(curve));
    }
    for (const auto& f : j.at("fits")) {
      r.fits.push_back(ChannelFit{parse_channel(f.at("channel").get<std::string>()),
                                  FitResult{json_number(f.at("alpha")),
                                            json_number(f.at("residual_rms")),
                                            json_number(f.at("ci")),
                                            f.at("weakly_conditioned").get<bool>()}});
    }
    for (const auto& b : j.at("structure_function")) {
      r.structure.push_back(StructureBin{json_number(b.at("r_m")), json_number(b.at("d_rad2")),
                                         json_number(b.at("stderr")),
                                         b.at("lag_count").get<std::size_t>()});
    }
    r.checksum = j.value("checksum", std::string());
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed result record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("malformed result record: ") + e.what());
  }
  if (!r.checksum.empty()) {
    ResultRecord copy = r;
    copy.checksum.clear();
    if (git_blob_sha1(record_body(copy).dump(2)) != r.checksum) {
      throw IoError("result record checksum mismatch (file edited or truncated?)");
    }
  }
  return r;
}

void emit_csv(const ResultRecord& record, const std::filesystem::path& directory) {
  if (!record.calibration.empty()) {
    write_file_atomic(directory / "calibration.csv", calibration_csv(record));
  }
  for (const auto& curve : record.curves) {
    write_file_atomic(directory / (std::string("curve_") + channel_name(curve.channel) + ".csv"),
                      curve_csv(record, curve));
  }
  if (!record.fits.empty()) write_file_atomic(directory / "fits.csv", fits_csv(record));
}

void emit_json(const ResultRecord& record, const std::filesystem::path& path) {
  write_file_atomic(path, record_json(record));
}

}  // namespace turbcancel
