#include "eraser/experiment.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace eraser {

namespace {

constexpr double kDegToRad = kPi / 180.0;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value, int line, const std::string& key) {
  double out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || !std::isfinite(out))
    throw ParseError(line, key + " expects a finite number (got '" + value + "')");
  return out;
}

long long parse_int(const std::string& value, int line, const std::string& key) {
  long long out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last)
    throw ParseError(line, key + " expects an integer (got '" + value + "')");
  return out;
}

std::uint64_t parse_u64(const std::string& value, int line, const std::string& key) {
  std::uint64_t out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last)
    throw ParseError(line, key + " expects an unsigned integer (got '" + value + "')");
  return out;
}

bool parse_bool(const std::string& value, int line, const std::string& key) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ParseError(line, key + " expects true or false (got '" + value + "')");
}

int branch_index(const std::string& key, int line) {
  const auto dot = key.find('.');
  const std::string suffix = key.substr(dot + 1);
  if (suffix.size() == 1 && suffix[0] >= '1' && suffix[0] <= '4') return suffix[0] - '1';
  throw ParseError(line, "unknown detector in key '" + key + "' (detectors are 1..4)");
}

DetectorMask parse_output_token(const std::string& token, int line) {
  if (token.empty()) throw ParseError(line, "empty curve token in outputs");
  DetectorMask mask = 0;
  for (char c : token) {
    if (c < '1' || c > '4')
      throw ParseError(line, "unknown detector '" + std::string(1, c) + "' in outputs");
    const DetectorMask bit = detector_bit(c - '0');
    if (mask & bit) throw ParseError(line, "repeated detector in curve token '" + token + "'");
    mask |= bit;
  }
  const int order = subset_order(mask);
  if (order != 1 && order != 2 && order != 4)
    throw ParseError(line, "curve token '" + token + "' must name 1, 2 or 4 detectors");
  return mask;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string output_token(DetectorMask mask) {
  std::string token;
  for (int d = 1; d <= 4; ++d)
    if (mask & detector_bit(d)) token += static_cast<char>('0' + d);
  return token;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::analytic: return "analytic";
    case RunMode::montecarlo: return "montecarlo";
    case RunMode::cw: return "cw";
  }
  return "unknown";
}

std::vector<DetectorMask> all_curve_masks() {
  return {detector_bit(1), detector_bit(2), detector_bit(3), detector_bit(4),
          subset_mask({1, 2}), subset_mask({3, 4}), subset_mask({1, 3}),
          subset_mask({2, 4}), subset_mask({2, 3}), subset_mask({1, 4}),
          subset_mask({1, 2, 3, 4})};
}

ExperimentFile parse_experiment(const std::string& text) {
  ExperimentFile file;
  std::set<std::string> seen;
  bool have_mode = false;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string stripped = trim(raw);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ParseError(line, "missing key before '='");
    if (!seen.insert(key).second) throw ParseError(line, "duplicate key '" + key + "'");

    if (key == "mode") {
      if (value == "analytic")
        file.mode = RunMode::analytic;
      else if (value == "montecarlo")
        file.mode = RunMode::montecarlo;
      else if (value == "cw")
        file.mode = RunMode::cw;
      else
        throw ParseError(line, "mode must be analytic, montecarlo or cw (got '" + value + "')");
      have_mode = true;
    } else if (key == "grid.points") {
      const long long v = parse_int(value, line, key);
      if (v < 2 || v > 2'000'000)
        throw ParseError(line, "grid.points must be between 2 and 2000000 (got " + value + ")");
      file.grid_points = static_cast<int>(v);
    } else if (key == "grid.min_deg") {
      file.grid_min_deg = parse_double(value, line, key);
    } else if (key == "grid.max_deg") {
      file.grid_max_deg = parse_double(value, line, key);
    } else if (key == "i0") {
      file.i0 = parse_double(value, line, key);
      if (!(file.i0 > 0.0)) throw ParseError(line, "i0 must be positive");
    } else if (key.rfind("polarizer.", 0) == 0) {
      file.polarizer_deg[static_cast<std::size_t>(branch_index(key, line))] =
          parse_double(value, line, key);
    } else if (key.rfind("qwp.", 0) == 0) {
      const int idx = branch_index(key, line);
      if (value == "none")
        file.qwp_deg[static_cast<std::size_t>(idx)] = std::nullopt;
      else
        file.qwp_deg[static_cast<std::size_t>(idx)] = parse_double(value, line, key);
    } else if (key == "source.mean_photons") {
      file.mean_photons = parse_double(value, line, key);
      if (!(file.mean_photons > 0.0)) throw ParseError(line, "source.mean_photons must be positive");
    } else if (key == "source.window_s") {
      file.window_s = parse_double(value, line, key);
      if (!(file.window_s > 0.0)) throw ParseError(line, "source.window_s must be positive");
    } else if (key == "source.integration_s") {
      file.integration_s = parse_double(value, line, key);
      if (!(file.integration_s > 0.0))
        throw ParseError(line, "source.integration_s must be positive");
    } else if (key == "source.dark_rate_hz") {
      file.dark_rate_hz = parse_double(value, line, key);
      if (file.dark_rate_hz != 0.0)
        throw ParseError(line, "source.dark_rate_hz is not modeled and must be 0");
    } else if (key == "source.dead_time_s") {
      file.dead_time_s = parse_double(value, line, key);
      if (file.dead_time_s != 0.0)
        throw ParseError(line, "source.dead_time_s is not modeled and must be 0");
    } else if (key == "noise.enabled") {
      file.noise_enabled = parse_bool(value, line, key);
    } else if (key == "noise.sigma") {
      file.noise_sigma = parse_double(value, line, key);
      if (file.noise_sigma < 0.0) throw ParseError(line, "noise.sigma must be nonnegative");
    } else if (key == "cw.samples") {
      const long long v = parse_int(value, line, key);
      if (v < 1 || v > 1'000'000) throw ParseError(line, "cw.samples must be at least 1");
      file.cw_samples = static_cast<int>(v);
    } else if (key == "cw.power") {
      file.cw_power = parse_double(value, line, key);
      if (!(file.cw_power > 0.0)) throw ParseError(line, "cw.power must be positive");
    } else if (key == "seed") {
      file.seed = parse_u64(value, line, key);
    } else if (key == "outputs") {
      file.outputs.clear();
      if (value == "all") {
        file.outputs = all_curve_masks();
      } else {
        std::stringstream tokens(value);
        std::string token;
        std::set<DetectorMask> unique;
        while (std::getline(tokens, token, ',')) {
          const DetectorMask mask = parse_output_token(trim(token), line);
          if (!unique.insert(mask).second)
            throw ParseError(line, "curve '" + trim(token) + "' requested twice");
          file.outputs.push_back(mask);
        }
        if (file.outputs.empty()) throw ParseError(line, "outputs must name at least one curve");
      }
    } else if (key == "output.dir") {
      if (value.empty()) throw ParseError(line, "output.dir must not be empty");
      file.output_dir = value;
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }

  if (!have_mode) throw ParseError(line + 1, "missing required key 'mode'");
  if (!(file.grid_max_deg > file.grid_min_deg))
    throw ParseError(line + 1, "grid.max_deg must exceed grid.min_deg");
  if (file.outputs.empty()) file.outputs = all_curve_masks();

  // cross-check the derived configs so every invalid file is rejected here
  try {
    build_eraser_config(file);
    if (file.mode == RunMode::montecarlo) build_source_config(file).validate();
    build_noise_config(file).validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(line + 1, e.what());
  }
  return file;
}

std::string serialize_experiment(const ExperimentFile& file) {
  std::ostringstream out;
  out << "mode = " << to_string(file.mode) << "\n";
  out << "grid.points = " << file.grid_points << "\n";
  out << "grid.min_deg = " << format_double(file.grid_min_deg) << "\n";
  out << "grid.max_deg = " << format_double(file.grid_max_deg) << "\n";
  out << "i0 = " << format_double(file.i0) << "\n";
  for (int d = 1; d <= 4; ++d)
    out << "polarizer." << d << " = " << format_double(file.polarizer_deg[static_cast<std::size_t>(d - 1)]) << "\n";
  for (int d = 1; d <= 4; ++d) {
    const auto& q = file.qwp_deg[static_cast<std::size_t>(d - 1)];
    out << "qwp." << d << " = " << (q ? format_double(*q) : std::string("none")) << "\n";
  }
  out << "source.mean_photons = " << format_double(file.mean_photons) << "\n";
  out << "source.window_s = " << format_double(file.window_s) << "\n";
  out << "source.integration_s = " << format_double(file.integration_s) << "\n";
  out << "source.dark_rate_hz = " << format_double(file.dark_rate_hz) << "\n";
  out << "source.dead_time_s = " << format_double(file.dead_time_s) << "\n";
  out << "noise.enabled = " << (file.noise_enabled ? "true" : "false") << "\n";
  out << "noise.sigma = " << format_double(file.noise_sigma) << "\n";
  out << "cw.samples = " << file.cw_samples << "\n";
  out << "cw.power = " << format_double(file.cw_power) << "\n";
  out << "seed = " << file.seed << "\n";
  out << "outputs = ";
  const auto& masks = file.outputs.empty() ? all_curve_masks() : file.outputs;
  for (std::size_t i = 0; i < masks.size(); ++i)
    out << (i ? "," : "") << output_token(masks[i]);
  out << "\n";
  out << "output.dir = " << file.output_dir << "\n";
  return out.str();
}

EraserConfig build_eraser_config(const ExperimentFile& file) {
  EraserConfig cfg;
  for (int d = 1; d <= 4; ++d) {
    BranchConfig branch;
    branch.detector_id = d;
    branch.polarizer_theta = file.polarizer_deg[static_cast<std::size_t>(d - 1)] * kDegToRad;
    const auto& q = file.qwp_deg[static_cast<std::size_t>(d - 1)];
    branch.qwp_xi = q ? std::optional<double>(*q * kDegToRad) : std::nullopt;
    cfg.branches[static_cast<std::size_t>(d - 1)] = branch;
  }
  cfg.phase_grid = default_phase_grid(file.grid_points, file.grid_min_deg * kDegToRad,
                                      file.grid_max_deg * kDegToRad);
  cfg.i0 = file.mode == RunMode::cw ? file.cw_power : file.i0;
  cfg.validate();
  return cfg;
}

SourceConfig build_source_config(const ExperimentFile& file) {
  SourceConfig src;
  src.mean_photons = file.mean_photons;
  src.window_s = file.window_s;
  src.integration_s = file.integration_s;
  src.dark_rate_hz = file.dark_rate_hz;
  src.dead_time_s = file.dead_time_s;
  return src;
}

NoiseConfig build_noise_config(const ExperimentFile& file) {
  return NoiseConfig{file.noise_enabled, file.noise_sigma};
}

namespace {

FitRecord analyze_curve(const FringeCurve& curve, int order) {
  FitRecord record;
  record.label = curve.label;
  record.order = order;
  try {
    record.fit = fit_sinusoid(curve);
    record.fitted = true;
  } catch (const std::exception& e) {
    record.message = e.what();
    return record;
  }
  try {
    record.fwhm_rad = fwhm(curve);
    record.report = classify_resolution(record.fit, record.fwhm_rad, kPi, order);
    record.classified = true;
  } catch (const std::exception& e) {
    record.message = e.what();
  }
  return record;
}

}  // namespace

ResultBundle run(const ExperimentFile& file) {
  const EraserConfig eraser = build_eraser_config(file);
  const auto& masks = file.outputs.empty() ? all_curve_masks() : file.outputs;

  ResultBundle bundle;
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(serialize_experiment(file))));
  bundle.config_hash = hash_buf;
  bundle.seed = file.seed;
  bundle.timestamp = utc_timestamp();

  switch (file.mode) {
    case RunMode::analytic: {
      for (DetectorMask mask : masks) {
        CorrelationSpec spec;
        for (int d = 1; d <= 4; ++d)
          if (mask & detector_bit(d)) spec.detectors.push_back(d);
        bundle.curves.push_back(correlate(eraser, spec));
      }
      break;
    }
    case RunMode::montecarlo: {
      const SourceConfig source = build_source_config(file);
      const NoiseConfig noise = build_noise_config(file);
      const CountsTable table = run_scan(eraser, source, noise, file.seed);
      for (DetectorMask mask : masks) bundle.curves.push_back(coincidence_curve(table, mask));
      break;
    }
    case RunMode::cw: {
      const NoiseConfig noise = build_noise_config(file);
      auto curves = cw_scan(eraser, noise, file.cw_samples, file.seed);
      for (DetectorMask mask : masks) {
        const std::string label = subset_label(mask, subset_order(mask) == 1 ? 'I' : 'C');
        bundle.curves.push_back(curves.at(label));
      }
      break;
    }
  }

  for (std::size_t i = 0; i < bundle.curves.size(); ++i)
    bundle.fits.push_back(analyze_curve(bundle.curves[i], subset_order(masks[i])));
  return bundle;
}

std::string format_fixed12(double x) {
  if (x == 0.0) return "0.000000000000";
  const double ax = std::abs(x);
  const int int_digits = ax < 1.0 ? 0 : static_cast<int>(std::floor(std::log10(ax))) + 1;
  const int precision = std::clamp(12 - int_digits, 0, 12);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

void emit_csv(const ResultBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& curve : bundle.curves) {
    const std::filesystem::path path = std::filesystem::path(dir) / (curve.label + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "phi_rad,value,stderr\n";
    for (std::size_t j = 0; j < curve.phi.size(); ++j) {
      const double e = curve.error_bars.empty() ? 0.0 : curve.error_bars[j];
      out << format_fixed12(curve.phi[j]) << ',' << format_fixed12(curve.values[j]) << ','
          << (e == 0.0 ? std::string("0") : format_fixed12(e)) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
}

void emit_report(const ResultBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json doc;
  doc["config_hash"] = bundle.config_hash;
  doc["seed"] = bundle.seed;
  doc["timestamp"] = bundle.timestamp;
  doc["curves"] = nlohmann::ordered_json::array();
  for (const auto& curve : bundle.curves) doc["curves"].push_back(curve.label);
  doc["fits"] = nlohmann::ordered_json::array();
  for (const auto& record : bundle.fits) {
    nlohmann::ordered_json row;
    row["label"] = record.label;
    row["order"] = record.order;
    row["fitted"] = record.fitted;
    if (record.fitted) {
      row["period_rad"] = record.fit.period;
      row["phase_offset_rad"] = record.fit.phase_offset;
      row["amplitude"] = record.fit.amplitude;
      row["offset"] = record.fit.offset;
      row["visibility"] = record.fit.visibility;
      row["rms_residual"] = record.fit.rms_residual;
    }
    if (record.classified) {
      row["fwhm_rad"] = record.report.fwhm;
      row["scale_vs_reference"] = record.report.scale_vs_reference;
      row["classification"] = to_string(record.report.classification);
    }
    if (!record.message.empty()) row["message"] = record.message;
    doc["fits"].push_back(row);
  }
  const std::filesystem::path path = std::filesystem::path(dir) / "report.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

namespace {

ExperimentFile base_analytic() {
  ExperimentFile file;
  file.mode = RunMode::analytic;
  file.outputs = all_curve_masks();
  return file;
}

void set_qwp(ExperimentFile& file, std::optional<double> deg) {
  file.qwp_deg = {deg, deg, std::nullopt, std::nullopt};
}

ExperimentFile make_preset(const std::string& name) {
  ExperimentFile file = base_analytic();
  if (name == "fig2_top") {
    set_qwp(file, std::nullopt);
  } else if (name == "fig2_mid") {
    set_qwp(file, 0.0);
  } else if (name == "fig2_bot") {
    set_qwp(file, 45.0);
  } else if (name == "fig2_top_mc" || name == "fig2_mid_mc" || name == "fig2_bot_mc") {
    file.mode = RunMode::montecarlo;
    file.mean_photons = 3.0;  // strong enough that fourfold coincidences resolve the fringe
    if (name == "fig2_top_mc") set_qwp(file, std::nullopt);
    if (name == "fig2_mid_mc") set_qwp(file, 0.0);
    if (name == "fig2_bot_mc") set_qwp(file, 45.0);
  } else if (name == "fig3" || name == "fig3_top" || name == "fig3_bot") {
    // "fig3" is an alias for the zero-rotation cw row
    file.mode = RunMode::cw;
    file.noise_enabled = true;
    set_qwp(file, name == "fig3_bot" ? 45.0 : 0.0);
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return file;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig2_top", "fig2_mid", "fig2_bot", "fig2_top_mc", "fig2_mid_mc", "fig2_bot_mc",
          "fig3_top", "fig3_bot"};
}

ExperimentFile preset(const std::string& name) { return make_preset(name); }

}  // namespace eraser
