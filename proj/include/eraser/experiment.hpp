#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eraser/fringe.hpp"
#include "eraser/montecarlo.hpp"

namespace eraser {

enum class RunMode { analytic, montecarlo, cw };
const char* to_string(RunMode m);

struct ParseError : std::runtime_error {
  ParseError(int line_number, const std::string& message)
      : std::runtime_error("line " + std::to_string(line_number) + ": " + message),
        line(line_number) {}
  int line;
};

/// Parsed experiment description. Mirrors the flat `section.key = value`
/// file format: angles are kept in degrees here and converted to radians
/// when the run configs are built.
struct ExperimentFile {
  RunMode mode{RunMode::analytic};
  int grid_points{360};
  double grid_min_deg{-360.0};
  double grid_max_deg{360.0};
  double i0{1.0};
  std::array<double, 4> polarizer_deg{45.0, 45.0, 45.0, 45.0};
  std::array<std::optional<double>, 4> qwp_deg{0.0, 0.0, std::nullopt, std::nullopt};
  double mean_photons{0.01};
  double window_s{1e-7};
  double integration_s{0.1};
  double dark_rate_hz{0.0};
  double dead_time_s{0.0};
  bool noise_enabled{false};
  double noise_sigma{1e-4};
  int cw_samples{30};
  double cw_power{300.0};
  std::uint64_t seed{1};
  std::vector<DetectorMask> outputs;  // filled with all curves when empty
  std::string output_dir{"."};

  bool operator==(const ExperimentFile&) const = default;
};

ExperimentFile parse_experiment(const std::string& text);
std::string serialize_experiment(const ExperimentFile& file);

EraserConfig build_eraser_config(const ExperimentFile& file);
SourceConfig build_source_config(const ExperimentFile& file);
NoiseConfig build_noise_config(const ExperimentFile& file);

/// The default curve set: four singles, six pairs, the fourfold.
std::vector<DetectorMask> all_curve_masks();

struct FitRecord {
  std::string label;
  int order{1};
  bool fitted{false};
  FringeFit fit{};
  double fwhm_rad{0.0};
  bool classified{false};
  ResolutionReport report{};
  std::string message;  // why the fit or classification was skipped
};

struct ResultBundle {
  std::string config_hash;  // FNV-1a of the canonical serialization
  std::uint64_t seed{};
  std::string timestamp;    // UTC, fixed at run time
  std::vector<FringeCurve> curves;
  std::vector<FitRecord> fits;  // one per curve, same order
};

/// Executes the experiment: computes every requested curve, fits it, and
/// classifies its resolution against the first-order reference width pi.
ResultBundle run(const ExperimentFile& file);

/// One CSV per curve (<label>.csv) under dir: header `phi_rad,value,stderr`,
/// fixed-notation values with 12 significant digits, LF endings.
void emit_csv(const ResultBundle& bundle, const std::string& dir);

/// report.json with the run metadata and all fit/resolution rows.
void emit_report(const ResultBundle& bundle, const std::string& dir);

std::string format_fixed12(double x);

std::vector<std::string> preset_names();
ExperimentFile preset(const std::string& name);  // throws on unknown name

}  // namespace eraser
