#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "eraser/circuit.hpp"
#include "eraser/correlations.hpp"
#include "eraser/rng.hpp"

namespace eraser {

struct SourceConfig {
  double mean_photons{0.01};  // per counting window
  double window_s{1e-7};      // counting window length
  double integration_s{0.1};  // dwell per phase point (whole windows)
  double dark_rate_hz{0.0};   // accepted in configs but must stay 0
  double dead_time_s{0.0};    // accepted in configs but must stay 0

  std::uint64_t windows_per_point() const;
  void validate() const;  // throws std::invalid_argument
};

/// Air-turbulence model: a reflected Gaussian random walk on the arm phase,
/// one step per window (or per cw sample), restarting at zero for every
/// phase point so points stay independent.
struct NoiseConfig {
  bool enabled{false};
  double sigma{1e-4};  // walk step, radians

  void validate() const;
};

/// Detector subsets as bitmasks: bit d-1 set means detector d.
using DetectorMask = std::uint8_t;

constexpr DetectorMask detector_bit(int d) { return static_cast<DetectorMask>(1u << (d - 1)); }
DetectorMask subset_mask(std::initializer_list<int> detectors);
std::string subset_label(DetectorMask mask, char prefix);
int subset_order(DetectorMask mask);

/// Coincidence subsets recorded by every scan: the six pairs, the four
/// triples and the fourfold.
inline constexpr std::array<DetectorMask, 11> kTrackedSubsets = {
    0b0011, 0b1100, 0b0101, 0b1010, 0b0110, 0b1001,
    0b0111, 0b1011, 0b1101, 0b1110, 0b1111};

/// Click record of one scan: per phase point, the four singles counters and
/// one counter per tracked coincidence subset.
struct CountsTable {
  std::vector<double> phi;
  std::uint64_t windows{0};
  std::vector<std::array<std::uint64_t, 4>> singles;
  std::vector<std::array<std::uint64_t, kTrackedSubsets.size()>> coincidences;

  std::uint64_t coincidence(std::size_t point, DetectorMask subset) const;
  bool operator==(const CountsTable&) const = default;
};

/// One counting window: draws a Poisson photon number, routes each photon
/// independently by `probs`, and reports which detectors saw at least one
/// photon (the detectors do not resolve photon number).
DetectorMask sample_window(double mean_photons, const DetectionProbabilities& probs, Rng& rng);

/// Full scan over the configured phase grid. Each point runs on its own
/// random substream derived from (seed, point index), so results are
/// bit-identical for any parallelism degree.
CountsTable run_scan(const EraserConfig& eraser, const SourceConfig& source,
                     const NoiseConfig& noise, std::uint64_t seed);

FringeCurve singles_curve(const CountsTable& table, int detector);
FringeCurve coincidence_curve(const CountsTable& table, DetectorMask subset);

/// Per-point product of singles rates, scaled like the analytic correlation
/// curves: the multiple-intensity-product estimate of an n-th order fringe
/// from counted rates.
FringeCurve product_curve(const CountsTable& table, DetectorMask subset);

/// Continuous-wave run: per phase point, `samples_per_point` reads of the
/// analytic intensities at the noise-perturbed phase; intensity products
/// are formed sample by sample and then averaged. Returns the same curve
/// set as no_qwp_reference (singles, six pairs, fourfold), keyed by label.
std::map<std::string, FringeCurve> cw_scan(const EraserConfig& eraser, const NoiseConfig& noise,
                                           int samples_per_point, std::uint64_t seed);

}  // namespace eraser
