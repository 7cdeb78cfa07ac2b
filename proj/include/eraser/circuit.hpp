#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "eraser/jones.hpp"

namespace eraser {

/// One detector arm of the four-way fan-out: an optional quarter-wave plate
/// followed by a polarizer, terminated by one detector.
struct BranchConfig {
  int detector_id{1};                 // 1..4
  std::optional<double> qwp_xi{};     // QWP rotation, radians; nullopt = no QWP
  double polarizer_theta{kPi / 4.0};  // radians
};

struct EraserConfig {
  std::array<BranchConfig, 4> branches{};
  std::vector<double> phase_grid;  // strictly increasing
  double i0{1.0};                  // reference intensity (E0^2)

  /// 45 degree polarizers on all four arms, no wave plates, default grid.
  static EraserConfig standard();
  /// Same, with a QWP at rotation xi in front of detectors 1 and 2.
  static EraserConfig with_qwp(double xi);

  const BranchConfig& branch(int detector_id) const;
  void validate() const;  // throws std::invalid_argument
};

/// Inclusive linear grid; defaults to the 360-point scan over [-2pi, 2pi].
std::vector<double> default_phase_grid(int points = 360, double lo = -2.0 * kPi,
                                       double hi = 2.0 * kPi);

/// Fields at the two interferometer output ports for arm phase phi, built
/// from the element operations (half-wave plate at 22.5 degrees, polarizing
/// splitter, phase on the vertical arm, recombining splitter).
std::pair<JonesState, JonesState> mzi_outputs(double phi, double e0 = 1.0);

/// Field arriving at one detector after its branch optics and polarizer.
JonesState detector_amplitude(const BranchConfig& branch, double phi, double e0 = 1.0);

/// |detector_amplitude|^2 with the source normalized so that the full input
/// power is i0.
double detector_intensity(const BranchConfig& branch, double phi, double i0 = 1.0);

/// All four detector fields for one phase, sharing the interferometer and
/// fan-out evaluation. Indexed by detector_id - 1.
std::array<JonesState, 4> detector_amplitudes(const EraserConfig& config, double phi);

struct DetectionProbabilities {
  std::array<double, 4> detector{};  // indexed by detector_id - 1
  double lost{};                     // unused port + polarizer rejection
};

/// Per-photon routing probabilities: detector[d] = intensity_d / i0, and
/// lost completes the distribution to 1.
DetectionProbabilities detection_probabilities(const EraserConfig& config, double phi);

}  // namespace eraser
