#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "eraser/correlations.hpp"

namespace eraser {

/// Raised when a curve cannot be characterized (no dominant spectral peak,
/// residual too large, peak at the grid boundary, ...).
struct FitError : std::runtime_error {
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// Least-squares parameters of offset + amplitude * cos(2 pi phi / period
/// + phase_offset).
struct FringeFit {
  double period{};        // radians, > 0
  double phase_offset{};  // radians, in (-pi, pi]
  double amplitude{};     // >= 0
  double offset{};
  double visibility{};    // amplitude / offset clamped to [0, 1]
  double rms_residual{};
};

/// Fits a single sinusoid. The period is seeded from the dominant discrete
/// spectral peak (or from `harmonic_hint` = number of fringe periods per
/// 2 pi of phase) and refined by nonlinear least squares. Throws FitError
/// when no dominant peak exists or the residual exceeds 25% of the fitted
/// amplitude; requires a uniform grid with at least 8 points per period.
FringeFit fit_sinusoid(const FringeCurve& curve, std::optional<int> harmonic_hint = std::nullopt);

/// Width of the global peak at half of (max - min), by linear interpolation
/// between grid points. The peak must be interior to the grid.
double fwhm(const FringeCurve& curve);

/// Same half level, evaluated on a callable and refined by bisection; finds
/// the peak closest to the global maximum of a dense scan of [lo, hi].
double fwhm_of(const std::function<double(double)>& f, double lo, double hi);

enum class Resolution { classical, sql, beyond_sql, heisenberg };
const char* to_string(Resolution r);

struct ResolutionReport {
  double fwhm{};                // radians
  double scale_vs_reference{};  // fwhm / reference fwhm
  Resolution classification{Resolution::classical};
};

/// Classifies an order-n fringe against the first-order reference width a:
/// period 2 pi / n means the Heisenberg limit, an unchanged period with
/// width scale 1/sqrt(n) the standard quantum limit, a smaller scale
/// beyond-SQL. Both tests use a +-5% band.
ResolutionReport classify_resolution(const FringeFit& fit, double fwhm_value,
                                     double reference_fwhm, int order);

inline constexpr double kResolutionBand = 0.05;

}  // namespace eraser
