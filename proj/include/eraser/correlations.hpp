#pragma once

#include <map>
#include <string>
#include <vector>

#include "eraser/circuit.hpp"

namespace eraser {

/// Which detectors enter an n-th order intensity product. Only orders
/// 1, 2 and 4 are meaningful for this circuit.
struct CorrelationSpec {
  std::vector<int> detectors;

  int order() const { return static_cast<int>(detectors.size()); }
  void validate() const;  // throws std::invalid_argument
};

/// One fringe: values sampled on the phase grid. `normalization` records
/// the coincidence-compensation factor already multiplied into `values`
/// (1, 4 or 256 in intensity units, from sqrt(2) resp. 2 per amplitude),
/// so raw intensity products are values / normalization.
struct FringeCurve {
  std::vector<double> phi;
  std::vector<double> values;
  std::vector<double> error_bars;  // empty when not applicable
  std::string label;
  double normalization{1.0};
};

/// Intensity-product compensation for an n-fold coincidence.
double coincidence_compensation(int order);

/// Pointwise product of the analytic detector intensities over the phase
/// grid, times the coincidence compensation for the product order.
FringeCurve correlate(const EraserConfig& config, const CorrelationSpec& spec);

/// The reference curve family for the plain eraser (no wave plates, all
/// polarizers at 45 degrees): I1..I4, all six pairs, and the fourfold
/// product. Keys: "I1".."I4", "C12", "C34", "C13", "C24", "C23", "C14",
/// "C1234".
std::map<std::string, FringeCurve> no_qwp_reference(const EraserConfig& config);

}  // namespace eraser
