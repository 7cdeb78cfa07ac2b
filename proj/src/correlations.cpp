#include "eraser/correlations.hpp"

#include <cmath>
#include <stdexcept>

namespace eraser {

void CorrelationSpec::validate() const {
  const int n = order();
  if (n != 1 && n != 2 && n != 4)
    throw std::invalid_argument("correlation order must be 1, 2 or 4 (got " + std::to_string(n) + ")");
  unsigned seen = 0;
  for (int d : detectors) {
    if (d < 1 || d > 4) throw std::invalid_argument("detector ids must be 1..4");
    const unsigned bit = 1u << (d - 1);
    if (seen & bit) throw std::invalid_argument("repeated detector in correlation subset");
    seen |= bit;
  }
}

double coincidence_compensation(int order) {
  // per-amplitude factors sqrt(2) (n = 2) and 2 (n = 4) enter the intensity
  // product squared once per detector
  switch (order) {
    case 1: return 1.0;
    case 2: return 4.0;
    case 4: return 256.0;
    default:
      throw std::invalid_argument("correlation order must be 1, 2 or 4");
  }
}

namespace {

std::string correlation_label(const CorrelationSpec& spec) {
  std::string digits;
  for (int d = 1; d <= 4; ++d)
    for (int s : spec.detectors)
      if (s == d) digits += static_cast<char>('0' + d);
  return (spec.order() == 1 ? "I" : "C") + digits;
}

}  // namespace

FringeCurve correlate(const EraserConfig& config, const CorrelationSpec& spec) {
  config.validate();
  spec.validate();
  const double comp = coincidence_compensation(spec.order());

  FringeCurve curve;
  curve.phi = config.phase_grid;
  curve.values.resize(curve.phi.size());
  curve.label = correlation_label(spec);
  curve.normalization = comp;
  for (std::size_t j = 0; j < curve.phi.size(); ++j) {
    const auto amps = detector_amplitudes(config, curve.phi[j]);
    double product = comp;
    for (int d : spec.detectors) product *= amps[static_cast<std::size_t>(d - 1)].intensity();
    curve.values[j] = product;
  }
  return curve;
}

std::map<std::string, FringeCurve> no_qwp_reference(const EraserConfig& config) {
  config.validate();
  for (const auto& b : config.branches) {
    if (b.qwp_xi)
      throw std::invalid_argument("no_qwp_reference requires branches without wave plates");
    if (std::abs(b.polarizer_theta - kPi / 4.0) > 1e-12)
      throw std::invalid_argument("no_qwp_reference requires 45 degree polarizers");
  }
  const std::vector<CorrelationSpec> specs = {
      {{1}}, {{2}}, {{3}}, {{4}},
      {{1, 2}}, {{3, 4}}, {{1, 3}}, {{2, 4}}, {{2, 3}}, {{1, 4}},
      {{1, 2, 3, 4}}};
  std::map<std::string, FringeCurve> out;
  for (const auto& spec : specs) {
    FringeCurve curve = correlate(config, spec);
    out.emplace(curve.label, std::move(curve));
  }
  return out;
}

}  // namespace eraser
