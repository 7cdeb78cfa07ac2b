#include "eraser/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eraser {

std::vector<double> default_phase_grid(int points, double lo, double hi) {
  if (points < 2) throw std::invalid_argument("phase grid needs at least 2 points");
  if (!(hi > lo)) throw std::invalid_argument("phase grid bounds must be increasing");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double step = (hi - lo) / (points - 1);
  for (int j = 0; j < points; ++j) grid[static_cast<std::size_t>(j)] = lo + j * step;
  return grid;
}

EraserConfig EraserConfig::standard() {
  EraserConfig cfg;
  for (int d = 1; d <= 4; ++d) cfg.branches[static_cast<std::size_t>(d - 1)] = BranchConfig{d, std::nullopt, kPi / 4.0};
  cfg.phase_grid = default_phase_grid();
  return cfg;
}

EraserConfig EraserConfig::with_qwp(double xi) {
  EraserConfig cfg = standard();
  cfg.branches[0].qwp_xi = xi;
  cfg.branches[1].qwp_xi = xi;
  return cfg;
}

const BranchConfig& EraserConfig::branch(int detector_id) const {
  for (const auto& b : branches)
    if (b.detector_id == detector_id) return b;
  throw std::invalid_argument("no branch for detector " + std::to_string(detector_id));
}

void EraserConfig::validate() const {
  unsigned seen = 0;
  for (const auto& b : branches) {
    if (b.detector_id < 1 || b.detector_id > 4)
      throw std::invalid_argument("detector ids must be 1..4");
    const unsigned bit = 1u << (b.detector_id - 1);
    if (seen & bit) throw std::invalid_argument("duplicate detector id in branches");
    seen |= bit;
  }
  if (phase_grid.empty()) throw std::invalid_argument("phase grid is empty");
  for (std::size_t j = 1; j < phase_grid.size(); ++j)
    if (!(phase_grid[j] > phase_grid[j - 1]))
      throw std::invalid_argument("phase grid must be strictly increasing");
  if (!(i0 > 0.0)) throw std::invalid_argument("i0 must be positive");
}

std::pair<JonesState, JonesState> mzi_outputs(double phi, double e0) {
  JonesState diagonal = apply(hwp_matrix(kPi / 8.0), horizontal_state(e0));
  auto [arm_h, arm_v] = pbs_split(diagonal);
  // the splitter's reflected (vertical) arm picks up +pi/2; the piezo phase
  // phi also sits on that arm
  arm_v = apply(phase_matrix(kPi / 2.0 + phi), arm_v);
  return bs_scatter(arm_h, arm_v);
}

namespace {

/// Fan-out of the instrumented interferometer port into the four branch
/// fields, before any wave plate or polarizer. The first splitter's
/// transmitted port feeds the 1/2 pair, its reflected port the 3/4 pair;
/// at each terminal splitter the reflected output is folded by a mirror
/// (horizontal amplitude negated) on its way to detectors 1 and 3.
std::array<JonesState, 4> fan_out_fields(double phi, double e0) {
  auto [port_a, port_b] = mzi_outputs(phi, e0);
  (void)port_b;  // second interferometer port is not instrumented
  auto [fan_r, fan_t] = bs_scatter(port_a, vacuum());
  auto [r12, t12] = bs_scatter(fan_t, vacuum());
  auto [r34, t34] = bs_scatter(fan_r, vacuum());
  return {mirror_flip(r12), t12, mirror_flip(r34), t34};
}

JonesState finish_branch(const BranchConfig& branch, JonesState field) {
  if (branch.qwp_xi) field = apply(qwp_matrix(*branch.qwp_xi), field);
  return polarizer_project(field, branch.polarizer_theta).out;
}

}  // namespace

JonesState detector_amplitude(const BranchConfig& branch, double phi, double e0) {
  if (branch.detector_id < 1 || branch.detector_id > 4)
    throw std::invalid_argument("detector ids must be 1..4");
  const auto fields = fan_out_fields(phi, e0);
  return finish_branch(branch, fields[static_cast<std::size_t>(branch.detector_id - 1)]);
}

double detector_intensity(const BranchConfig& branch, double phi, double i0) {
  return detector_amplitude(branch, phi, std::sqrt(i0)).intensity();
}

std::array<JonesState, 4> detector_amplitudes(const EraserConfig& config, double phi) {
  const auto fields = fan_out_fields(phi, std::sqrt(config.i0));
  std::array<JonesState, 4> out{};
  for (const auto& b : config.branches)
    out[static_cast<std::size_t>(b.detector_id - 1)] =
        finish_branch(b, fields[static_cast<std::size_t>(b.detector_id - 1)]);
  return out;
}

DetectionProbabilities detection_probabilities(const EraserConfig& config, double phi) {
  const auto fields = fan_out_fields(phi, 1.0);
  DetectionProbabilities probs{};
  double sum = 0.0;
  for (const auto& b : config.branches) {
    const std::size_t idx = static_cast<std::size_t>(b.detector_id - 1);
    const double p = finish_branch(b, fields[idx]).intensity();
    probs.detector[idx] = p;
    sum += p;
  }
  probs.lost = std::max(0.0, 1.0 - sum);
  return probs;
}

}  // namespace eraser
