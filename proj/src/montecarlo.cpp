#include "eraser/montecarlo.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "eraser/parallel.hpp"

namespace eraser {

std::uint64_t SourceConfig::windows_per_point() const {
  const double ratio = integration_s / window_s;
  return static_cast<std::uint64_t>(std::llround(ratio));
}

void SourceConfig::validate() const {
  if (!(mean_photons > 0.0)) throw std::invalid_argument("source.mean_photons must be positive");
  if (!(window_s > 0.0)) throw std::invalid_argument("source.window_s must be positive");
  if (!(integration_s > 0.0)) throw std::invalid_argument("source.integration_s must be positive");
  const double ratio = integration_s / window_s;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * rounded)
    throw std::invalid_argument("source.integration_s must be a whole number of windows");
  if (dark_rate_hz != 0.0)
    throw std::invalid_argument("source.dark_rate_hz is not modeled and must be 0");
  if (dead_time_s != 0.0)
    throw std::invalid_argument("source.dead_time_s is not modeled and must be 0");
}

void NoiseConfig::validate() const {
  if (sigma < 0.0) throw std::invalid_argument("noise.sigma must be nonnegative");
}

DetectorMask subset_mask(std::initializer_list<int> detectors) {
  DetectorMask mask = 0;
  for (int d : detectors) {
    if (d < 1 || d > 4) throw std::invalid_argument("detector ids must be 1..4");
    mask |= detector_bit(d);
  }
  return mask;
}

std::string subset_label(DetectorMask mask, char prefix) {
  std::string label(1, prefix);
  for (int d = 1; d <= 4; ++d)
    if (mask & detector_bit(d)) label += static_cast<char>('0' + d);
  return label;
}

int subset_order(DetectorMask mask) { return std::popcount(static_cast<unsigned>(mask)); }

std::uint64_t CountsTable::coincidence(std::size_t point, DetectorMask subset) const {
  if (point >= coincidences.size()) throw std::out_of_range("phase point out of range");
  for (std::size_t s = 0; s < kTrackedSubsets.size(); ++s)
    if (kTrackedSubsets[s] == subset) return coincidences[point][s];
  throw std::invalid_argument("subset " + subset_label(subset, 'C') + " is not recorded");
}

namespace {

struct WindowSampler {
  double poisson_limit;          // exp(-mean photons)
  std::array<double, 4> cum{};   // cumulative routing probabilities

  static WindowSampler make(double mean_photons, const DetectionProbabilities& probs) {
    WindowSampler s;
    s.poisson_limit = std::exp(-mean_photons);
    double acc = 0.0;
    for (int d = 0; d < 4; ++d) {
      acc += probs.detector[static_cast<std::size_t>(d)];
      s.cum[static_cast<std::size_t>(d)] = acc;
    }
    return s;
  }

  DetectorMask draw(Rng& rng) const {
    int k = -1;
    double p = 1.0;
    do {
      ++k;
      p *= rng.uniform01();
    } while (p > poisson_limit);
    DetectorMask mask = 0;
    for (int i = 0; i < k; ++i) {
      const double u = rng.uniform01();
      if (u < cum[1]) {
        if (u < cum[0])
          mask |= 0b0001;
        else
          mask |= 0b0010;
      } else if (u < cum[2]) {
        mask |= 0b0100;
      } else if (u < cum[3]) {
        mask |= 0b1000;
      }
      // else the photon leaves through the unused port or the polarizer
    }
    return mask;
  }
};

void check_probabilities(const DetectionProbabilities& probs) {
  double sum = probs.lost;
  for (double p : probs.detector) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("routing probability outside [0, 1]");
    sum += p;
  }
  if (probs.lost < 0.0 || std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("routing probabilities must sum to 1");
}

double reflect_into(double x, double bound) {
  while (x > bound || x < -bound) {
    if (x > bound)
      x = 2.0 * bound - x;
    else
      x = -2.0 * bound - x;
  }
  return x;
}

}  // namespace

DetectorMask sample_window(double mean_photons, const DetectionProbabilities& probs, Rng& rng) {
  if (!(mean_photons > 0.0)) throw std::invalid_argument("mean photon number must be positive");
  check_probabilities(probs);
  return WindowSampler::make(mean_photons, probs).draw(rng);
}

CountsTable run_scan(const EraserConfig& eraser, const SourceConfig& source,
                     const NoiseConfig& noise, std::uint64_t seed) {
  eraser.validate();
  source.validate();
  noise.validate();

  const std::uint64_t windows = source.windows_per_point();
  const std::size_t points = eraser.phase_grid.size();

  CountsTable table;
  table.phi = eraser.phase_grid;
  table.windows = windows;
  table.singles.assign(points, {});
  table.coincidences.assign(points, {});

  parallel_for(points, [&](std::size_t j) {
    Rng rng(derive_stream(seed, j));
    const double phi = table.phi[j];
    auto& singles = table.singles[j];
    auto& coinc = table.coincidences[j];

    auto probs = detection_probabilities(eraser, phi);
    check_probabilities(probs);
    WindowSampler sampler = WindowSampler::make(source.mean_photons, probs);

    double delta = 0.0;
    for (std::uint64_t w = 0; w < windows; ++w) {
      if (noise.enabled) {
        delta = reflect_into(delta + noise.sigma * rng.gaussian(), kPi);
        sampler = WindowSampler::make(source.mean_photons,
                                      detection_probabilities(eraser, phi + delta));
      }
      const DetectorMask mask = sampler.draw(rng);
      if (!mask) continue;
      for (int d = 0; d < 4; ++d)
        if (mask & (1u << d)) ++singles[static_cast<std::size_t>(d)];
      if (std::popcount(static_cast<unsigned>(mask)) >= 2)
        for (std::size_t s = 0; s < kTrackedSubsets.size(); ++s)
          if ((mask & kTrackedSubsets[s]) == kTrackedSubsets[s]) ++coinc[s];
    }
  });
  return table;
}

FringeCurve singles_curve(const CountsTable& table, int detector) {
  if (detector < 1 || detector > 4) throw std::invalid_argument("detector ids must be 1..4");
  FringeCurve curve;
  curve.phi = table.phi;
  curve.label = subset_label(detector_bit(detector), 'D');
  curve.values.reserve(table.phi.size());
  curve.error_bars.reserve(table.phi.size());
  for (std::size_t j = 0; j < table.phi.size(); ++j) {
    const double n = static_cast<double>(table.singles[j][static_cast<std::size_t>(detector - 1)]);
    curve.values.push_back(n);
    curve.error_bars.push_back(std::sqrt(n));
  }
  return curve;
}

FringeCurve coincidence_curve(const CountsTable& table, DetectorMask subset) {
  if (subset_order(subset) == 1) {
    for (int d = 1; d <= 4; ++d)
      if (subset == detector_bit(d)) return singles_curve(table, d);
  }
  FringeCurve curve;
  curve.phi = table.phi;
  curve.label = subset_label(subset, 'C');
  curve.values.reserve(table.phi.size());
  curve.error_bars.reserve(table.phi.size());
  for (std::size_t j = 0; j < table.phi.size(); ++j) {
    const double n = static_cast<double>(table.coincidence(j, subset));
    curve.values.push_back(n);
    curve.error_bars.push_back(std::sqrt(n));
  }
  return curve;
}

FringeCurve product_curve(const CountsTable& table, DetectorMask subset) {
  const int order = subset_order(subset);
  const double comp = coincidence_compensation(order);
  if (table.windows == 0) throw std::invalid_argument("counts table has no windows");
  const double inv_windows = 1.0 / static_cast<double>(table.windows);

  FringeCurve curve;
  curve.phi = table.phi;
  curve.label = subset_label(subset, 'P');
  curve.normalization = comp;
  curve.values.reserve(table.phi.size());
  curve.error_bars.reserve(table.phi.size());
  for (std::size_t j = 0; j < table.phi.size(); ++j) {
    double product = comp;
    double rel_var = 0.0;
    for (int d = 1; d <= 4; ++d) {
      if (!(subset & detector_bit(d))) continue;
      const double n = static_cast<double>(table.singles[j][static_cast<std::size_t>(d - 1)]);
      product *= n * inv_windows;
      if (n > 0.0) rel_var += 1.0 / n;
    }
    curve.values.push_back(product);
    curve.error_bars.push_back(product * std::sqrt(rel_var));
  }
  return curve;
}

std::map<std::string, FringeCurve> cw_scan(const EraserConfig& eraser, const NoiseConfig& noise,
                                           int samples_per_point, std::uint64_t seed) {
  eraser.validate();
  noise.validate();
  if (samples_per_point < 1) throw std::invalid_argument("samples_per_point must be at least 1");

  const std::size_t points = eraser.phase_grid.size();
  const std::vector<CorrelationSpec> specs = {
      {{1}}, {{2}}, {{3}}, {{4}},
      {{1, 2}}, {{3, 4}}, {{1, 3}}, {{2, 4}}, {{2, 3}}, {{1, 4}},
      {{1, 2, 3, 4}}};

  std::vector<std::vector<double>> means(specs.size(), std::vector<double>(points));
  std::vector<std::vector<double>> errs(specs.size(), std::vector<double>(points));

  parallel_for(points, [&](std::size_t j) {
    Rng rng(derive_stream(seed, j));
    const double phi = eraser.phase_grid[j];
    std::vector<double> sum(specs.size(), 0.0);
    std::vector<double> sumsq(specs.size(), 0.0);
    double delta = 0.0;
    for (int s = 0; s < samples_per_point; ++s) {
      if (noise.enabled) delta = reflect_into(delta + noise.sigma * rng.gaussian(), kPi);
      const auto amps = detector_amplitudes(eraser, phi + delta);
      std::array<double, 4> intensity{};
      for (int d = 0; d < 4; ++d) intensity[static_cast<std::size_t>(d)] = amps[static_cast<std::size_t>(d)].intensity();
      for (std::size_t c = 0; c < specs.size(); ++c) {
        double product = coincidence_compensation(specs[c].order());
        for (int d : specs[c].detectors) product *= intensity[static_cast<std::size_t>(d - 1)];
        sum[c] += product;
        sumsq[c] += product * product;
      }
    }
    const double inv = 1.0 / samples_per_point;
    for (std::size_t c = 0; c < specs.size(); ++c) {
      const double mean = sum[c] * inv;
      means[c][j] = mean;
      if (samples_per_point > 1) {
        const double var = std::max(0.0, (sumsq[c] * inv - mean * mean) *
                                             samples_per_point / (samples_per_point - 1.0));
        errs[c][j] = std::sqrt(var / samples_per_point);
      }
    }
  });

  std::map<std::string, FringeCurve> out;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    FringeCurve curve;
    curve.phi = eraser.phase_grid;
    curve.values = std::move(means[c]);
    curve.error_bars = std::move(errs[c]);
    curve.normalization = coincidence_compensation(specs[c].order());
    std::string digits;
    for (int d : specs[c].detectors) digits += static_cast<char>('0' + d);
    curve.label = (specs[c].order() == 1 ? "I" : "C") + digits;
    out.emplace(curve.label, std::move(curve));
  }
  return out;
}

}  // namespace eraser
