#include "eraser/fringe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace eraser {

namespace {

struct HarmonicModel {
  double offset{}, cos_coef{}, sin_coef{}, ssr{};
};

/// Linear least squares of v ~ b0 + bc cos(w phi) + bs sin(w phi).
HarmonicModel project_harmonic(const std::vector<double>& phi, const std::vector<double>& val,
                               double omega) {
  double a[3][3] = {};
  double b[3] = {};
  for (std::size_t j = 0; j < phi.size(); ++j) {
    const double c = std::cos(omega * phi[j]);
    const double s = std::sin(omega * phi[j]);
    const double basis[3] = {1.0, c, s};
    for (int r = 0; r < 3; ++r) {
      b[r] += basis[r] * val[j];
      for (int q = 0; q < 3; ++q) a[r][q] += basis[r] * basis[q];
    }
  }
  // 3x3 Gaussian elimination with partial pivoting
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[perm[r]][col]) > std::abs(a[perm[pivot]][col])) pivot = r;
    std::swap(perm[col], perm[pivot]);
    const double diag = a[perm[col]][col];
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[perm[r]][col] / diag;
      for (int q = col; q < 3; ++q) a[perm[r]][q] -= f * a[perm[col]][q];
      b[perm[r]] -= f * b[perm[col]];
    }
  }
  double x[3];
  for (int col = 2; col >= 0; --col) {
    double acc = b[perm[col]];
    for (int q = col + 1; q < 3; ++q) acc -= a[perm[col]][q] * x[q];
    x[col] = acc / a[perm[col]][col];
  }

  HarmonicModel m{x[0], x[1], x[2], 0.0};
  for (std::size_t j = 0; j < phi.size(); ++j) {
    const double model =
        m.offset + m.cos_coef * std::cos(omega * phi[j]) + m.sin_coef * std::sin(omega * phi[j]);
    const double r = val[j] - model;
    m.ssr += r * r;
  }
  return m;
}

double golden_minimize(const std::function<double(double)>& f, double lo, double hi) {
  constexpr double kInvPhi = 0.61803398874989484820458683436564;
  double a = lo, b = hi;
  double c = b - (b - a) * kInvPhi;
  double d = a + (b - a) * kInvPhi;
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * (std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * kInvPhi;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * kInvPhi;
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double wrap_phase(double p) {
  while (p > kPi) p -= 2.0 * kPi;
  while (p <= -kPi) p += 2.0 * kPi;
  return p;
}

}  // namespace

FringeFit fit_sinusoid(const FringeCurve& curve, std::optional<int> harmonic_hint) {
  const auto& phi = curve.phi;
  const auto& val = curve.values;
  const std::size_t n = phi.size();
  if (n < 8 || val.size() != n)
    throw std::invalid_argument("fit needs at least 8 samples and matching value count");
  const double step = (phi.back() - phi.front()) / static_cast<double>(n - 1);
  if (!(step > 0.0)) throw std::invalid_argument("phase grid must be increasing");
  for (std::size_t j = 1; j < n; ++j)
    if (std::abs((phi[j] - phi[j - 1]) - step) > 1e-9 * step)
      throw std::invalid_argument("fit requires a uniform phase grid");

  const double mean = std::accumulate(val.begin(), val.end(), 0.0) / static_cast<double>(n);

  // discrete spectrum; bin k has angular frequency 2 pi k / (n step) and at
  // least 8 samples per period requires k <= n / 8
  const std::size_t kmax = std::min(n / 2, n / 8);
  if (kmax < 1) throw std::invalid_argument("fit needs at least 8 samples per period");

  std::size_t kstar;
  if (harmonic_hint) {
    const double target = *harmonic_hint * static_cast<double>(n) * step / (2.0 * kPi);
    const double rounded = std::round(target);
    if (*harmonic_hint < 1 || rounded < 1.0 || rounded > static_cast<double>(kmax))
      throw std::invalid_argument("harmonic hint outside the resolvable range");
    kstar = static_cast<std::size_t>(rounded);
  } else {
    std::vector<double> power(kmax + 1, 0.0);
    for (std::size_t k = 1; k <= kmax; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double angle = 2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n);
        re += (val[j] - mean) * std::cos(angle);
        im += (val[j] - mean) * std::sin(angle);
      }
      power[k] = re * re + im * im;
    }
    kstar = 1;
    for (std::size_t k = 2; k <= kmax; ++k)
      if (power[k] > power[kstar]) kstar = k;

    std::vector<double> rest;
    rest.reserve(kmax - 1);
    for (std::size_t k = 1; k <= kmax; ++k)
      if (k != kstar) rest.push_back(power[k]);
    std::nth_element(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(rest.size() / 2),
                     rest.end());
    const double median = rest.empty() ? 0.0 : rest[rest.size() / 2];
    double scale2 = 0.0;
    for (double v : val) scale2 += v * v;
    if (power[kstar] < 1e-20 * (scale2 + 1e-300) || power[kstar] < 15.0 * median)
      throw FitError("no dominant spectral peak in the curve");
  }

  const double omega0 = 2.0 * kPi * static_cast<double>(kstar) / (static_cast<double>(n) * step);
  const double spread = 0.75 / static_cast<double>(kstar);
  const auto ssr_of = [&](double w) { return project_harmonic(phi, val, w).ssr; };
  const double omega = golden_minimize(ssr_of, omega0 * (1.0 - spread), omega0 * (1.0 + spread));
  const HarmonicModel m = project_harmonic(phi, val, omega);

  FringeFit fit;
  fit.period = 2.0 * kPi / omega;
  fit.amplitude = std::hypot(m.cos_coef, m.sin_coef);
  fit.phase_offset = wrap_phase(std::atan2(-m.sin_coef, m.cos_coef));
  fit.offset = m.offset;
  fit.visibility = m.offset > 0.0 ? std::clamp(fit.amplitude / m.offset, 0.0, 1.0) : 0.0;
  fit.rms_residual = std::sqrt(m.ssr / static_cast<double>(n));
  if (!(fit.amplitude > 0.0)) throw FitError("fitted fringe amplitude is zero");
  if (fit.rms_residual > 0.25 * fit.amplitude)
    throw FitError("fit residual exceeds 25% of the fringe amplitude");
  return fit;
}

double fwhm(const FringeCurve& curve) {
  const auto& phi = curve.phi;
  const auto& val = curve.values;
  const std::size_t n = phi.size();
  if (n < 3 || val.size() != n) throw std::invalid_argument("fwhm needs at least 3 samples");

  std::size_t peak = 0;
  double vmax = val[0], vmin = val[0];
  for (std::size_t j = 1; j < n; ++j) {
    if (val[j] > vmax) {
      vmax = val[j];
      peak = j;
    }
    vmin = std::min(vmin, val[j]);
  }
  if (peak == 0 || peak == n - 1) throw FitError("fringe peak sits on the grid boundary");
  if (!(vmax > vmin)) throw FitError("curve is flat; no peak width");
  const double half = 0.5 * (vmax + vmin);

  double left = 0.0, right = 0.0;
  bool found = false;
  for (std::size_t j = peak; j-- > 0;) {
    if (val[j] <= half) {
      const double t = (half - val[j]) / (val[j + 1] - val[j]);
      left = phi[j] + t * (phi[j + 1] - phi[j]);
      found = true;
      break;
    }
  }
  if (!found) throw FitError("half level not reached left of the peak");
  found = false;
  for (std::size_t j = peak + 1; j < n; ++j) {
    if (val[j] <= half) {
      const double t = (val[j - 1] - half) / (val[j - 1] - val[j]);
      right = phi[j - 1] + t * (phi[j] - phi[j - 1]);
      found = true;
      break;
    }
  }
  if (!found) throw FitError("half level not reached right of the peak");
  return right - left;
}

double fwhm_of(const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("fwhm_of needs an increasing interval");
  constexpr int kScan = 4096;
  const double step = (hi - lo) / kScan;
  int ipeak = 0;
  double vmax = f(lo), vmin = vmax;
  for (int j = 1; j <= kScan; ++j) {
    const double v = f(lo + j * step);
    if (v > vmax) {
      vmax = v;
      ipeak = j;
    }
    vmin = std::min(vmin, v);
  }
  if (ipeak == 0 || ipeak == kScan) throw FitError("fringe peak sits on the interval boundary");

  const double peak_lo = lo + (ipeak - 1) * step;
  const double peak_hi = lo + (ipeak + 1) * step;
  const double xpeak = golden_minimize([&](double x) { return -f(x); }, peak_lo, peak_hi);
  vmax = f(xpeak);
  if (!(vmax > vmin)) throw FitError("function is flat; no peak width");
  const double half = 0.5 * (vmax + vmin);

  const auto bisect = [&](double a, double b) {
    // f(a) and f(b) straddle the half level
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if ((f(m) - half) * (f(a) - half) <= 0.0)
        b = m;
      else
        a = m;
    }
    return 0.5 * (a + b);
  };

  double x = xpeak;
  while (x - step >= lo && f(x - step) > half) x -= step;
  if (x - step < lo) throw FitError("half level not reached left of the peak");
  const double left = bisect(x - step, x);
  x = xpeak;
  while (x + step <= hi && f(x + step) > half) x += step;
  if (x + step > hi) throw FitError("half level not reached right of the peak");
  const double right = bisect(x, x + step);
  return right - left;
}

const char* to_string(Resolution r) {
  switch (r) {
    case Resolution::classical: return "classical";
    case Resolution::sql: return "SQL";
    case Resolution::beyond_sql: return "beyond-SQL";
    case Resolution::heisenberg: return "Heisenberg";
  }
  return "unknown";
}

ResolutionReport classify_resolution(const FringeFit& fit, double fwhm_value,
                                     double reference_fwhm, int order) {
  if (order < 1) throw std::invalid_argument("correlation order must be at least 1");
  if (!(reference_fwhm > 0.0)) throw std::invalid_argument("reference fwhm must be positive");
  if (!(fwhm_value > 0.0)) throw std::invalid_argument("fwhm must be positive");
  if (fit.rms_residual > 0.25 * fit.amplitude)
    throw FitError("fit residual too large to classify the fringe");

  ResolutionReport report;
  report.fwhm = fwhm_value;
  report.scale_vs_reference = fwhm_value / reference_fwhm;
  if (order == 1) {
    report.classification = Resolution::classical;
    return report;
  }
  const double period_ratio = fit.period * order / (2.0 * kPi);
  const double sql_ratio = report.scale_vs_reference * std::sqrt(static_cast<double>(order));
  if (std::abs(period_ratio - 1.0) <= kResolutionBand)
    report.classification = Resolution::heisenberg;
  else if (std::abs(sql_ratio - 1.0) <= kResolutionBand)
    report.classification = Resolution::sql;
  else if (sql_ratio < 1.0)
    report.classification = Resolution::beyond_sql;
  else
    report.classification = Resolution::classical;
  return report;
}

}  // namespace eraser
