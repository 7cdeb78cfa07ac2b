#include "eraser/jones.hpp"

#include <cmath>

namespace eraser {

namespace {
constexpr Complex kI{0.0, 1.0};
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
}  // namespace

JonesState vacuum() { return {Complex{}, Complex{}, 1.0}; }

JonesState horizontal_state(double scale) { return {Complex{1.0, 0.0}, Complex{}, scale}; }

ElementMatrix identity_matrix() { return {Complex{1.0}, Complex{}, Complex{}, Complex{1.0}}; }

ElementMatrix qwp_matrix(double xi) {
  const Complex global = std::exp(-2.0 * xi * kI);
  const Complex vertical = kI * std::exp(4.0 * xi * kI);
  return {global, Complex{}, Complex{}, global * vertical};
}

ElementMatrix hwp_matrix(double rho) {
  const double c = std::cos(2.0 * rho);
  const double s = std::sin(2.0 * rho);
  return {Complex{c}, Complex{s}, Complex{s}, Complex{-c}};
}

ElementMatrix polarizer_matrix(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {Complex{c * c}, Complex{c * s}, Complex{s * c}, Complex{s * s}};
}

ElementMatrix mirror_matrix() { return {Complex{-1.0}, Complex{}, Complex{}, Complex{1.0}}; }

ElementMatrix phase_matrix(double delta) {
  const Complex p = std::exp(delta * kI);
  return {p, Complex{}, Complex{}, p};
}

ElementMatrix adjoint(const ElementMatrix& m) {
  return {std::conj(m.m00), std::conj(m.m10), std::conj(m.m01), std::conj(m.m11)};
}

ElementMatrix matmul(const ElementMatrix& a, const ElementMatrix& b) {
  return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
          a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

JonesState apply(const ElementMatrix& m, const JonesState& s) {
  return {m.m00 * s.h + m.m01 * s.v, m.m10 * s.h + m.m11 * s.v, s.scale};
}

std::pair<JonesState, JonesState> bs_scatter(const JonesState& in_a, const JonesState& in_b) {
  Complex ah = in_a.h, av = in_a.v, bh = in_b.h, bv = in_b.v;
  double out_scale;
  if (in_a.norm2() == 0.0) {
    out_scale = in_b.scale;
  } else if (in_b.norm2() == 0.0) {
    out_scale = in_a.scale;
  } else if (in_a.scale == in_b.scale) {
    out_scale = in_a.scale;
  } else {
    // mixed scales: fold them into the amplitudes
    ah *= in_a.scale;
    av *= in_a.scale;
    bh *= in_b.scale;
    bv *= in_b.scale;
    out_scale = 1.0;
  }
  JonesState out_c{(kI * ah + bh) * kInvSqrt2, (kI * av + bv) * kInvSqrt2, out_scale};
  JonesState out_d{(ah + kI * bh) * kInvSqrt2, (av + kI * bv) * kInvSqrt2, out_scale};
  return {out_c, out_d};
}

std::pair<JonesState, JonesState> pbs_split(const JonesState& in) {
  return {JonesState{in.h, Complex{}, in.scale}, JonesState{Complex{}, in.v, in.scale}};
}

JonesState mirror_flip(const JonesState& in) { return {-in.h, in.v, in.scale}; }

PolarizerOutput polarizer_project(const JonesState& in, double theta_p) {
  const double c = std::cos(theta_p);
  const double s = std::sin(theta_p);
  const Complex along = c * in.h + s * in.v;
  JonesState out{c * along, s * along, in.scale};
  const double n2 = in.norm2();
  const double pass = n2 > 0.0 ? std::norm(along) / n2 : 0.0;
  return {out, pass};
}

JonesState canonical_phase(const JonesState& s) {
  const Complex big = std::abs(s.h) >= std::abs(s.v) ? s.h : s.v;
  const double mag = std::abs(big);
  if (mag == 0.0) return s;
  const Complex rot = std::conj(big) / mag;
  return {s.h * rot, s.v * rot, s.scale};
}

}  // namespace eraser
