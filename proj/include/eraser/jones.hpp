#pragma once

#include <complex>
#include <utility>

namespace eraser {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Polarization state in the horizontal/vertical basis. The physical field
/// is scale * (h, v), so the intensity is norm2() * scale^2. Keeping the
/// field amplitude in `scale` lets the basis amplitudes stay near unity
/// while propagating through the circuit.
struct JonesState {
  Complex h{};
  Complex v{};
  double scale{1.0};

  double norm2() const { return std::norm(h) + std::norm(v); }
  double intensity() const { return norm2() * scale * scale; }
};

/// 2x2 operator on (h, v).
struct ElementMatrix {
  Complex m00{}, m01{}, m10{}, m11{};
};

JonesState vacuum();
JonesState horizontal_state(double scale = 1.0);

ElementMatrix identity_matrix();

/// Quarter-wave plate rotated by xi, slow-axis-horizontal convention: at
/// xi = 0 the vertical component gains +pi/2 relative to horizontal.
/// Rotation enters as a global phase e^{-i 2 xi} plus an extra e^{i 4 xi}
/// on the vertical term.
ElementMatrix qwp_matrix(double xi);

/// Half-wave plate with fast axis rotated by rho from horizontal.
ElementMatrix hwp_matrix(double rho);

/// Projector onto the axis (cos theta, sin theta).
ElementMatrix polarizer_matrix(double theta);

/// Mirror fold: horizontal amplitude negated, vertical unchanged.
ElementMatrix mirror_matrix();

/// Scalar phase e^{i delta} on both components.
ElementMatrix phase_matrix(double delta);

ElementMatrix adjoint(const ElementMatrix& m);
ElementMatrix matmul(const ElementMatrix& a, const ElementMatrix& b);

JonesState apply(const ElementMatrix& m, const JonesState& s);

/// 50/50 nonpolarizing beam splitter. Reflection carries a +pi/2 phase
/// (factor i), transmission is unchanged, both scaled by 1/sqrt(2):
///   first output  = (i * in_a + in_b) / sqrt(2)   (a reflects into it)
///   second output = (in_a + i * in_b) / sqrt(2)   (a transmits into it)
std::pair<JonesState, JonesState> bs_scatter(const JonesState& in_a, const JonesState& in_b);

/// Polarizing beam splitter: first port keeps the horizontal amplitude,
/// second port the vertical one.
std::pair<JonesState, JonesState> pbs_split(const JonesState& in);

JonesState mirror_flip(const JonesState& in);

struct PolarizerOutput {
  JonesState out;
  double pass_probability;  // |<p|in>|^2 / norm2(in), or 0 for a dark input
};
PolarizerOutput polarizer_project(const JonesState& in, double theta_p);

/// Rotates the global phase so the largest-magnitude component is real and
/// positive. States that differ only by a global phase canonicalize equal.
JonesState canonical_phase(const JonesState& s);

}  // namespace eraser
