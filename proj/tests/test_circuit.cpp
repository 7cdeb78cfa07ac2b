#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eraser/circuit.hpp"
#include "eraser/rng.hpp"
#include "oracles.hpp"

using namespace eraser;

namespace {

bool equal_up_to_phase(const JonesState& a, const JonesState& b, double tol) {
  return oracle::states_equal_up_to_phase(a, b, tol);
}

}  // namespace

TEST_CASE("interferometer outputs match their closed forms") {
  const double e0 = 1.7;
  SUBCASE("zero phase") {
    auto [out_a, out_b] = mzi_outputs(0.0, e0);
    const JonesState expect_a{{0.5 * e0, 0.0}, {0.5 * e0, 0.0}, 1.0};  // i(H+V)/2 up to phase
    const JonesState expect_b{{0.5 * e0, 0.0}, {-0.5 * e0, 0.0}, 1.0};
    CHECK(equal_up_to_phase(out_a, expect_a, 1e-12));
    CHECK(equal_up_to_phase(out_b, expect_b, 1e-12));
    // port A literally carries i E0/2 (H + V)
    CHECK(std::abs(out_a.h * out_a.scale - Complex{0.0, 0.5 * e0}) < 1e-12);
    CHECK(std::abs(out_a.v * out_a.scale - Complex{0.0, 0.5 * e0}) < 1e-12);
  }
  SUBCASE("pi phase moves the diagonal state to port B") {
    auto [out_a, out_b] = mzi_outputs(kPi, e0);
    (void)out_a;
    const JonesState expect_b{{0.5 * e0, 0.0}, {0.5 * e0, 0.0}, 1.0};
    CHECK(equal_up_to_phase(out_b, expect_b, 1e-12));
  }
  SUBCASE("general phase") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
      const double phi = (rng.uniform01() - 0.5) * 8.0 * kPi;
      auto [out_a, out_b] = mzi_outputs(phi, e0);
      const Complex ph = std::exp(Complex{0.0, phi});
      const JonesState expect_a{{0.5 * e0, 0.0}, 0.5 * e0 * ph, 1.0};
      const JonesState expect_b{{0.5 * e0, 0.0}, -0.5 * e0 * ph, 1.0};
      CHECK(equal_up_to_phase(out_a, expect_a, 1e-12));
      CHECK(equal_up_to_phase(out_b, expect_b, 1e-12));
    }
  }
}

TEST_CASE("interferometer conserves the input power for every phase") {
  const double i0 = 2.3;
  Rng rng(22);
  for (int t = 0; t < 500; ++t) {
    const double phi = (rng.uniform01() - 0.5) * 8.0 * kPi;
    auto [out_a, out_b] = mzi_outputs(phi, std::sqrt(i0));
    CHECK(std::abs(out_a.intensity() + out_b.intensity() - i0) <= 1e-12 * i0);
  }
}

TEST_CASE("detector amplitudes match the closed forms up to a global phase") {
  Rng rng(23);
  for (int t = 0; t < 500; ++t) {
    const double phi = (rng.uniform01() - 0.5) * 8.0 * kPi;
    const double theta = (rng.uniform01() - 0.5) * 2.0 * kPi;
    const double xi = (rng.uniform01() - 0.5) * 2.0 * kPi;
    const bool with_qwp = rng.uniform01() < 0.5;
    for (int d = 1; d <= 4; ++d) {
      BranchConfig branch{d, with_qwp ? std::optional<double>(xi) : std::nullopt, theta};
      const JonesState got = detector_amplitude(branch, phi, 1.0);
      const JonesState want = oracle::amplitude(d, branch.qwp_xi, theta, phi, 1.0);
      CHECK(equal_up_to_phase(got, want, 1e-12));
    }
  }
}

TEST_CASE("named fringe points from the detector branches") {
  // dark fringe of detector 3 without wave plate
  BranchConfig d3{3, std::nullopt, kPi / 4.0};
  CHECK(detector_amplitude(d3, 0.0).intensity() <= 1e-15);

  // detector 1 with the wave plate at zero sits mid-fringe at phi = 0
  BranchConfig d1{1, 0.0, kPi / 4.0};
  CHECK(detector_intensity(d1, 0.0) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));

  // rotating the plate to 45 degrees turns phi = pi/2 into a dark fringe
  BranchConfig d1_45{1, kPi / 4.0, kPi / 4.0};
  CHECK(detector_intensity(d1_45, kPi / 2.0) <= 1e-15);

  // plain-eraser bright fringe of detector 2 at phi = 0
  BranchConfig d2{2, std::nullopt, kPi / 4.0};
  CHECK(detector_intensity(d2, 0.0) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));

  // wave plate at zero: detector 1 bright and detector 2 dark at phi = pi/2
  BranchConfig d2q{2, 0.0, kPi / 4.0};
  CHECK(detector_intensity(d1, kPi / 2.0) == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
  CHECK(detector_intensity(d2q, kPi / 2.0) <= 1e-15);
}

TEST_CASE("a polarizer at zero kills the fringe term") {
  BranchConfig flat{2, std::nullopt, 0.0};
  for (double phi = -2.0 * kPi; phi <= 2.0 * kPi; phi += 0.1) {
    CHECK(detector_intensity(flat, phi) == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
  }
}

TEST_CASE("compositional intensities match the closed forms over random settings") {
  Rng rng(24);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const double phi = (rng.uniform01() - 0.5) * 8.0 * kPi;
    const double theta = (rng.uniform01() - 0.5) * 2.0 * kPi;
    const double xi = (rng.uniform01() - 0.5) * 2.0 * kPi;
    const int d = 1 + static_cast<int>(rng.uniform01() * 4.0);
    const bool with_qwp = rng.uniform01() < 0.5;
    BranchConfig branch{d, with_qwp ? std::optional<double>(xi) : std::nullopt, theta};
    const double got = detector_intensity(branch, phi, 1.0);
    const double want = oracle::intensity(d, branch.qwp_xi, theta, phi, 1.0);
    worst = std::max(worst, std::abs(got - want));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("the intensity scale rescales nothing but i0") {
  // compositional prefactor equals the closed-form i0/16 normalization
  // exactly: the ratio is 1 for every configuration
  Rng rng(25);
  for (int t = 0; t < 200; ++t) {
    const double phi = (rng.uniform01() - 0.5) * 8.0 * kPi;
    const double i0 = 0.1 + 5.0 * rng.uniform01();
    BranchConfig branch{2, std::nullopt, kPi / 4.0};
    const double unit = detector_intensity(branch, phi, 1.0);
    const double scaled = detector_intensity(branch, phi, i0);
    CHECK(std::abs(scaled - i0 * unit) <= 1e-12 * std::max(1.0, i0));
  }
}

TEST_CASE("detection probabilities form a proper sub-distribution") {
  const EraserConfig plain = EraserConfig::standard();
  const auto at_zero = detection_probabilities(plain, 0.0);
  CHECK(at_zero.detector[0] <= 1e-15);
  CHECK(at_zero.detector[2] <= 1e-15);
  CHECK(at_zero.detector[1] == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
  CHECK(at_zero.detector[3] == doctest::Approx(1.0 / 8.0).epsilon(1e-12));

  for (const EraserConfig& cfg : {EraserConfig::standard(), EraserConfig::with_qwp(0.0),
                                  EraserConfig::with_qwp(kPi / 4.0)}) {
    for (double phi : cfg.phase_grid) {
      const auto probs = detection_probabilities(cfg, phi);
      double sum = 0.0;
      for (double p : probs.detector) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        sum += p;
      }
      CHECK(std::abs(sum - 0.25) <= 1e-12);
      CHECK(std::abs(sum + probs.lost - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("total detected intensity is a quarter of i0 for the plain eraser") {
  EraserConfig cfg = EraserConfig::standard();
  cfg.i0 = 3.0;
  for (double phi : cfg.phase_grid) {
    const auto amps = detector_amplitudes(cfg, phi);
    double total = 0.0;
    for (const auto& a : amps) total += a.intensity();
    CHECK(std::abs(total - cfg.i0 / 4.0) <= 1e-12 * cfg.i0);
  }
}

TEST_CASE("wave plate at zero shifts the fringes by a quarter period") {
  BranchConfig d1_plain{1, std::nullopt, kPi / 4.0};
  BranchConfig d1_qwp{1, 0.0, kPi / 4.0};
  BranchConfig d2_qwp{2, 0.0, kPi / 4.0};
  for (double phi = -2.0 * kPi; phi <= 2.0 * kPi; phi += 0.05) {
    // advanced by +pi/2 on detector 1, retarded on detector 2
    CHECK(std::abs(detector_intensity(d1_qwp, phi) - detector_intensity(d1_plain, phi + kPi / 2.0)) <= 1e-12);
    CHECK(std::abs(detector_intensity(d2_qwp, phi) - detector_intensity(d1_plain, phi - kPi / 2.0)) <= 1e-12);
  }
}

TEST_CASE("rotating the wave plate to 45 degrees swaps the detector 1 and 2 fringes") {
  const EraserConfig q0 = EraserConfig::with_qwp(0.0);
  const EraserConfig q45 = EraserConfig::with_qwp(kPi / 4.0);
  for (double phi : q0.phase_grid) {
    const auto a0 = detector_amplitudes(q0, phi);
    const auto a45 = detector_amplitudes(q45, phi);
    CHECK(std::abs(a45[0].intensity() - a0[1].intensity()) <= 1e-12);
    CHECK(std::abs(a45[1].intensity() - a0[0].intensity()) <= 1e-12);
    // detectors 3 and 4 have no wave plate and stay put
    CHECK(std::abs(a45[2].intensity() - a0[2].intensity()) <= 1e-12);
    CHECK(std::abs(a45[3].intensity() - a0[3].intensity()) <= 1e-12);
  }
}

TEST_CASE("paired detectors stay complementary in every configuration") {
  Rng rng(26);
  for (int t = 0; t < 50; ++t) {
    const double theta = (rng.uniform01() - 0.5) * 2.0 * kPi;
    const bool with_qwp = rng.uniform01() < 0.5;
    const double xi = (rng.uniform01() - 0.5) * 2.0 * kPi;
    EraserConfig cfg = EraserConfig::standard();
    for (auto& b : cfg.branches) {
      b.polarizer_theta = theta;
      if (with_qwp && b.detector_id <= 2) b.qwp_xi = xi;
    }
    double min12 = 1e300, max12 = -1e300, min34 = 1e300, max34 = -1e300;
    for (double phi : cfg.phase_grid) {
      const auto amps = detector_amplitudes(cfg, phi);
      const double s12 = amps[0].intensity() + amps[1].intensity();
      const double s34 = amps[2].intensity() + amps[3].intensity();
      min12 = std::min(min12, s12);
      max12 = std::max(max12, s12);
      min34 = std::min(min34, s34);
      max34 = std::max(max34, s34);
    }
    CHECK(max12 - min12 <= 1e-12);
    CHECK(max34 - min34 <= 1e-12);
  }
}

TEST_CASE("configuration validation rejects malformed setups") {
  EraserConfig cfg = EraserConfig::standard();
  cfg.branches[1].detector_id = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = EraserConfig::standard();
  cfg.phase_grid[5] = cfg.phase_grid[4];
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = EraserConfig::standard();
  cfg.i0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  CHECK_THROWS_AS(default_phase_grid(1), std::invalid_argument);
  CHECK_THROWS_AS(default_phase_grid(10, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(detector_amplitude(BranchConfig{5, std::nullopt, 0.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(EraserConfig::standard().branch(7), std::invalid_argument);
}
