#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "qtd/hilbert.hpp"

using namespace qtd;
using qtd::testing::for_all;
using qtd::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

double max_diff(const State& a, const State& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.amps().size(); ++k) m = std::max(m, std::abs(a.amps()[k] - b.amps()[k]));
  return m;
}

}  // namespace

TEST(Grid, CoordinatesAndDualSpacing) {
  const Grid g(1, 64, 0.5);
  EXPECT_DOUBLE_EQ(g.x(0), -16.0);
  EXPECT_DOUBLE_EQ(g.x(32), 0.0);
  EXPECT_DOUBLE_EQ(g.dp(), 2.0 * kPi / 32.0);
  EXPECT_DOUBLE_EQ(g.p_max(), kPi / 0.5);
  EXPECT_DOUBLE_EQ(g.guard_radius(), 0.9 * 16.0);
  EXPECT_DOUBLE_EQ(g.cell(Rep::position), 0.5);
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(Grid(1, 48, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid(1, 2, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid(0, 64, 1.0), std::invalid_argument);
  EXPECT_THROW(Grid(1, 64, -1.0), std::invalid_argument);
}

TEST(Grid, FlatIndexRoundTrip2D) {
  const Grid g(2, 8, 1.0);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const int a = g.axis_index(idx, 0), b = g.axis_index(idx, 1);
    EXPECT_EQ(static_cast<std::size_t>(a * 8 + b), idx);
    EXPECT_DOUBLE_EQ(g.coord(idx, 1, Rep::momentum), g.p(b));
  }
}

// Continuous transform of a Gaussian: (2 pi s^2)^{-1/4} e^{-(x-a)^2/4s^2} e^{ikx}
// maps to (2 s^2/pi)^{1/4} e^{-(p-k)^2 s^2} e^{-i(p-k)a}.
TEST(Fourier, GaussianPairMatchesClosedForm) {
  const Grid g(1, 512, 0.125);
  const double s = 1.3, a = 2.0, k = 1.5;
  State psi(g, 1, Rep::position);
  for (int i = 0; i < g.n(); ++i) {
    const double x = g.x(i);
    psi(0, i) = std::pow(2 * kPi * s * s, -0.25) * std::exp(-(x - a) * (x - a) / (4 * s * s)) * std::polar(1.0, k * x);
  }
  const State hat = to_momentum(psi);
  double worst = 0.0;
  for (int m = 0; m < g.n(); ++m) {
    const double p = g.p(m);
    const cplx expect =
        std::pow(2 * s * s / kPi, 0.25) * std::exp(-(p - k) * (p - k) * s * s) * std::polar(1.0, -(p - k) * a);
    worst = std::max(worst, std::abs(hat(0, m) - expect));
  }
  EXPECT_LT(worst, 1e-12);
  EXPECT_NEAR(norm(hat), 1.0, 1e-12);
}

TEST(Fourier, UnitaryRoundTripProperty) {
  for_all(12, 101, [](Gen& gen) {
    const int d = gen.integer(1, 2);
    const Grid g(d, d == 1 ? 256 : 32, gen.uniform(0.3, 2.0));
    const State a = qtd::testing::random_local_state(g, gen, 0.3 * g.n() * g.h(), gen.integer(1, 2));
    const State b = qtd::testing::random_local_state(g, gen, 0.3 * g.n() * g.h(), a.comps());
    const State ah = to_momentum(a), bh = to_momentum(b);
    EXPECT_NEAR(norm(ah), norm(a), 1e-12 * norm(a));
    EXPECT_LT(std::abs(inner(ah, bh) - inner(a, b)), 1e-11 * norm(a) * norm(b));
    EXPECT_LT(max_diff(to_position(ah), a), 1e-13 * norm(a));
  });
}

TEST(Fourier, WrongRepresentationIsRejected) {
  const Grid g(1, 16, 1.0);
  State s(g, 1, Rep::momentum);
  EXPECT_THROW(to_momentum(s), RepresentationError);
  EXPECT_THROW(to_position(to_position(s)), RepresentationError);
}

TEST(State, MixingGridsOrRepresentationsThrows) {
  const State a(Grid(1, 16, 1.0), 1, Rep::position);
  const State b(Grid(1, 16, 0.5), 1, Rep::position);
  const State c(Grid(1, 16, 1.0), 1, Rep::momentum);
  EXPECT_THROW((void)inner(a, b), GridMismatch);
  EXPECT_THROW((void)inner(a, c), RepresentationError);
}

TEST(State, PositionOperatorCommutesWithRepresentation) {
  for_all(8, 202, [](Gen& gen) {
    const Grid g(1, 128, 0.7);
    const State s = qtd::testing::random_local_state(g, gen, 20.0);
    const State direct = apply_position(s, 0);
    const State via = as_rep(apply_position(to_momentum(s), 0), Rep::position);
    EXPECT_LT(max_diff(direct, via), 1e-12 * norm(s));
    for (int i = 0; i < g.n(); ++i) EXPECT_EQ(direct(0, i), g.x(i) * s(0, i));
  });
}

TEST(State, MomentsOfGaussian) {
  const Grid g(1, 1024, 0.25);
  const double s = 3.0, a = -7.0;
  State psi(g, 1, Rep::position);
  for (int i = 0; i < g.n(); ++i) psi(0, i) = std::exp(-(g.x(i) - a) * (g.x(i) - a) / (4 * s * s));
  EXPECT_NEAR(mean_position(psi)[0], a, 1e-12);
  EXPECT_NEAR(position_spread(psi), s, 1e-10);
  EXPECT_NEAR(mean_position(to_momentum(psi))[0], a, 1e-10);
}

TEST(Guard, LeakIsMeasuredAndEnforced) {
  const Grid g(1, 64, 1.0);
  State s(g, 1, Rep::position);
  s(0, 32) = 1.0;
  EXPECT_EQ(guard_leak(s), 0.0);
  EXPECT_NO_THROW(check_guard(s));
  s(0, 0) = 1e-3;  // x = -32, outside 0.9 * 32
  EXPECT_NEAR(guard_leak(s), 1e-6 / (1.0 + 1e-6), 1e-15);
  EXPECT_THROW(check_guard(s), TruncationError);
}

TEST(Wavepacket, NormalisedAndSupportedInWindow) {
  for_all(10, 303, [](Gen& gen) {
    const Grid g(1, 1024, 1.0);
    const WavepacketSpec spec = qtd::testing::random_packet(gen, 1, -2.5, 2.5, 0.3, 1.0, 40.0);
    const State phi = make_wavepacket(g, spec);
    EXPECT_EQ(phi.rep(), Rep::momentum);
    EXPECT_NEAR(norm(phi), 1.0, 1e-13);
    for (int m = 0; m < g.n(); ++m)
      if (g.p(m) <= spec.p_lo[0] || g.p(m) >= spec.p_hi[0]) EXPECT_EQ(phi(0, m), cplx(0.0));
    EXPECT_NEAR(window_mass(phi, spec), 1.0, 1e-13);
    EXPECT_NEAR(mean_position(phi)[0], spec.center[0], 1e-8);
  });
}

TEST(Wavepacket, PolarizationSplitsComponents) {
  const Grid g(1, 256, 1.0);
  WavepacketSpec spec;
  spec.center = {0.0};
  spec.p_lo = {0.5};
  spec.p_hi = {1.0};
  spec.polarization = {cplx(3.0), cplx(0.0, 4.0)};
  const State phi = make_wavepacket(g, spec, 2);
  double m0 = 0.0, m1 = 0.0;
  for (int m = 0; m < g.n(); ++m) {
    m0 += std::norm(phi(0, m));
    m1 += std::norm(phi(1, m));
  }
  EXPECT_NEAR(m1 / m0, 16.0 / 9.0, 1e-12);
  EXPECT_NEAR(norm(phi), 1.0, 1e-13);
}

TEST(Wavepacket, InvalidSpecsThrow) {
  const Grid g(1, 64, 1.0);
  WavepacketSpec spec;
  spec.center = {0.0};
  spec.p_lo = {1.0};
  spec.p_hi = {0.5};
  EXPECT_THROW(make_wavepacket(g, spec), std::invalid_argument);
  spec.p_lo = {2.5};
  spec.p_hi = {3.5};
  EXPECT_THROW(make_wavepacket(g, spec), DomainError);
}
