#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "gen.hpp"
#include "qtd/localisation.hpp"
#include "qtd/models.hpp"

using namespace qtd;
using qtd::testing::for_all;
using qtd::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

State packet(const Grid& g, double x0, double lo, double hi, double sigma) {
  WavepacketSpec s;
  s.center = {x0};
  s.p_lo = {lo};
  s.p_hi = {hi};
  s.sigma_p = sigma;
  return make_wavepacket(g, s);
}

}  // namespace

TEST(Shift, DispersionAndVelocity) {
  const Grid g(2, 16, 1.0);
  const auto u0 = build_free_shift(g, {1.0, -0.5});
  const std::vector<double> p{0.3, 0.7};
  EXPECT_DOUBLE_EQ(u0.omega(p), 0.3 - 0.35);
  EXPECT_EQ(u0.velocity_at(p), (std::vector<double>{1.0, -0.5}));
  EXPECT_EQ(u0.vprime_scale().value(), 0.0);
  EXPECT_THROW(build_free_shift(g, {0.0, 0.0}), DegenerateModel);
}

TEST(Shift, PowerIsALatticeTranslation) {
  const Grid g(1, 128, 1.0);
  const auto u0 = build_free_shift(g, {1.0});
  Gen gen(5);
  const State s = qtd::testing::random_local_state(g, gen, 10.0);
  const State moved = to_position(u0.power(to_momentum(s), 7));
  for (int i = 0; i + 7 < g.n(); ++i) EXPECT_LT(std::abs(moved(0, i + 7) - s(0, i)), 1e-13);
}

TEST(Laplacian, DispersionAndVelocity) {
  const Grid g(1, 64, 1.0);
  const auto u0 = build_free_laplacian(g);
  const std::vector<double> p{0.8};
  EXPECT_DOUBLE_EQ(u0.omega(p), 0.64);
  EXPECT_DOUBLE_EQ(u0.velocity_at(p)[0], 1.6);
  EXPECT_EQ(u0.vprime_scale().value(), 2.0);
}

// (sin a - sin b)/(2s) with a, b = omega(p +- s) - omega(p) deviates from 2p by O(s^2 + p^3 s^2).
TEST(Velocity, FiniteDifferenceMatchesAnalytic) {
  const Grid g(1, 256, 2.0);
  const auto u0 = build_free_laplacian(g);
  const auto an = velocity_operator(u0, VelocityMethod::analytic);
  const auto fd = velocity_operator(u0, VelocityMethod::finite_difference, 1e-3);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(an.at(0, 0, i) - fd.at(0, 0, i)));
  EXPECT_LT(worst, 1e-5);

  const auto sh = build_free_shift(Grid(1, 256, 1.0), {0.7});
  const auto fd2 = velocity_operator(sh, VelocityMethod::finite_difference, 1e-4);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(fd2.at(0, 0, i), 0.7, 1e-8);
}

#if defined(QTD_WITH_COINED_WALK)

namespace {

const Mat2 kHadamard{1 / std::numbers::sqrt2, 1 / std::numbers::sqrt2, 1 / std::numbers::sqrt2,
                     -1 / std::numbers::sqrt2};

// Eigenphases omega = -arg(lambda) of diag(e^{-ip}, e^{ip}) H from the characteristic polynomial
// lambda^2 - tr lambda + det = 0.
std::array<double, 2> hadamard_phases(double p) {
  const double s = 1 / std::numbers::sqrt2;
  const cplx a = s * std::polar(1.0, -p), b = s * std::polar(1.0, -p);
  const cplx c = s * std::polar(1.0, p), d = -s * std::polar(1.0, p);
  const cplx tr = a + d, det = a * d - b * c;
  const cplx disc = std::sqrt(tr * tr - 4.0 * det);
  return {-std::arg((tr + disc) / 2.0), -std::arg((tr - disc) / 2.0)};
}

double phase_gap(double a, double b) { return std::remainder(a - b, 2 * kPi); }

// Derivatives of both eigenphases by matched centred differences.
std::array<double, 2> hadamard_velocities(double p) {
  const double s = 1e-5;
  const auto m = hadamard_phases(p - s), c = hadamard_phases(p), q = hadamard_phases(p + s);
  std::array<double, 2> out{};
  for (int b = 0; b < 2; ++b) {
    const double up = std::abs(phase_gap(q[0], c[b])) < std::abs(phase_gap(q[1], c[b])) ? q[0] : q[1];
    const double dn = std::abs(phase_gap(m[0], c[b])) < std::abs(phase_gap(m[1], c[b])) ? m[0] : m[1];
    out[b] = phase_gap(up, dn) / (2 * s);
  }
  return out;
}

}  // namespace

TEST(CoinedWalk, IdentityCoinGivesTwoShiftBands) {
  const Grid g(1, 64, 1.0);
  const auto u0 = build_coined_walk(g, Mat2{1.0, 0.0, 0.0, 1.0});
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::array<double, 2> v{u0.velocity(0, i, 0), u0.velocity(0, i, 1)};
    std::sort(v.begin(), v.end());
    EXPECT_NEAR(v[0], -1.0, 1e-12);
    EXPECT_NEAR(v[1], 1.0, 1e-12);
  }
}

TEST(CoinedWalk, HadamardVelocitiesMatchEigenphaseDerivative) {
  const Grid g(1, 4096, 1.0);
  const auto u0 = build_coined_walk(g, kHadamard);
  const auto fd = velocity_operator(u0, VelocityMethod::finite_difference, 1e-4);
  double vmax = 0.0, worst = 0.0, worst_fd = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double p = g.p(static_cast<int>(i));
    auto oracle = hadamard_velocities(p);
    std::array<double, 2> lib{u0.velocity(0, i, 0), u0.velocity(0, i, 1)};
    std::array<double, 2> libfd{fd.at(0, 0, i), fd.at(0, 1, i)};
    std::sort(oracle.begin(), oracle.end());
    std::sort(lib.begin(), lib.end());
    std::sort(libfd.begin(), libfd.end());
    for (int b = 0; b < 2; ++b) {
      worst = std::max(worst, std::abs(lib[b] - oracle[b]));
      worst_fd = std::max(worst_fd, std::abs(libfd[b] - oracle[b]));
      vmax = std::max(vmax, std::abs(lib[b]));
    }
  }
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT(worst_fd, 1e-6);
  EXPECT_NEAR(vmax, 1 / std::numbers::sqrt2, 1e-6);
}

TEST(CoinedWalk, EigenpairsDiagonaliseTheFiber) {
  const Grid g(1, 32, 1.0);
  const auto u0 = build_coined_walk(g, kHadamard);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Mat2 m = u0.fiber(g.p(static_cast<int>(i)));
    const Eigen2& e = u0.eigen(i);
    for (int b = 0; b < 2; ++b) {
      const auto& v = e.vector[b];
      EXPECT_LT(std::abs(m[0] * v[0] + m[1] * v[1] - e.value[b] * v[0]), 1e-13);
      EXPECT_LT(std::abs(m[2] * v[0] + m[3] * v[1] - e.value[b] * v[1]), 1e-13);
      EXPECT_NEAR(std::abs(e.value[b]), 1.0, 1e-14);
    }
  }
}

TEST(CoinedWalk, RejectsNonUnitaryCoin) {
  EXPECT_THROW(build_coined_walk(Grid(1, 16, 1.0), Mat2{1.0, 1.0, 0.0, 1.0}), std::invalid_argument);
}

#endif

TEST(Transport, IdentityHoldsOnRandomPackets) {
  for_all(20, 11, [](Gen& gen) {
    const Grid g(1, 4096, 1.0);
    const auto shift = build_free_shift(g, {gen.uniform(0.5, 1.5)});
    const auto lap = build_free_laplacian(g);
    const State a = make_wavepacket(g, qtd::testing::random_packet(gen, 1, -2.0, 2.0, 0.3, 0.8, 30.0));
    const State b = make_wavepacket(g, qtd::testing::random_packet(gen, 1, 0.3, 1.3, 0.2, 0.4, 30.0));
    for (long n = -16; n <= 16; ++n) {
      EXPECT_LT(transport_identity_residual(shift, a, n), 1e-10);
      EXPECT_LT(transport_identity_residual(lap, b, n), 1e-10);
    }
  });
}

TEST(Transport, TwoDimensionalLaplacian) {
  const Grid g(2, 256, 1.0);
  const auto lap = build_free_laplacian(g);
  WavepacketSpec spec;
  spec.center = {3.0, -5.0};
  spec.p_lo = {0.6, 0.6};
  spec.p_hi = {1.8, 1.8};
  spec.sigma_p = 0.05;
  const State s = make_wavepacket(g, spec);
  for (long n : {-3L, 1L, 4L}) EXPECT_LT(transport_identity_residual(lap, s, n), 1e-10);
}

// Independent transported localisation: a translation for the shift, a chirp conjugation
// (Q + 2nP = e^{-iQ^2/4n} 2nP e^{iQ^2/4n}) for the Laplacian. The lattice chirp is only
// resolved while its local frequency x/2n stays well inside the zone, so the Laplacian
// check uses a fine grid and |n| not too small.
TEST(Transport, LocalisedObservableMatchesIndependentRoute) {
  const auto f = make_bump(1.0);
  const Grid gs(1, 1024, 1.0);
  const auto shift = build_free_shift(gs, {1.0});
  const State a = packet(gs, -20.0, 0.4, 1.2, 0.05);
  for (long n : {-12L, 0L, 5L, 16L}) EXPECT_LT(trotter_transport_check(shift, f, 1.0 / 16.0, n, a), 1e-12);

  const Grid gl(1, 4096, 0.25);
  const auto lap = build_free_laplacian(gl);
  const State b = packet(gl, 0.0, -0.3, 0.3, 0.05);
  for (long n : {-16L, 10L, 16L, 40L}) EXPECT_LT(trotter_transport_check(lap, f, 1.0 / 32.0, n, b), 1e-8) << n;
}

TEST(Critical, ShiftHasNoCriticalValues) {
  const auto u0 = build_free_shift(Grid(1, 128, 1.0), {1.0});
  const auto cs = critical_values(u0, 0.5);
  EXPECT_TRUE(cs.arcs.empty());
  EXPECT_THROW(critical_values(u0, 2.0), DegenerateModel);
}

// Single-covered grid (p_max^2 < 2 pi): every slow point lands in the critical set and the
// images of fast momenta away from the slow band stay outside it.
TEST(Critical, LaplacianSetIsSoundAndTight) {
  const Grid g(1, 512, 1.5);
  ASSERT_LT(g.p_max() * g.p_max(), 2 * kPi);
  const auto u0 = build_free_laplacian(g);
  const double vmin = 0.2;
  const auto cs = critical_values(u0, vmin);
  ASSERT_FALSE(cs.arcs.empty());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double p = g.p(static_cast<int>(i));
    const double angle = wrap(-p * p);
    EXPECT_NEAR(spectral_angle(u0, i), angle, 1e-12);
    if (u0.speed(i) < vmin) EXPECT_TRUE(cs.contains(angle)) << "p = " << p;
    if (std::abs(p) > 0.2) EXPECT_FALSE(cs.contains(angle)) << "p = " << p;
  }
}

TEST(Critical, ArcsBehaveOnTheCircle) {
  const Arc a{6.0, 0.5};  // wraps through 0
  EXPECT_TRUE(a.contains(6.2));
  EXPECT_TRUE(a.contains(0.1));
  EXPECT_FALSE(a.contains(0.3));
  EXPECT_TRUE(a.overlaps(Arc{0.2, 1.0}));
  EXPECT_FALSE(a.overlaps(Arc{1.0, 1.0}));
}

TEST(Admissibility, VelocityFloorAndSlowMass) {
  const Grid g(1, 2048, 1.0);
  const auto lap = build_free_laplacian(g);
  const State fast = packet(g, 0.0, 0.6, 1.0, 0.0);
  const double vf = velocity_floor(lap, fast);
  EXPECT_GT(vf, 1.2);
  EXPECT_LT(vf, 1.25);
  EXPECT_EQ(slow_mass(lap, fast, 1.0), 0.0);
  EXPECT_NO_THROW(check_admissible(lap, fast, 1.0));
  const State slow = packet(g, 0.0, -0.1, 0.3, 0.0);
  EXPECT_GT(slow_mass(lap, slow, 0.3), 0.1);
  EXPECT_THROW(check_admissible(lap, slow, 0.3), DomainError);
}

TEST(Propagator, UnitaryAndInvertible) {
  for_all(6, 21, [](Gen& gen) {
    const Grid g(1, 512, 1.0);
    const auto lap = build_free_laplacian(g);
    const auto w = smooth_well(g, gen.uniform(-1.0, 1.0), gen.uniform(2.0, 8.0), std::vector<double>{gen.uniform(-20, 20)});
    const Propagator u = build_full_split_step(lap, w);
    const State s = qtd::testing::random_local_state(g, gen, 40.0);
    const State one = u.step(s);
    EXPECT_NEAR(norm(one), norm(s), 1e-12 * norm(s));
    EXPECT_LT(norm(as_rep(u.step_inverse(one), Rep::position) - s), 1e-12 * norm(s));
  });
}

TEST(Propagator, ZeroPotentialCollapsesToFreeFactor) {
  const Grid g(1, 256, 1.0);
  const auto lap = build_free_laplacian(g);
  const Propagator u = build_full_split_step(lap, std::vector<double>(g.size(), 0.0));
  EXPECT_EQ(u.factors().size(), 1u);
  const State s = packet(g, 0.0, 0.5, 1.0, 0.1);
  EXPECT_EQ(norm(u.step(s) - lap.power(s, 1)), 0.0);
}

// An even well commutes with parity; so does the Laplacian fiber.
TEST(Propagator, SplitStepRespectsParity) {
  const Grid g(1, 1024, 1.0);
  const auto lap = build_free_laplacian(g);
  const Propagator u = build_full_split_step(lap, smooth_well(g, 0.7, 5.0, std::vector<double>{0.0}));
  const State s = packet(g, 3.0, -0.4, 1.1, 0.05);
  auto parity = [&](const State& x) {
    State p = as_rep(x, Rep::position);
    State out(g, 1, Rep::position);
    for (int i = 1; i < g.n(); ++i) out(0, i) = p(0, g.n() - i);
    out(0, 0) = p(0, 0);
    return out;
  };
  const State lhs = parity(evolve(u, s, 5));
  const State rhs = as_rep(evolve(u, parity(s), 5), Rep::position);
  EXPECT_LT(norm(lhs - rhs), 1e-12);
}

TEST(Propagator, PotentialInGuardBandIsRejected) {
  const Grid g(1, 128, 1.0);
  const auto lap = build_free_laplacian(g);
  std::vector<double> w(g.size(), 0.0);
  w[2] = 0.1;
  EXPECT_THROW(build_full_split_step(lap, w), PreconditionError);
  EXPECT_THROW(build_phase_defect(build_free_shift(g, {1.0}), 0.3, {{63}}), PreconditionError);
}

TEST(Propagator, GuardViolationDuringEvolutionThrows) {
  const Grid g(1, 128, 1.0);
  const auto shift = build_free_shift(g, {1.0});
  const State s = packet(g, 40.0, 0.5, 1.0, 0.1);
  EXPECT_THROW(evolve(shift, s, 40), TruncationError);
}
