#include <cmath>

#include <gtest/gtest.h>

#include "qtd/delay.hpp"

using namespace qtd;

namespace {

State packet(const Grid& g, double x0, double lo, double hi, double sigma) {
  WavepacketSpec s;
  s.center = {x0};
  s.p_lo = {lo};
  s.p_hi = {hi};
  s.sigma_p = sigma;
  return make_wavepacket(g, s);
}

ScatteringSystem defect_system(const Grid& g) {
  const auto u0 = build_free_shift(g, {1.0});
  return ScatteringSystem(u0, build_phase_defect(u0, 0.3, {{0}, {1}, {2}, {3}, {4}}));
}

}  // namespace

TEST(Sojourn, FreeSojournIsPositiveAndGrowsWithR) {
  const Grid g(1, 2048, 1.5);
  const auto lap = build_free_laplacian(g);
  const auto f = make_bump(0.5);
  const State phi = packet(g, 0.0, 0.6, 1.0, 0.02);
  double prev = 0.0;
  for (double r : {16.0, 32.0, 64.0}) {
    const SumResult s = sojourn_free(lap, f, r, phi);
    ASSERT_TRUE(s.conclusive);
    EXPECT_GT(s.value, prev);
    prev = s.value;
  }
}

// Each term of T_2 is ||phi||^2 - ||L_n U^n W_- phi||^2, zero when L_n = 1; the sum only
// accumulates the isometry defect of the computed W_- phi.
TEST(Sojourn, IdentityInjectionHasNoT2) {
  const Grid g(1, 2048, 1.5);
  const auto u0 = build_free_laplacian(g);
  ScatteringSystem sys(u0, build_full_split_step(u0, smooth_well(g, 0.5, 4.0, std::vector<double>{10.0})));
  const auto f = make_bump(0.25);
  const State phi = packet(g, 24.0, 0.6, 1.0, 0.02);
  const auto sr = scattering_apply(sys, phi);
  const SojournRecord rec = sojourn_record(sys, f, 32.0, phi, sr);
  EXPECT_TRUE(rec.conclusive);
  EXPECT_LT(std::abs(rec.t2) / (2.0 * rec.n_max + 1.0), 1e-12);
  EXPECT_GT(rec.t0_phi, 0.0);
  EXPECT_GT(rec.t0_sphi, 0.0);
  EXPECT_GT(rec.t_r1, 0.0);
  EXPECT_NEAR(rec.tau_sym, rec.t_r1 + rec.t2 - 0.5 * (rec.t0_phi + rec.t0_sphi), 1e-12 * rec.t_r1);
  EXPECT_NEAR(rec.elastic, rec.t0_sphi - rec.t0_phi, 1e-12 * rec.t0_phi);
}

TEST(Delay, PhaseDefectHasNoTimeDelay) {
  const Grid g(1, 2048, 1.0);
  const auto sys = defect_system(g);
  const auto f = make_bump(1.0);
  const State phi = packet(g, -20.0, 0.4, 1.2, 0.05);
  for (double r : {32.0, 64.0}) {
    EXPECT_LT(std::abs(tau_sym(sys, f, r, phi)), 1e-8) << r;
    EXPECT_LT(std::abs(tau_nsym(sys, f, r, phi)), 1e-8) << r;
  }
  const auto el = elastic_difference(sys, f, 64.0, phi);
  ASSERT_TRUE(el.has_value());
  EXPECT_LT(std::abs(*el), 1e-8);
  EXPECT_LT(elastic_commutation_defect(sys, phi), 1e-8);
}

TEST(Delay, ElasticDifferenceNeedsOneChannelModel) {
  const Grid g2(2, 64, 1.0);
  const auto lap2 = build_free_laplacian(g2);
  const ScatteringSystem sys2(lap2, as_propagator(lap2));
  WavepacketSpec s;
  s.center = {0.0, 0.0};
  s.p_lo = {0.5, 0.5};
  s.p_hi = {1.0, 1.0};
  EXPECT_FALSE(elastic_difference(sys2, make_bump(1.0), 8.0, make_wavepacket(g2, s)).has_value());
#if defined(QTD_WITH_COINED_WALK)
  const Grid g(1, 256, 1.0);
  const auto walk = build_coined_walk(g, Mat2{1.0, 0.0, 0.0, 1.0});
  const ScatteringSystem sys(walk, as_propagator(walk));
  WavepacketSpec c;
  c.center = {0.0};
  c.p_lo = {0.5};
  c.p_hi = {1.0};
  EXPECT_FALSE(elastic_difference(sys, make_bump(1.0), 8.0, make_wavepacket(g, c, 2)).has_value());
#endif
}

TEST(Delay, StudyValidatesScales) {
  const Grid g(1, 512, 1.0);
  const auto sys = defect_system(g);
  const State phi = packet(g, -20.0, 0.4, 1.2, 0.05);
  EXPECT_THROW(convergence_study(sys, make_bump(1.0), phi, {32.0, 64.0}), std::invalid_argument);
  EXPECT_THROW(convergence_study(sys, make_bump(1.0), phi, {64.0, 32.0, 128.0}), std::invalid_argument);
}

TEST(Delay, DefectStudyPasses) {
  const Grid g(1, 2048, 1.0);
  const auto sys = defect_system(g);
  const State phi = packet(g, -20.0, 0.4, 1.2, 0.05);
  StudyOptions opt;
  opt.tau_abs = 2e-2;
  opt.ew_abs = 2e-6;
  const auto rep = convergence_study(sys, make_bump(1.0), phi, {32.0, 64.0, 128.0}, opt);
  EXPECT_TRUE(rep.conclusive);
  EXPECT_TRUE(rep.pass());
  EXPECT_LT(rep.unitarity_defect, 1e-8);
  EXPECT_LT(rep.commutation_defect, 1e-8);
  ASSERT_EQ(rep.records.size(), 3u);
  ASSERT_EQ(rep.tau_sym_extrapolants.size(), 2u);
}
