#pragma once

#include <optional>
#include <vector>

#include "qtd/scattering.hpp"

namespace qtd {

struct SojournRecord {
  double r = 0.0;
  long n_max = 0;
  double t0_phi = 0.0;    // T_r^0(phi)
  double t0_sphi = 0.0;   // T_r^0(S phi)
  double t_r1 = 0.0;      // T_{r,1}(phi)
  double t2 = 0.0;        // T_2(phi)
  double tail_t0_phi = 0.0;
  double tail_t0_sphi = 0.0;
  double tail_t_r1 = 0.0;
  double hd_phi = 0.0;    // half-difference sums entering tau_free
  double hd_sphi = 0.0;
  double tau_sym = 0.0;
  double tau_nsym = 0.0;
  double tau_free = 0.0;
  double elastic = 0.0;        // T_r^0(S phi) - T_r^0(phi)
  double elastic_proxy = 0.0;  // <S phi, F(V) S phi> - <phi, F(V) phi> with F the lattice sum at nu = 1/r
  bool conclusive = true;
};

struct FullSojourn {
  double t_r1 = 0.0;
  double t2 = 0.0;
  double tail = 0.0;
  long n_max = 0;
};

// T_r^0 = sum_{|n| <= n_max} <U0^n phi, f(Q/r) U0^n phi>
SumResult sojourn_free(const FiberedPropagator& u0, const LocalisationFunction& f, double r,
                       const State& phi, long n_max = 0, double tail_tol = 1e-9);

// T_{r,1} and T_2 along the trajectory U^n W_- phi; phi_norm2 is ||phi||^2.
FullSojourn sojourn_full(const ScatteringSystem& sys, const LocalisationFunction& f, double r,
                         const State& w_minus_phi, double phi_norm2, long n_max);

// tau_free = HD(S phi) - HD(phi), using S* S = 1 on the probed vectors.
double tau_free(const FiberedPropagator& u0, const LocalisationFunction& f, double r, const State& phi,
                const State& s_phi, long n_max);

// Full per-r record from a finished scattering computation.
SojournRecord sojourn_record(const ScatteringSystem& sys, const LocalisationFunction& f, double r,
                             const State& phi, const ScatterResult& sr, double tail_tol = 1e-9);

double tau_sym(const ScatteringSystem& sys, const LocalisationFunction& f, double r, const State& phi);
double tau_nsym(const ScatteringSystem& sys, const LocalisationFunction& f, double r, const State& phi);

// T_r^0(S phi) - T_r^0(phi); empty when the elastic precondition fails.
std::optional<double> elastic_difference(const ScatteringSystem& sys, const LocalisationFunction& f,
                                         double r, const State& phi);

// ||[g(V^2), S] phi|| with g(s) = exp(-s); small for elastic one-channel models.
double elastic_commutation_defect(const ScatteringSystem& sys, const State& phi);

struct StudyOptions {
  double v_min = 0.1;
  double tau_rel = 5e-2;     // tau limits vs EW, relative
  double tau_abs = 0.0;      // absolute floor for the same comparisons
  double ew_rel = 2e-2;      // direct vs fiber EW, relative
  double ew_abs = 5e-4;
  double tol_s = 1e-6;
  int delta_bins = 4;
  double ew_stability = 1e-2;  // fiber EW change under step halving
  bool fiber_route = true;
  double tail_tol = 1e-9;  // sojourn tails relative to max(1, value)
  int threads = 1;
};

struct TimeDelayReport {
  std::vector<SojournRecord> records;
  std::vector<double> tau_sym_extrapolants;
  std::vector<double> tau_nsym_extrapolants;
  std::vector<double> tau_free_extrapolants;
  double tau_sym_limit = 0.0;
  double tau_nsym_limit = 0.0;
  double tau_free_limit = 0.0;
  double ew_direct = 0.0;
  std::optional<FiberEW> ew_fiber;
  double s_slow_mass = 0.0;
  double unitarity_defect = 0.0;  // | ||S phi|| - ||phi|| |
  double commutation_defect = 0.0;  // ||[S, U0] phi||
  double elastic_defect = 0.0;
  long wave_horizon = 0;
  long scatter_horizon = 0;

  bool conclusive = true;
  bool sym_matches_ew = false;
  bool nsym_matches_sym = false;
  bool ew_routes_agree = false;
  bool extrapolation_consistent = false;
  bool elastic_decreasing = false;
  bool free_gap_decreasing = false;
  bool pass() const;
};

TimeDelayReport convergence_study(const ScatteringSystem& sys, const LocalisationFunction& f,
                                  const State& phi, const std::vector<double>& r_list,
                                  const StudyOptions& opt = {});

}  // namespace qtd
