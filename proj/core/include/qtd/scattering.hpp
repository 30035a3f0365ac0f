#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "qtd/models.hpp"
#include "qtd/timeops.hpp"

namespace qtd {

using StateMap = std::function<State(const State&)>;
using InjectionFamily = std::function<State(long, const State&)>;

// (U0, U, J) with injection family L_n. Empty maps mean J = identity and L_n = J*.
struct ScatteringSystem {
  FiberedPropagator u0;
  Propagator u;
  StateMap j;
  StateMap j_adjoint;
  InjectionFamily l_n;
  double tol_w = 1e-9;
  long horizon = 4000;
  int consecutive = 8;

  ScatteringSystem(FiberedPropagator free, Propagator full) : u0(std::move(free)), u(std::move(full)) {}

  State apply_j(const State& s) const { return j ? j(s) : s; }
  State apply_j_adjoint(const State& s) const { return j_adjoint ? j_adjoint(s) : s; }
  State apply_l(long n, const State& s) const { return l_n ? l_n(n, s) : apply_j_adjoint(s); }
};

struct WaveResult {
  std::optional<State> psi;
  long n_star = 0;    // first step of the run of sub-tolerance increments
  long horizon = 0;   // step at which psi was taken
  std::vector<double> increments;
};

// direction -1: W_- = slim_{n -> -inf} U^{-n} J U0^n, direction +1: W_+.
WaveResult wave_operator_apply(const ScatteringSystem& sys, const State& phi, int direction);

struct ScatterResult {
  std::optional<State> s_phi;
  WaveResult incoming;    // W_- phi
  long m_star = 0;
  long horizon = 0;
  std::vector<double> increments;
};

// S phi = lim_m U0^{-m} J* U^m W_- phi.
ScatterResult scattering_apply(const ScatteringSystem& sys, const State& phi);

struct L1Report {
  std::vector<double> past;    // ||(L_n W_- - 1) U0^n phi||, n = 0, -1, ...
  std::vector<double> future;  // ||(L_n W_+ - 1) U0^n S phi||, n = 0, 1, ...
  double past_sum = 0.0;
  double future_sum = 0.0;
  double past_rate = 0.0;  // fitted log-decay per step over the tail
  double future_rate = 0.0;
  bool summable = true;
};

L1Report l1_condition_diagnostic(const ScatteringSystem& sys, const State& phi,
                                 const ScatterResult& sr, long horizon = 0);
L1Report l1_condition_diagnostic(const ScatteringSystem& sys, const State& phi);

// 2x2 blocks over {p, -p}: rows outgoing (+, -), columns incoming (+, -).
struct SMatrixTable {
  std::vector<std::size_t> index;  // grid index of +p
  std::vector<double> p;
  std::vector<double> energy;  // quasi-energy omega(p), z = e^{-iE}
  std::vector<std::array<cplx, 4>> block;
  int delta_bins = 4;
  double max_unitarity_defect = 0.0;
};

SMatrixTable fiber_smatrix(const ScatteringSystem& sys, double p_lo, double p_hi, int delta_bins = 4,
                           double tol_s = 1e-6);

double ew_expectation_direct(const TimeOperator& t, const State& phi, const State& s_phi);
double ew_expectation_direct(const ScatteringSystem& sys, const TimeOperator& t, const State& phi);

struct FiberEW {
  double value = 0.0;       // step delta_bins
  double value_half = 0.0;  // step delta_bins / 2
  double relative_change = 0.0;
  bool stable = true;
};

// <phi, -i S* dS/dE phi> on a single-branch packet, z = e^{-iE}.
FiberEW ew_expectation_fiber(const SMatrixTable& table, const State& phi, double stability = 1e-2);

}  // namespace qtd
