#pragma once

#include <vector>

#include "qtd/localisation.hpp"
#include "qtd/models.hpp"

namespace qtd {

// Radial time operator of a scalar fibered model with V' = c * identity.
class TimeOperator {
 public:
  TimeOperator(FiberedPropagator u0, LocalisationFunction f, double v_min);

  const FiberedPropagator& model() const { return u0_; }
  const LocalisationFunction& localisation() const { return f_; }
  double v_min() const { return v_min_; }

 private:
  FiberedPropagator u0_;
  LocalisationFunction f_;
  double v_min_;
};

// -1/2 (Q.V/V^2 + V/|V|.Q|V|^{-1} + i V.(V'^T V)/V^4) phi, momentum represented.
State apply_time_operator(const TimeOperator& t, const State& phi);
double time_expectation(const TimeOperator& t, const State& phi);
// Quadratic form sum_j Re <Q_j phi, (d_j R_f)(V) phi>, built from the gradient of R_f.
double time_form(const TimeOperator& t, const State& phi);
double canonical_commutation_residual(const TimeOperator& t, const FiberedPropagator& u0,
                                      const State& phi, long n);

struct SumResult {
  double value = 0.0;
  double tail = 0.0;
  long n_max = 0;
  bool conclusive = true;
};

// ceil(r(1+w)/v_floor) + 4 sigma_x, widened by the packet offset from the origin.
long auto_n_max(const FiberedPropagator& u0, const LocalisationFunction& f, double r,
                const State& phi);

// <U0^n phi, f(Q/r) U0^n phi> for n in [n_lo, n_hi], guard-checked at each n.
std::vector<double> free_localised_masses(const FiberedPropagator& u0, const LocalisationFunction& f,
                                          double r, const State& phi, long n_lo, long n_hi);

// 1/2 sum_{n=0}^{n_max} <phi, (U0^-n f(Q/r) U0^n - U0^n f(Q/r) U0^-n) phi>; n_max <= 0 selects
// the automatic horizon.
SumResult half_difference_sum(const FiberedPropagator& u0, const LocalisationFunction& f, double r,
                              const State& phi, long n_max = 0, double tail_tol = 1e-9);

// Leading O(1/r) elimination between two scales.
double richardson(double r1, double v1, double r2, double v2);

struct SummationReport {
  std::vector<double> r;
  std::vector<SumResult> sums;
  std::vector<double> extrapolants;  // one per consecutive pair of r
  double extrapolated = 0.0;
  double t_f = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  bool conclusive = true;
};

SummationReport summation_formula_report(const FiberedPropagator& u0, const LocalisationFunction& f,
                                         const State& phi, const std::vector<double>& r_list,
                                         double v_min);

class ConjugateOperator {
 public:
  explicit ConjugateOperator(FiberedPropagator u0);
  const FiberedPropagator& model() const { return u0_; }
  // Pi_j = v_j / (v_j^2 + 1) on the grid
  double pi(int axis, std::size_t idx) const;

 private:
  FiberedPropagator u0_;
};

// A = 1/2 sum_j (Pi_j Q_j + Q_j Pi_j), momentum represented.
State conjugate_apply(const ConjugateOperator& a, const State& phi);

// sum_j v_j^2 / (v_j^2 + 1)
double mourre_multiplier(const FiberedPropagator& u0, std::size_t idx);

struct MourreResult {
  double numeric = 0.0;     // min over probes of <phi, U0^{-1}[A, U0] phi> / ||phi||^2
  double multiplier = 0.0;  // same minimum through the multiplier expectation
  double analytic = 0.0;    // min of the multiplier over grid momenta inside the window
  double route_gap = 0.0;   // max |operator route - multiplier route| over probes
};

MourreResult mourre_bound(const FiberedPropagator& u0, const ConjugateOperator& a, const Arc& window,
                          const std::vector<State>& probes, const CriticalSet& critical);

// sum_{|n| <= n_max} ||f(Q/r)^{1/2} U0^n phi||^2
SumResult smooth_sum(const FiberedPropagator& u0, const LocalisationFunction& f, double r,
                     const State& phi, long n_max = 0, double tail_tol = 1e-9);

}  // namespace qtd
