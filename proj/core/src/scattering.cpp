#include "qtd/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace qtd {
namespace {

State step_power(const Propagator& u, const State& s, int sign) {
  State out = sign > 0 ? u.step(s) : u.step_inverse(s);
  check_guard(out);
  return out;
}

// First index k such that inc[k .. k+run-1] are all below tol, or -1.
long first_run(const std::vector<double>& inc, double tol, int run) {
  int count = 0;
  for (std::size_t k = 0; k < inc.size(); ++k) {
    count = inc[k] < tol ? count + 1 : 0;
    if (count == run) return static_cast<long>(k) - run + 1;
  }
  return -1;
}

std::string trace_tail(const std::vector<double>& inc) {
  std::string s;
  const std::size_t from = inc.size() > 5 ? inc.size() - 5 : 0;
  for (std::size_t k = from; k < inc.size(); ++k) s += " " + std::to_string(inc[k]);
  return s;
}

double log_rate(const std::vector<double>& e) {
  // least squares slope of log(entry) over the second half of entries above 1e-300
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = e.size() / 2; k < e.size(); ++k)
    if (e[k] > 1e-300) pts.emplace_back(static_cast<double>(k), std::log(e[k]));
  if (pts.size() < 2) return -std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

WaveResult wave_operator_apply(const ScatteringSystem& sys, const State& phi, int direction) {
  if (direction != 1 && direction != -1) throw std::invalid_argument("direction must be +1 or -1");
  // X_m = U^{sigma m} J U0^{-sigma m} phi with sigma = -direction
  const int sigma = -direction;
  const State pm = as_rep(phi, Rep::momentum);
  WaveResult res;
  long start = -1;
  State a_next = evolve(sys.u0, pm, -sigma);
  State a_cur = pm;
  for (long m = 0; m <= sys.horizon; ++m) {
    const State lhs = step_power(sys.u, sys.apply_j(a_next), sigma);
    const State rhs = sys.apply_j(a_cur);
    res.increments.push_back(norm(as_rep(lhs, Rep::momentum) - as_rep(rhs, Rep::momentum)));
    start = first_run(res.increments, sys.tol_w, sys.consecutive);
    if (start >= 0) break;
    a_cur = a_next;
    a_next = evolve(sys.u0, pm, -sigma * (m + 2));
  }
  if (start < 0)
    throw ConvergenceError("wave operator did not converge within the horizon; last increments:" +
                           trace_tail(res.increments));
  res.n_star = start;
  res.horizon = start + sys.consecutive;
  State x = sys.apply_j(evolve(sys.u0, pm, -sigma * res.horizon));
  for (long k = 0; k < res.horizon; ++k) x = step_power(sys.u, x, sigma);
  res.psi = as_rep(x, Rep::momentum);
  return res;
}

ScatterResult scattering_apply(const ScatteringSystem& sys, const State& phi) {
  ScatterResult res;
  res.incoming = wave_operator_apply(sys, phi, -1);
  State y = *res.incoming.psi;
  long start = -1;
  long m = 0;
  for (; m <= sys.horizon; ++m) {
    const State uy = step_power(sys.u, y, +1);
    const State lhs = sys.apply_j_adjoint(uy);
    const State rhs = sys.u0.power(sys.apply_j_adjoint(y), 1);
    res.increments.push_back(norm(as_rep(lhs, Rep::momentum) - rhs));
    start = first_run(res.increments, sys.tol_w, sys.consecutive);
    y = uy;
    if (start >= 0) break;
  }
  if (start < 0)
    throw ConvergenceError("scattering limit did not converge within the horizon; last increments:" +
                           trace_tail(res.increments));
  res.m_star = start;
  res.horizon = m + 1;
  res.s_phi = evolve(sys.u0, sys.apply_j_adjoint(y), -res.horizon);
  return res;
}

L1Report l1_condition_diagnostic(const ScatteringSystem& sys, const State& phi,
                                 const ScatterResult& sr, long horizon) {
  if (horizon <= 0) horizon = std::max(sr.incoming.horizon, sr.horizon) + 16;
  const State pm = as_rep(phi, Rep::momentum);
  const State& wm = *sr.incoming.psi;
  const State& sphi = *sr.s_phi;
  L1Report rep;
  // W_- U0^n = U^n W_- and W_+ S = W_- on the ranges probed here
  State y = wm;
  for (long n = 0; n <= horizon; ++n) {
    if (n > 0) y = step_power(sys.u, y, -1);
    rep.past.push_back(norm(as_rep(sys.apply_l(-n, y), Rep::momentum) - sys.u0.power(pm, -n)));
  }
  y = wm;
  for (long n = 0; n <= horizon; ++n) {
    if (n > 0) y = step_power(sys.u, y, +1);
    rep.future.push_back(norm(as_rep(sys.apply_l(n, y), Rep::momentum) - sys.u0.power(sphi, n)));
  }
  for (double e : rep.past) rep.past_sum += e;
  for (double e : rep.future) rep.future_sum += e;
  rep.past_rate = log_rate(rep.past);
  rep.future_rate = log_rate(rep.future);
  auto settled = [](const std::vector<double>& e, double rate) { return e.back() < 1e-8 || rate < 0.0; };
  rep.summable = settled(rep.past, rep.past_rate) && settled(rep.future, rep.future_rate);
  return rep;
}

L1Report l1_condition_diagnostic(const ScatteringSystem& sys, const State& phi) {
  return l1_condition_diagnostic(sys, phi, scattering_apply(sys, phi));
}

SMatrixTable fiber_smatrix(const ScatteringSystem& sys, double p_lo, double p_hi, int delta_bins,
                           double tol_s) {
  const Grid& g = sys.u0.grid();
  if (g.dim() != 1 || sys.u0.comps() != 1) throw PreconditionError("fiber extraction needs a 1D scalar model");
  if (!(0.0 < p_lo && p_lo < p_hi)) throw PreconditionError("window must lie inside p > 0");
  if (delta_bins < 2) throw std::invalid_argument("delta_bins must be at least 2");
  const double dp = g.dp();
  const double pad = (2 * delta_bins + 2) * dp;
  const double half = 0.5 * (p_hi - p_lo);
  const double lo = std::max(p_lo - half - pad, 0.5 * p_lo);
  const double hi = p_hi + half + pad;
  if (hi >= g.p_max()) throw PreconditionError("probe window leaves the dual grid");

  WavepacketSpec spec;
  spec.center = {0.0};
  spec.p_lo = {lo};
  spec.p_hi = {hi};
  spec.sigma_p = 0.35 * 0.5 * (hi - lo);
  const State left = make_wavepacket(g, spec);
  spec.p_lo = {-hi};
  spec.p_hi = {-lo};
  const State right = make_wavepacket(g, spec);
  const State sl = *scattering_apply(sys, left).s_phi;
  const State sr = *scattering_apply(sys, right).s_phi;

  SMatrixTable t;
  t.delta_bins = delta_bins;
  const int n = g.n();
  for (int m = n / 2 + 1; m < n; ++m) {
    const double p = g.p(m);
    if (p < p_lo - 2 * delta_bins * dp - 0.5 * dp || p > p_hi + 2 * delta_bins * dp + 0.5 * dp) continue;
    const std::size_t ip = static_cast<std::size_t>(m);
    const std::size_t im = static_cast<std::size_t>(n - m);
    const cplx in_l = left(0, ip);
    const cplx in_r = right(0, im);
    std::array<cplx, 4> b{sl(0, ip) / in_l, sr(0, ip) / in_r, sl(0, im) / in_l, sr(0, im) / in_r};
    // defect of S^dagger S from the identity
    const cplx c00 = std::conj(b[0]) * b[0] + std::conj(b[2]) * b[2];
    const cplx c11 = std::conj(b[1]) * b[1] + std::conj(b[3]) * b[3];
    const cplx c01 = std::conj(b[0]) * b[1] + std::conj(b[2]) * b[3];
    const double defect = std::max({std::abs(c00 - 1.0), std::abs(c11 - 1.0), std::abs(c01)});
    t.max_unitarity_defect = std::max(t.max_unitarity_defect, defect);
    t.index.push_back(ip);
    t.p.push_back(p);
    t.energy.push_back(sys.u0.omega(std::span<const double>(&p, 1)));
    t.block.push_back(b);
  }
  if (t.max_unitarity_defect > tol_s)
    throw FidelityError("extracted S-matrix block not unitary: defect " + std::to_string(t.max_unitarity_defect));
  return t;
}

double ew_expectation_direct(const TimeOperator& t, const State& phi, const State& s_phi) {
  return time_expectation(t, s_phi) - time_expectation(t, phi);
}

double ew_expectation_direct(const ScatteringSystem& sys, const TimeOperator& t, const State& phi) {
  return ew_expectation_direct(t, phi, *scattering_apply(sys, phi).s_phi);
}

FiberEW ew_expectation_fiber(const SMatrixTable& table, const State& phi, double stability) {
  const State pm = as_rep(phi, Rep::momentum);
  const Grid& g = pm.grid();
  if (table.p.empty()) throw PreconditionError("empty S-matrix table");
  const int dl = table.delta_bins;
  const auto [e_min, e_max] = std::minmax_element(table.energy.begin(), table.energy.end());
  if (*e_max - *e_min >= 2.0 * std::numbers::pi)
    throw PreconditionError("window spans a full turn of the quasi-energy: branch is ambiguous");

  auto evaluate = [&](int delta) {
    double acc = 0.0, covered = 0.0;
    for (std::size_t k = static_cast<std::size_t>(delta); k + delta < table.p.size(); ++k) {
      const double w = std::norm(pm(0, table.index[k])) * g.cell(Rep::momentum);
      if (w == 0.0) continue;
      covered += w;
      const auto& up = table.block[k + delta];
      const auto& dn = table.block[k - delta];
      const double de = table.energy[k + delta] - table.energy[k - delta];
      const auto& s = table.block[k];
      // incoming + column: rows (+, -) are entries 0 and 2
      const cplx val = cplx(0.0, -1.0) * (std::conj(s[0]) * (up[0] - dn[0]) + std::conj(s[2]) * (up[2] - dn[2])) / de;
      acc += w * val.real();
    }
    return std::pair{acc, covered};
  };

  const auto [v_full, covered] = evaluate(dl);
  const auto [v_half, covered_half] = evaluate(dl / 2);
  (void)covered_half;
  if (std::abs(norm2(pm) - covered) > 1e-10 * norm2(pm))
    throw PreconditionError("packet support extends beyond the S-matrix table window");
  FiberEW r;
  r.value = v_full;
  r.value_half = v_half;
  r.relative_change = std::abs(v_full - v_half) / std::max(std::abs(v_full), 1e-300);
  r.stable = r.relative_change < stability || std::abs(v_full - v_half) < 1e-9;
  return r;
}

}  // namespace qtd
