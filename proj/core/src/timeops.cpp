#include "qtd/timeops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "horizon.hpp"

namespace qtd {
namespace {

std::vector<double> f_table(const Grid& g, const LocalisationFunction& f, double r) {
  std::vector<double> tab(g.size());
  std::vector<double> y(g.dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int j = 0; j < g.dim(); ++j) y[j] = g.coord(i, j, Rep::position) / r;
    tab[i] = f(y);
  }
  return tab;
}

std::vector<char> outside_guard(const Grid& g) {
  std::vector<char> out(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.dim(); ++j)
      if (std::abs(g.coord(i, j, Rep::position)) > g.guard_radius()) out[i] = 1;
  return out;
}

long tail_start(long n_max) { return n_max - std::max<long>(1, (n_max + 9) / 10) + 1; }

double speed2(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return s;
}

}  // namespace

TimeOperator::TimeOperator(FiberedPropagator u0, LocalisationFunction f, double v_min)
    : u0_(std::move(u0)), f_(std::move(f)), v_min_(v_min) {
  if (u0_.comps() != 1) throw PreconditionError("time operator requires a scalar fibered model");
  if (!u0_.vprime_scale()) throw PreconditionError("no closed form for V' in this model");
  if (!(v_min > 0.0)) throw std::invalid_argument("v_min must be positive");
}

State apply_time_operator(const TimeOperator& t, const State& phi) {
  if (!t.localisation().radial())
    throw PreconditionError("the closed form time operator needs a radial localisation function");
  const FiberedPropagator& u0 = t.model();
  check_admissible(u0, phi, t.v_min());
  const State pm = as_rep(phi, Rep::momentum);
  const int d = u0.grid().dim();
  const double floor2 = t.v_min() * t.v_min();
  State acc = zeros_like(pm);
  for (int j = 0; j < d; ++j) {
    State a = u0.apply_velocity_function(pm, [&](std::span<const double> v) {
      const double s2 = speed2(v);
      return s2 < floor2 ? 0.0 : v[j] / s2;
    });
    acc += apply_position(a, j);
    State b = u0.apply_velocity_function(pm, [&](std::span<const double> v) {
      const double s2 = speed2(v);
      return s2 < floor2 ? 0.0 : 1.0 / std::sqrt(s2);
    });
    b = apply_position(b, j);
    acc += u0.apply_velocity_function(b, [&](std::span<const double> v) {
      const double s2 = speed2(v);
      return s2 < floor2 ? 0.0 : v[j] / std::sqrt(s2);
    });
  }
  const double c = *u0.vprime_scale();
  if (c != 0.0) {
    // V.(V'^T V) / V^4 = c / V^2 for V' = c * identity
    State third = u0.apply_velocity_function(pm, [&](std::span<const double> v) {
      const double s2 = speed2(v);
      return s2 < floor2 ? 0.0 : c / s2;
    });
    acc += cplx(0.0, 1.0) * third;
  }
  acc *= -0.5;
  return acc;
}

double time_expectation(const TimeOperator& t, const State& phi) {
  const State pm = as_rep(phi, Rep::momentum);
  const State tp = apply_time_operator(t, pm);
  const cplx e = inner(pm, tp);
  if (std::abs(e.imag()) > 1e-9 * std::max(1.0, norm(pm) * norm(tp)))
    throw FidelityError("time operator expectation is not real");
  return e.real();
}

double time_form(const TimeOperator& t, const State& phi) {
  const FiberedPropagator& u0 = t.model();
  check_admissible(u0, phi, t.v_min());
  const State pm = as_rep(phi, Rep::momentum);
  const Grid& g = pm.grid();
  const int d = g.dim();
  const std::size_t np = g.size();
  // (grad R_f)(v(p)) at every populated momentum
  std::vector<double> grad(np * d, 0.0);
  std::vector<double> v(d);
  const double floor2 = t.v_min() * t.v_min();
  for (std::size_t i = 0; i < np; ++i) {
    if (pm(0, i) == cplx(0.0)) continue;
    for (int j = 0; j < d; ++j) v[j] = u0.velocity(j, i);
    if (speed2(v) < floor2) continue;
    const auto gr = grad_averaged_localisation(t.localisation(), v);
    for (int j = 0; j < d; ++j) grad[j * np + i] = gr[j];
  }
  double acc = 0.0;
  for (int j = 0; j < d; ++j) {
    const State q = apply_position(pm, j);
    const State r = multiply(pm, Rep::momentum, [&](std::size_t i) { return cplx(grad[j * np + i]); });
    acc += inner(q, r).real();
  }
  return acc;
}

double canonical_commutation_residual(const TimeOperator& t, const FiberedPropagator& u0,
                                      const State& phi, long n) {
  const State pm = as_rep(phi, Rep::momentum);
  const State un = evolve(u0, pm, n);
  State res = apply_time_operator(t, un);
  res -= u0.power(apply_time_operator(t, pm), n);
  res += cplx(static_cast<double>(n)) * un;
  return norm(res) / norm(pm);
}

long auto_n_max(const FiberedPropagator& u0, const LocalisationFunction& f, double r,
                const State& phi) {
  const double vf = velocity_floor(u0, phi);
  if (!(vf > 0.0) || !std::isfinite(vf)) throw DomainError("packet has no escape velocity");
  const auto mean = mean_position(phi);
  double off = 0.0;
  for (double m : mean) off += m * m;
  off = std::sqrt(off);
  const double sigma = position_spread(phi);
  const double reach = r * (1.0 + f.w());
  const long n1 = static_cast<long>(std::ceil((reach + off + 4.0 * sigma) / vf));
  const long n2 = static_cast<long>(std::ceil(reach / vf) + std::ceil(4.0 * sigma));
  return std::max(n1, n2);
}

std::vector<double> free_localised_masses(const FiberedPropagator& u0, const LocalisationFunction& f,
                                          double r, const State& phi, long n_lo, long n_hi) {
  const Grid& g = u0.grid();
  const auto tab = f_table(g, f, r);
  const auto outside = outside_guard(g);
  const State pm = as_rep(phi, Rep::momentum);
  const double total = norm2(pm);
  const double cell = g.cell(Rep::position);
  const std::size_t np = g.size();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_hi - n_lo + 1));
  for (long n = n_lo; n <= n_hi; ++n) {
    const State ps = to_position(u0.power(pm, n));
    double m = 0.0, leak = 0.0;
    for (int c = 0; c < ps.comps(); ++c) {
      for (std::size_t i = 0; i < np; ++i) {
        const double w = std::norm(ps(c, i));
        m += tab[i] * w;
        if (outside[i]) leak += w;
      }
    }
    if (leak * cell > 1e-10 * total)
      throw TruncationError("free evolution reached the guard band at n=" + std::to_string(n));
    out.push_back(m * cell);
  }
  return out;
}


SumResult half_difference_sum(const FiberedPropagator& u0, const LocalisationFunction& f, double r,
                              const State& phi, long n_max, double tail_tol) {
  if (!(r > 0.0)) throw std::invalid_argument("r must be positive");
  auto sum = [&](long nm) {
    SumResult res;
    res.n_max = nm;
    const auto m = free_localised_masses(u0, f, r, phi, -nm, nm);
    const long t0 = tail_start(nm);
    for (long n = 1; n <= nm; ++n) {
      const double inc = 0.5 * (m[nm + n] - m[nm - n]);
      res.value += inc;
      if (n >= t0) res.tail += std::abs(inc);
    }
    res.conclusive = res.tail <= tail_tol * std::max(1.0, std::abs(res.value));
    return res;
  };
  return detail::with_growing_horizon(n_max, n_max > 0 ? n_max : auto_n_max(u0, f, r, phi), sum);
}

double richardson(double r1, double v1, double r2, double v2) {
  return (r2 * v2 - r1 * v1) / (r2 - r1);
}

SummationReport summation_formula_report(const FiberedPropagator& u0, const LocalisationFunction& f,
                                         const State& phi, const std::vector<double>& r_list,
                                         double v_min) {
  if (r_list.size() < 2) throw std::invalid_argument("summation report needs at least two scales");
  if (!std::is_sorted(r_list.begin(), r_list.end())) throw std::invalid_argument("r_list must ascend");
  const TimeOperator t(u0, f, v_min);
  SummationReport rep;
  rep.t_f = time_expectation(t, phi);
  rep.r = r_list;
  for (double r : r_list) {
    rep.sums.push_back(half_difference_sum(u0, f, r, phi));
    rep.conclusive = rep.conclusive && rep.sums.back().conclusive;
  }
  for (std::size_t k = 0; k + 1 < r_list.size(); ++k)
    rep.extrapolants.push_back(
        richardson(r_list[k], rep.sums[k].value, r_list[k + 1], rep.sums[k + 1].value));
  rep.extrapolated = rep.extrapolants.back();
  rep.abs_error = std::abs(rep.extrapolated - rep.t_f);
  rep.rel_error = rep.abs_error / std::max(std::abs(rep.t_f), std::numeric_limits<double>::min());
  return rep;
}

ConjugateOperator::ConjugateOperator(FiberedPropagator u0) : u0_(std::move(u0)) {
  if (u0_.comps() != 1) throw PreconditionError("conjugate operator requires a scalar fibered model");
}

double ConjugateOperator::pi(int axis, std::size_t idx) const {
  const double v = u0_.velocity(axis, idx);
  return v / (v * v + 1.0);
}

State conjugate_apply(const ConjugateOperator& a, const State& phi) {
  const State pm = as_rep(phi, Rep::momentum);
  State acc = zeros_like(pm);
  for (int j = 0; j < pm.grid().dim(); ++j) {
    auto pij = [&](std::size_t i) { return cplx(a.pi(j, i)); };
    acc += multiply(apply_position(pm, j), Rep::momentum, pij);
    acc += apply_position(multiply(pm, Rep::momentum, pij), j);
  }
  acc *= 0.5;
  return acc;
}

double mourre_multiplier(const FiberedPropagator& u0, std::size_t idx) {
  double s = 0.0;
  for (int j = 0; j < u0.grid().dim(); ++j) {
    const double v2 = u0.velocity(j, idx) * u0.velocity(j, idx);
    s += v2 / (v2 + 1.0);
  }
  return s;
}

MourreResult mourre_bound(const FiberedPropagator& u0, const ConjugateOperator& a, const Arc& window,
                          const std::vector<State>& probes, const CriticalSet& critical) {
  if (critical.overlaps(window)) throw PreconditionError("window touches a critical arc");
  if (probes.empty()) throw std::invalid_argument("no probe states");
  const Grid& g = u0.grid();
  MourreResult res;
  res.analytic = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (window.contains(spectral_angle(u0, i))) res.analytic = std::min(res.analytic, mourre_multiplier(u0, i));
  if (!std::isfinite(res.analytic)) throw PreconditionError("window contains no grid spectral point");
  res.numeric = std::numeric_limits<double>::infinity();
  res.multiplier = std::numeric_limits<double>::infinity();
  for (const State& probe : probes) {
    const State pm = as_rep(probe, Rep::momentum);
    double peak = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) peak = std::max(peak, std::norm(pm(0, i)));
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::norm(pm(0, i)) > 1e-20 * peak && !window.contains(spectral_angle(u0, i)))
        throw PreconditionError("probe is not spectrally localised in the window");
    const double n2 = norm2(pm);
    const State up = u0.power(pm, 1);
    const double op = (inner(up, conjugate_apply(a, up)) - inner(pm, conjugate_apply(a, pm))).real() / n2;
    const double mult =
        inner(pm, multiply(pm, Rep::momentum, [&](std::size_t i) { return cplx(mourre_multiplier(u0, i)); }))
            .real() /
        n2;
    res.numeric = std::min(res.numeric, op);
    res.multiplier = std::min(res.multiplier, mult);
    res.route_gap = std::max(res.route_gap, std::abs(op - mult));
  }
  return res;
}

SumResult smooth_sum(const FiberedPropagator& u0, const LocalisationFunction& f, double r,
                     const State& phi, long n_max, double tail_tol) {
  const Grid& g = u0.grid();
  auto root = f_table(g, f, r);
  for (auto& v : root) v = std::sqrt(v);
  const State pm = as_rep(phi, Rep::momentum);
  auto sum = [&](long nm) {
    SumResult res;
    res.n_max = nm;
    const long t0 = tail_start(nm);
    for (long n = -nm; n <= nm; ++n) {
      const State ps = evolve(u0, pm, n);
      const double term = norm2(multiply(ps, Rep::position, [&](std::size_t i) { return cplx(root[i]); }));
      res.value += term;
      if (std::abs(n) >= t0) res.tail += term;
    }
    res.conclusive = res.tail <= tail_tol * std::max(1.0, res.value);
    return res;
  };
  return detail::with_growing_horizon(n_max, n_max > 0 ? n_max : auto_n_max(u0, f, r, phi), sum);
}

}  // namespace qtd
