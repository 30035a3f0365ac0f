#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "qtd/delay.hpp"
#include "qtd/errors.hpp"

namespace qtd::cli {
namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* verdict_of(bool ok) { return ok ? "pass" : "fail"; }

struct Context {
  const ExperimentConfig& cfg;
  RunOptions opt;
  Grid grid;
  FiberedPropagator u0;
  LocalisationFunction f;
  std::string model;
  std::optional<ScatteringSystem> sys;
  std::optional<TimeDelayReport> study;

  Context(const ExperimentConfig& c, const RunOptions& o)
      : cfg(c), opt(o), grid(c.grid.d, c.grid.n, c.grid.h, c.grid.guard_fraction), u0(build_model(c, grid)),
        f(make_bump(c.w)), model(u0.label()) {}

  static FiberedPropagator build_model(const ExperimentConfig& c, const Grid& g) {
    if (c.model.kind == "shift") return build_free_shift(g, c.model.velocity);
    if (c.model.kind == "laplacian") return build_free_laplacian(g);
#if defined(QTD_WITH_COINED_WALK)
    const double s = 1.0 / std::numbers::sqrt2;
    const Mat2 coin = c.model.coin == "hadamard" ? Mat2{s, s, s, -s} : Mat2{1.0, 0.0, 0.0, 1.0};
    return build_coined_walk(g, coin);
#else
    throw ConfigError("this build has no coined walk model");
#endif
  }

  bool scalar() const { return u0.comps() == 1; }

  State packet() const { return make_wavepacket(grid, cfg.state, u0.comps()); }

  const ScatteringSystem& system() {
    if (!sys) {
      Propagator u = as_propagator(u0);
      if (cfg.model.well)
        u = build_full_split_step(u0, smooth_well(grid, cfg.model.well->depth, cfg.model.well->width,
                                                  cfg.model.well->center));
      else if (cfg.model.defect)
        u = build_phase_defect(u0, cfg.model.defect->theta, cfg.model.defect->sites);
      sys.emplace(u0, std::move(u));
      sys->tol_w = cfg.tol.tol_w;
      sys->horizon = cfg.tol.horizon;
    }
    return *sys;
  }

  const TimeDelayReport& delay_study() {
    if (!study) {
      StudyOptions so;
      so.v_min = cfg.tol.v_min;
      so.tau_rel = cfg.tol.tau_rel;
      so.tau_abs = cfg.tol.tau_abs;
      so.ew_rel = cfg.tol.ew_rel;
      so.ew_abs = cfg.tol.ew_abs;
      so.tol_s = cfg.tol.tol_s;
      so.delta_bins = cfg.tol.delta_bins;
      so.ew_stability = cfg.tol.ew_stability;
      so.tail_tol = cfg.tol.tail;
      so.threads = opt.threads;
      study = convergence_study(system(), f, packet(), cfg.r_list, so);
    }
    return *study;
  }
};

// Random admissible momentum boxes: one sign per axis, speeds bounded away from zero.
struct Box {
  std::vector<double> lo, hi;
};

class ProbeSource {
 public:
  ProbeSource(const Context& ctx, std::uint64_t seed, std::uint64_t stream) : ctx_(ctx), rng_(seed ^ (stream * 0x9e3779b97f4a7c15ULL)) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }

  Box box() {
    Box b;
    const double pm = ctx_.grid.p_max();
    for (int j = 0; j < ctx_.grid.dim(); ++j) {
      double lo, hi;
      if (ctx_.cfg.model.kind == "shift") {
        lo = uniform(-0.5 * pm, 0.3 * pm);
        hi = lo + uniform(0.15, 0.3) * pm;
      } else {
        // |p| in [0.4, 1.0] keeps the Laplacian speed above 0.8
        lo = uniform(0.4, 0.75);
        hi = lo + uniform(0.15, 0.25);
        if (uniform(0.0, 1.0) < 0.5) {
          const double t = lo;
          lo = -hi;
          hi = -t;
        }
      }
      b.lo.push_back(lo);
      b.hi.push_back(hi);
    }
    return b;
  }

  WavepacketSpec spec(const Box& b, double center_range) {
    WavepacketSpec s;
    s.p_lo = b.lo;
    s.p_hi = b.hi;
    for (int j = 0; j < ctx_.grid.dim(); ++j) s.center.push_back(uniform(-center_range, center_range));
    double narrow = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.lo.size(); ++j) narrow = std::min(narrow, b.hi[j] - b.lo[j]);
    // a narrow envelope keeps the position tails of the compact profile negligible
    s.sigma_p = uniform(0.04, 0.06) * narrow;
    return s;
  }

  State packet(double center_range) { return make_wavepacket(ctx_.grid, spec(box(), center_range)); }

 private:
  const Context& ctx_;
  std::mt19937_64 rng_;
};

Row row(const Context& c, const std::string& suite, std::optional<double> r, const std::string& q, double v,
        std::optional<double> tail, const std::string& verdict) {
  return Row{suite, c.model, r, q, v, tail, verdict};
}

SuiteOutcome skipped(const std::string& name, const std::string& why) {
  SuiteOutcome o;
  o.name = name;
  o.verdict = "skipped";
  o.note = why;
  o.details = json{{"reason", why}};
  return o;
}

SuiteOutcome transport_identity(Context& c) {
  const std::string name = "transport_identity";
  if (!c.scalar()) return skipped(name, "transport identity is checked on scalar models");
  ProbeSource src(c, c.cfg.seed, 1);
  SuiteOutcome o{name, "", "", json::object(), {}, 0.0};
  double worst = 0.0;
  json per = json::array();
  for (int k = 0; k < c.cfg.probes; ++k) {
    const State phi = src.packet(20.0);
    double m = 0.0;
    for (long n = -c.cfg.max_shift; n <= c.cfg.max_shift; ++n) m = std::max(m, transport_identity_residual(c.u0, phi, n));
    per.push_back(m);
    worst = std::max(worst, m);
  }
  const bool ok = worst <= c.cfg.tol.transport;
  o.verdict = verdict_of(ok);
  o.details = {{"max_residual", worst}, {"per_probe", per}, {"tolerance", c.cfg.tol.transport}, {"max_shift", c.cfg.max_shift}};
  o.rows.push_back(row(c, name, std::nullopt, "max_residual", worst, std::nullopt, o.verdict));
  return o;
}

SuiteOutcome canonical_commutation(Context& c) {
  const std::string name = "canonical_commutation";
  if (!c.scalar() || !c.u0.vprime_scale()) return skipped(name, "time operator needs a scalar model with constant V'");
  ProbeSource src(c, c.cfg.seed, 2);
  const TimeOperator t(c.u0, c.f, c.cfg.tol.v_min);
  SuiteOutcome o{name, "", "", json::object(), {}, 0.0};
  double worst = 0.0;
  json per = json::array();
  for (int k = 0; k < c.cfg.probes; ++k) {
    const State phi = src.packet(20.0);
    double m = 0.0;
    for (long n = -c.cfg.max_shift; n <= c.cfg.max_shift; ++n)
      m = std::max(m, canonical_commutation_residual(t, c.u0, phi, n));
    per.push_back(m);
    worst = std::max(worst, m);
  }
  const bool ok = worst <= c.cfg.tol.canonical;
  o.verdict = verdict_of(ok);
  o.details = {{"max_residual", worst}, {"per_probe", per}, {"tolerance", c.cfg.tol.canonical}};
  o.rows.push_back(row(c, name, std::nullopt, "max_residual", worst, std::nullopt, o.verdict));
  return o;
}

SuiteOutcome summation_formula(Context& c) {
  const std::string name = "summation_formula";
  if (!c.scalar() || !c.u0.vprime_scale()) return skipped(name, "time operator needs a scalar model with constant V'");
  const State phi = make_wavepacket(c.grid, c.cfg.summation_state.value_or(c.cfg.state));
  const SummationReport rep = summation_formula_report(c.u0, c.f, phi, c.cfg.r_list, c.cfg.tol.v_min);
  SuiteOutcome o{name, "", "", json::object(), {}, 0.0};
  const double tol = c.cfg.tol.summation_rel * std::abs(rep.t_f);
  const bool ok = rep.abs_error <= tol;
  o.verdict = !rep.conclusive ? "inconclusive" : verdict_of(ok);
  json sums = json::array();
  for (std::size_t k = 0; k < rep.r.size(); ++k) {
    const SumResult& s = rep.sums[k];
    sums.push_back({{"r", rep.r[k]}, {"value", s.value}, {"tail", s.tail}, {"n_max", s.n_max}, {"conclusive", s.conclusive}});
    o.rows.push_back(row(c, name, rep.r[k], "half_difference_sum", s.value, s.tail, "info"));
    o.rows.push_back(row(c, name, rep.r[k], "n_max", static_cast<double>(s.n_max), std::nullopt, "info"));
  }
  for (std::size_t k = 0; k < rep.extrapolants.size(); ++k)
    o.rows.push_back(row(c, name, rep.r[k + 1], "extrapolant", rep.extrapolants[k], std::nullopt, "info"));
  o.rows.push_back(row(c, name, std::nullopt, "extrapolated", rep.extrapolated, std::nullopt, o.verdict));
  o.rows.push_back(row(c, name, std::nullopt, "time_form", rep.t_f, std::nullopt, "info"));
  o.rows.push_back(row(c, name, std::nullopt, "rel_error", rep.rel_error, std::nullopt, o.verdict));
  o.details = {{"sums", sums},          {"extrapolants", rep.extrapolants}, {"extrapolated", rep.extrapolated},
               {"time_form", rep.t_f},  {"abs_error", rep.abs_error},       {"rel_error", rep.rel_error},
               {"tolerance_rel", c.cfg.tol.summation_rel}, {"conclusive", rep.conclusive}};
  return o;
}

// Quasi-energy arc covered by a momentum box on which omega is monotone per axis.
std::optional<Arc> box_arc(const FiberedPropagator& u0, const Box& b) {
  const int d = static_cast<int>(b.lo.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::vector<double> p(d);
  for (int corner = 0; corner < (1 << d); ++corner) {
    for (int j = 0; j < d; ++j) p[j] = (corner >> j) & 1 ? b.hi[j] : b.lo[j];
    const double w = u0.omega(p);
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  const double margin = 1e-9;
  if (hi - lo + 2 * margin >= kTwoPi) return std::nullopt;
  // angle of e^{-i omega}
  double start = std::fmod(-hi - margin, kTwoPi);
  if (start < 0.0) start += kTwoPi;
  return Arc{start, hi - lo + 2 * margin};
}

SuiteOutcome mourre(Context& c) {
  const std::string name = "mourre_bound";
  if (!c.scalar()) return skipped(name, "windows are generated for scalar models");
  ProbeSource src(c, c.cfg.seed, 3);
  const ConjugateOperator a(c.u0);
  const CriticalSet crit = critical_values(c.u0, c.cfg.tol.v_min);
  SuiteOutcome o{name, "", "", json::object(), {}, 0.0};
  bool ok = true;
  json wins = json::array();
  int made = 0;
  for (int attempt = 0; made < c.cfg.windows && attempt < 50 * c.cfg.windows; ++attempt) {
    const Box b = src.box();
    const auto arc = box_arc(c.u0, b);
    if (!arc || crit.overlaps(*arc)) continue;
    std::vector<State> probes;
    for (int k = 0; k < 3; ++k) {
      Box inner = b;
      for (std::size_t j = 0; j < b.lo.size(); ++j) {
        const double width = b.hi[j] - b.lo[j];
        inner.lo[j] = b.lo[j] + src.uniform(0.02, 0.4) * width;
        inner.hi[j] = b.hi[j] - src.uniform(0.02, 0.4) * width;
      }
      probes.push_back(make_wavepacket(c.grid, src.spec(inner, 10.0)));
    }
    const MourreResult m = mourre_bound(c.u0, a, *arc, probes, crit);
    const bool w_ok = m.numeric >= m.analytic - c.cfg.tol.mourre_slack;
    ok = ok && w_ok;
    wins.push_back({{"arc_start", arc->start}, {"arc_length", arc->length}, {"numeric", m.numeric},
                    {"multiplier", m.multiplier}, {"analytic", m.analytic}, {"route_gap", m.route_gap},
                    {"verdict", verdict_of(w_ok)}});
    o.rows.push_back(row(c, name, std::nullopt, "window" + std::to_string(made) + ".numeric", m.numeric, std::nullopt, verdict_of(w_ok)));
    o.rows.push_back(row(c, name, std::nullopt, "window" + std::to_string(made) + ".analytic", m.analytic, std::nullopt, "info"));
    ++made;
  }
  if (made < c.cfg.windows) {
    o.verdict = "inconclusive";
    o.note = "could not place enough admissible windows";
  } else {
    o.verdict = verdict_of(ok);
  }
  o.details = {{"windows", wins}, {"slack", c.cfg.tol.mourre_slack}, {"critical_arcs", crit.arcs.size()}};
  return o;
}

SuiteOutcome local_smoothness(Context& c) {
  const std::string name = "local_smoothness";
  if (!c.scalar()) return skipped(name, "checked on scalar models");
  ProbeSource src(c, c.cfg.seed, 4);
  SuiteOutcome o{name, "", "", json::object(), {}, 0.0};
  const double r = c.cfg.r_list.front();
  const int count = std::min(c.cfg.probes, 5);
  bool ok = true, conclusive = true;
  json per = json::array();
  for (int k = 0; k < count; ++k) {
    const State phi = src.packet(10.0);
    const double vf = velocity_floor(c.u0, phi);
    const SumResult a = smooth_sum(c.u0, c.f, r, phi, 0, c.cfg.tol.tail);
    const SumResult b = smooth_sum(c.u0, c.f, r, phi, 2 * a.n_max, c.cfg.tol.tail);
    const double rel = std::abs(b.value - a.value) / std::abs(b.value);
    const bool p_ok = rel <= c.cfg.tol.smooth_rel && vf >= 0.2;
    ok = ok && p_ok;
    conclusive = conclusive && a.conclusive;
    per.push_back({{"velocity_floor", vf}, {"value", a.value}, {"value_doubled", b.value}, {"n_max", a.n_max},
                   {"tail", a.tail}, {"relative_change", rel}});
    o.rows.push_back(row(c, name, r, "probe" + std::to_string(k) + ".smooth_sum", a.value, a.tail, "info"));
    o.rows.push_back(row(c, name, r, "probe" + std::to_string(k) + ".relative_change", rel, std::nullopt, verdict_of(p_ok)));
  }
  o.verdict = !conclusive ? "inconclusive" : verdict_of(ok);
  o.details = {{"r", r}, {"probes", per}, {"tolerance_rel", c.cfg.tol.smooth_rel}};
  return o;
}

SuiteOutcome scattering_sanity(Context& c) {
  const std::string name = "scattering_sanity";
  const ScatteringSystem& sys = c.system();
  const State phi = as_rep(c.packet(), Rep::momentum);
  SuiteOutcome o{name, "", "", json::object(), {}, 0.0};
  const WaveResult wm = wave_operator_apply(sys, phi, -1);
  const WaveResult wp = wave_operator_apply(sys, phi, +1);
  const double iso_m = std::abs(norm(*wm.psi) - norm(phi));
  const double iso_p = std::abs(norm(*wp.psi) - norm(phi));
  const double intertwine =
      norm(as_rep(sys.u.step(*wm.psi), Rep::momentum) - *wave_operator_apply(sys, c.u0.power(phi, 1), -1).psi);
  const ScatterResult sr = scattering_apply(sys, phi);
  const double comm = norm(*scattering_apply(sys, c.u0.power(phi, 1)).s_phi - c.u0.power(*sr.s_phi, 1));
  const double unit = std::abs(norm(*sr.s_phi) - norm(phi));
  ScatteringSystem free_sys(c.u0, as_propagator(c.u0));
  free_sys.tol_w = sys.tol_w;
  free_sys.horizon = sys.horizon;
  const double s_free = norm(*scattering_apply(free_sys, phi).s_phi - phi);
  const L1Report l1 = l1_condition_diagnostic(sys, phi, sr);

  const bool iso_ok = iso_m <= c.cfg.tol.isometry && iso_p <= c.cfg.tol.isometry;
  const bool comm_ok = comm <= c.cfg.tol.commutation;
  const bool inter_ok = intertwine <= 10.0 * sys.tol_w;
  const bool free_ok = s_free <= c.cfg.tol.identity_s;
  o.verdict = verdict_of(iso_ok && comm_ok && inter_ok && free_ok);
  o.rows = {row(c, name, std::nullopt, "isometry_defect_minus", iso_m, std::nullopt, verdict_of(iso_m <= c.cfg.tol.isometry)),
            row(c, name, std::nullopt, "isometry_defect_plus", iso_p, std::nullopt, verdict_of(iso_p <= c.cfg.tol.isometry)),
            row(c, name, std::nullopt, "intertwining_defect", intertwine, std::nullopt, verdict_of(inter_ok)),
            row(c, name, std::nullopt, "commutation_defect", comm, std::nullopt, verdict_of(comm_ok)),
            row(c, name, std::nullopt, "unitarity_defect", unit, std::nullopt, "info"),
            row(c, name, std::nullopt, "free_s_residual", s_free, std::nullopt, verdict_of(free_ok)),
            row(c, name, std::nullopt, "l1_past_sum", l1.past_sum, std::nullopt, l1.summable ? "info" : "fail"),
            row(c, name, std::nullopt, "l1_future_sum", l1.future_sum, std::nullopt, l1.summable ? "info" : "fail")};
  o.details = {{"isometry_defect_minus", iso_m}, {"isometry_defect_plus", iso_p}, {"intertwining_defect", intertwine},
               {"commutation_defect", comm},     {"unitarity_defect", unit},    {"free_s_residual", s_free},
               {"wave_minus_horizon", wm.horizon}, {"wave_plus_horizon", wp.horizon}, {"scatter_horizon", sr.horizon},
               {"l1", {{"past_sum", l1.past_sum}, {"future_sum", l1.future_sum}, {"past_rate", l1.past_rate},
                       {"future_rate", l1.future_rate}, {"summable", l1.summable}}}};
  return o;
}

json record_json(const SojournRecord& r) {
  return {{"r", r.r},
          {"n_max", r.n_max},
          {"t0_phi", r.t0_phi},
          {"t0_sphi", r.t0_sphi},
          {"t_r1", r.t_r1},
          {"t2", r.t2},
          {"tail_t0_phi", r.tail_t0_phi},
          {"tail_t0_sphi", r.tail_t0_sphi},
          {"tail_t_r1", r.tail_t_r1},
          {"hd_phi", r.hd_phi},
          {"hd_sphi", r.hd_sphi},
          {"tau_sym", r.tau_sym},
          {"tau_nsym", r.tau_nsym},
          {"tau_free", r.tau_free},
          {"elastic", r.elastic},
          {"elastic_proxy", r.elastic_proxy},
          {"conclusive", r.conclusive}};
}

json study_json(const TimeDelayReport& rep) {
  json recs = json::array();
  for (const auto& r : rep.records) recs.push_back(record_json(r));
  json out = {{"records", recs},
              {"tau_sym_extrapolants", rep.tau_sym_extrapolants},
              {"tau_nsym_extrapolants", rep.tau_nsym_extrapolants},
              {"tau_free_extrapolants", rep.tau_free_extrapolants},
              {"tau_sym_limit", rep.tau_sym_limit},
              {"tau_nsym_limit", rep.tau_nsym_limit},
              {"tau_free_limit", rep.tau_free_limit},
              {"ew_direct", rep.ew_direct},
              {"s_slow_mass", rep.s_slow_mass},
              {"unitarity_defect", rep.unitarity_defect},
              {"commutation_defect", rep.commutation_defect},
              {"elastic_defect", rep.elastic_defect},
              {"wave_horizon", rep.wave_horizon},
              {"scatter_horizon", rep.scatter_horizon},
              {"conclusive", rep.conclusive},
              {"sym_matches_ew", rep.sym_matches_ew},
              {"nsym_matches_sym", rep.nsym_matches_sym},
              {"ew_routes_agree", rep.ew_routes_agree},
              {"extrapolation_consistent", rep.extrapolation_consistent},
              {"elastic_decreasing", rep.elastic_decreasing},
              {"free_gap_decreasing", rep.free_gap_decreasing}};
  if (rep.ew_fiber)
    out["ew_fiber"] = {{"value", rep.ew_fiber->value},
                       {"value_half", rep.ew_fiber->value_half},
                       {"relative_change", rep.ew_fiber->relative_change},
                       {"stable", rep.ew_fiber->stable}};
  return out;
}

void record_rows(const Context& c, const std::string& suite, const SojournRecord& r, std::vector<Row>& rows) {
  auto add = [&](const char* q, double v, std::optional<double> tail) {
    rows.push_back(row(c, suite, r.r, q, v, tail, "info"));
  };
  add("n_max", static_cast<double>(r.n_max), std::nullopt);
  add("t0_phi", r.t0_phi, r.tail_t0_phi);
  add("t0_sphi", r.t0_sphi, r.tail_t0_sphi);
  add("t_r1", r.t_r1, r.tail_t_r1);
  add("t2", r.t2, std::nullopt);
  add("tau_sym", r.tau_sym, std::max({r.tail_t0_phi, r.tail_t0_sphi, r.tail_t_r1}));
  add("tau_nsym", r.tau_nsym, std::max(r.tail_t0_phi, r.tail_t_r1));
  add("tau_free", r.tau_free, std::nullopt);
}

SuiteOutcome time_delay(Context& c) {
  const std::string name = "time_delay";
  const TimeDelayReport& rep = c.delay_study();
  SuiteOutcome o{name, "", "", study_json(rep), {}, 0.0};
  const bool ok = rep.sym_matches_ew && rep.ew_routes_agree;
  o.verdict = !rep.conclusive ? "inconclusive" : verdict_of(ok);
  for (const auto& r : rep.records) record_rows(c, name, r, o.rows);
  for (std::size_t k = 0; k < rep.tau_sym_extrapolants.size(); ++k)
    o.rows.push_back(row(c, name, rep.records[k + 1].r, "tau_sym_extrapolant", rep.tau_sym_extrapolants[k], std::nullopt, "info"));
  o.rows.push_back(row(c, name, std::nullopt, "tau_sym_limit", rep.tau_sym_limit, std::nullopt, verdict_of(rep.sym_matches_ew)));
  o.rows.push_back(row(c, name, std::nullopt, "tau_free_limit", rep.tau_free_limit, std::nullopt, "info"));
  o.rows.push_back(row(c, name, std::nullopt, "ew_direct", rep.ew_direct, std::nullopt, "info"));
  if (rep.ew_fiber) {
    o.rows.push_back(row(c, name, std::nullopt, "ew_fiber", rep.ew_fiber->value, std::nullopt, verdict_of(rep.ew_routes_agree)));
    o.rows.push_back(row(c, name, std::nullopt, "ew_fiber_half_step", rep.ew_fiber->value_half, std::nullopt, rep.ew_fiber->stable ? "info" : "fail"));
  }
  o.rows.push_back(row(c, name, std::nullopt, "s_slow_mass", rep.s_slow_mass, std::nullopt, "info"));
  return o;
}

SuiteOutcome elastic_equality(Context& c) {
  const std::string name = "elastic_equality";
  if (!c.scalar() || c.grid.dim() != 1) return skipped(name, "elastic identity is stated for 1D scalar models");
  const TimeDelayReport& rep = c.delay_study();
  SuiteOutcome o{name, "", "", json::object(), {}, 0.0};
  const bool elastic = rep.elastic_defect <= 10.0 * c.cfg.tol.tol_w;
  const bool ok = elastic && rep.nsym_matches_sym && rep.elastic_decreasing;
  o.verdict = !rep.conclusive ? "inconclusive" : verdict_of(ok);
  json diffs = json::array();
  for (const auto& r : rep.records) {
    diffs.push_back({{"r", r.r}, {"elastic", r.elastic}, {"elastic_proxy", r.elastic_proxy}, {"tau_nsym", r.tau_nsym}});
    o.rows.push_back(row(c, name, r.r, "elastic_difference", r.elastic, std::max(r.tail_t0_phi, r.tail_t0_sphi), "info"));
    o.rows.push_back(row(c, name, r.r, "elastic_proxy", r.elastic_proxy, std::nullopt, "info"));
  }
  for (std::size_t k = 0; k < rep.tau_nsym_extrapolants.size(); ++k)
    o.rows.push_back(row(c, name, rep.records[k + 1].r, "tau_nsym_extrapolant", rep.tau_nsym_extrapolants[k], std::nullopt, "info"));
  o.rows.push_back(row(c, name, std::nullopt, "tau_nsym_limit", rep.tau_nsym_limit, std::nullopt, verdict_of(rep.nsym_matches_sym)));
  o.rows.push_back(row(c, name, std::nullopt, "elastic_commutation_defect", rep.elastic_defect, std::nullopt, verdict_of(elastic)));
  o.details = {{"differences", diffs},
               {"tau_nsym_limit", rep.tau_nsym_limit},
               {"tau_sym_limit", rep.tau_sym_limit},
               {"elastic_commutation_defect", rep.elastic_defect},
               {"elastic_decreasing", rep.elastic_decreasing},
               {"nsym_matches_sym", rep.nsym_matches_sym}};
  return o;
}

using SuiteFn = SuiteOutcome (*)(Context&);

SuiteFn suite_fn(const std::string& name) {
  if (name == "transport_identity") return transport_identity;
  if (name == "canonical_commutation") return canonical_commutation;
  if (name == "summation_formula") return summation_formula;
  if (name == "mourre_bound") return mourre;
  if (name == "local_smoothness") return local_smoothness;
  if (name == "scattering_sanity") return scattering_sanity;
  if (name == "time_delay") return time_delay;
  if (name == "elastic_equality") return elastic_equality;
  throw ConfigError("unknown suite '" + name + "'");
}

}  // namespace

const std::vector<SuiteInfo>& suite_catalog() {
  static const std::vector<SuiteInfo> cat = {
      {"transport_identity", "Lemma lemma_V(c)", "U0^-n Q U0^n phi = (Q + nV) phi on random packets"},
      {"canonical_commutation", "Lemma lemma_canonical(a)", "T_f U0^n phi = (U0^n T_f - n U0^n) phi"},
      {"summation_formula", "Theorem thm_summation", "half-difference sojourn sums converge to <phi, T_f phi>"},
      {"mourre_bound", "Lemma lemma_Mourre", "U0^-1 [A, U0] bounded below on admissible windows"},
      {"local_smoothness", "Theorem thm_spectrum(b)", "sum_n ||f(Q/r)^1/2 U0^n phi||^2 finite and stable"},
      {"scattering_sanity", "Assumption ass_wave", "wave operator isometry, intertwining, [S, U0] = 0"},
      {"time_delay", "Theorem thm_sym", "symmetrised time delay equals the Eisenbud-Wigner expectation"},
      {"elastic_equality", "Theorem thm_non_sym", "non-symmetrised delay equals the symmetrised one"},
  };
  return cat;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& suite_groups() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"identities", {"transport_identity", "canonical_commutation"}},
      {"summation", {"summation_formula", "local_smoothness"}},
      {"mourre", {"mourre_bound"}},
      {"delay", {"scattering_sanity", "time_delay", "elastic_equality"}},
  };
  return groups;
}

std::vector<std::string> resolve_suites(const std::string& selection) {
  if (selection == "all") {
    std::vector<std::string> out;
    for (const auto& s : suite_catalog()) out.emplace_back(s.name);
    return out;
  }
  for (const auto& [group, members] : suite_groups())
    if (group == selection) return members;
  for (const auto& s : suite_catalog())
    if (selection == s.name) return {selection};
  throw ConfigError("unknown suite '" + selection + "'");
}

std::vector<SuiteOutcome> run_suites(const ExperimentConfig& cfg, const std::vector<std::string>& names,
                                     const RunOptions& opt) {
  Context ctx(cfg, opt);
  std::vector<SuiteOutcome> out;
  for (const auto& name : names) {
    const SuiteFn fn = suite_fn(name);
    const auto t0 = std::chrono::steady_clock::now();
    SuiteOutcome o;
    try {
      o = fn(ctx);
    } catch (const ConvergenceError& e) {
      o = SuiteOutcome{name, "inconclusive", e.what(), json{{"error", e.what()}}, {}, 0.0};
    } catch (const TruncationError& e) {
      o = SuiteOutcome{name, "inconclusive", e.what(), json{{"error", e.what()}}, {}, 0.0};
    }
    o.name = name;
    o.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(o));
  }
  return out;
}

int exit_status(const std::vector<SuiteOutcome>& outcomes) {
  bool inconclusive = false;
  for (const auto& o : outcomes) {
    if (o.verdict == "fail") return 1;
    if (o.verdict == "inconclusive") inconclusive = true;
  }
  return inconclusive ? 3 : 0;
}

}  // namespace qtd::cli
