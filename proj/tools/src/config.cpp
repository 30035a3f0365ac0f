#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace qtd::cli {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

const json& need(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(what + ": not finite");
  return x;
}

double positive(const json& v, const std::string& what) {
  const double x = number(v, what);
  if (!(x > 0.0)) throw ConfigError(what + ": must be positive");
  return x;
}

long integer(const json& v, const std::string& what, long lo, long hi) {
  if (!v.is_number_integer()) throw ConfigError(what + ": expected an integer");
  const long x = v.get<long>();
  if (x < lo || x > hi)
    throw ConfigError(what + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

std::vector<double> vec(const json& v, const std::string& what, std::size_t size) {
  if (!v.is_array() || v.size() != size)
    throw ConfigError(what + ": expected an array of " + std::to_string(size) + " numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], what));
  return out;
}

template <class T>
void opt_positive(const json& obj, const char* key, T& field, const std::string& where) {
  if (obj.contains(key)) field = static_cast<T>(positive(obj.at(key), where + "." + key));
}

ModelConfig parse_model(const json& m, int d) {
  check_keys(m, "model", {"kind", "velocity", "coin", "well", "defect"});
  ModelConfig out;
  const json& kind = need(m, "model", "kind");
  if (!kind.is_string()) throw ConfigError("model.kind: expected a string");
  out.kind = kind.get<std::string>();
  if (out.kind != "shift" && out.kind != "laplacian" && out.kind != "coined_walk")
    throw ConfigError("model.kind: expected shift, laplacian or coined_walk");
  if (out.kind == "shift") {
    out.velocity = vec(need(m, "model", "velocity"), "model.velocity", static_cast<std::size_t>(d));
    double s2 = 0.0;
    for (double v : out.velocity) s2 += v * v;
    if (s2 == 0.0) throw ConfigError("model.velocity: must be nonzero");
  } else if (m.contains("velocity")) {
    throw ConfigError("model.velocity: only valid for the shift model");
  }
  if (m.contains("coin")) {
    if (out.kind != "coined_walk") throw ConfigError("model.coin: only valid for coined_walk");
    if (!m.at("coin").is_string()) throw ConfigError("model.coin: expected a string");
    out.coin = m.at("coin").get<std::string>();
    if (out.coin != "hadamard" && out.coin != "identity") throw ConfigError("model.coin: expected hadamard or identity");
  }
  if (out.kind == "coined_walk" && d != 1) throw ConfigError("model: coined_walk is one-dimensional");
  if (m.contains("well") && m.contains("defect")) throw ConfigError("model: give either a well or a defect");
  if (m.contains("well")) {
    const json& w = m.at("well");
    check_keys(w, "model.well", {"depth", "width", "center"});
    WellConfig wc;
    wc.depth = number(need(w, "model.well", "depth"), "model.well.depth");
    wc.width = positive(need(w, "model.well", "width"), "model.well.width");
    wc.center = vec(need(w, "model.well", "center"), "model.well.center", static_cast<std::size_t>(d));
    out.well = wc;
  }
  if (m.contains("defect")) {
    const json& w = m.at("defect");
    check_keys(w, "model.defect", {"theta", "sites"});
    DefectConfig dc;
    dc.theta = number(need(w, "model.defect", "theta"), "model.defect.theta");
    const json& sites = need(w, "model.defect", "sites");
    if (!sites.is_array() || sites.empty()) throw ConfigError("model.defect.sites: expected a nonempty array");
    for (const auto& s : sites) {
      if (!s.is_array() || s.size() != static_cast<std::size_t>(d))
        throw ConfigError("model.defect.sites: each site needs " + std::to_string(d) + " integers");
      std::vector<int> site;
      for (const auto& c : s) site.push_back(static_cast<int>(integer(c, "model.defect.sites", -1000000, 1000000)));
      dc.sites.push_back(site);
    }
    out.defect = dc;
  }
  return out;
}

GridConfig parse_grid(const json& g) {
  check_keys(g, "grid", {"d", "N", "h", "guard_fraction"});
  GridConfig out;
  out.d = static_cast<int>(integer(need(g, "grid", "d"), "grid.d", 1, 3));
  out.n = static_cast<int>(integer(need(g, "grid", "N"), "grid.N", 4, 1 << 20));
  if ((out.n & (out.n - 1)) != 0) throw ConfigError("grid.N: must be a power of two");
  out.h = positive(need(g, "grid", "h"), "grid.h");
  if (g.contains("guard_fraction")) {
    out.guard_fraction = number(g.at("guard_fraction"), "grid.guard_fraction");
    if (!(out.guard_fraction > 0.0 && out.guard_fraction < 1.0))
      throw ConfigError("grid.guard_fraction: must lie in (0, 1)");
  }
  return out;
}

WavepacketSpec parse_state(const json& s, int d, bool two_band) {
  check_keys(s, "state", {"center", "p_lo", "p_hi", "sigma_p", "polarization"});
  WavepacketSpec out;
  const auto dd = static_cast<std::size_t>(d);
  out.center = vec(need(s, "state", "center"), "state.center", dd);
  out.p_lo = vec(need(s, "state", "p_lo"), "state.p_lo", dd);
  out.p_hi = vec(need(s, "state", "p_hi"), "state.p_hi", dd);
  for (std::size_t j = 0; j < dd; ++j)
    if (!(out.p_lo[j] < out.p_hi[j])) throw ConfigError("state: p_lo must be below p_hi on every axis");
  out.sigma_p = number(need(s, "state", "sigma_p"), "state.sigma_p");
  if (out.sigma_p < 0.0) throw ConfigError("state.sigma_p: must be nonnegative (0 selects the pure bump)");
  if (s.contains("polarization")) {
    if (!two_band) throw ConfigError("state.polarization: only valid for two-component models");
    const auto pol = vec(s.at("polarization"), "state.polarization", 4);
    out.polarization = {cplx(pol[0], pol[1]), cplx(pol[2], pol[3])};
  }
  return out;
}

void parse_tolerances(const json& t, Tolerances& out) {
  check_keys(t, "tolerances",
             {"tol_w", "tol_S", "horizon", "tail", "v_min", "transport", "canonical", "summation_rel",
              "mourre_slack", "smooth_rel", "isometry", "commutation", "identity_S", "tau_rel", "tau_abs",
              "ew_rel", "ew_abs", "ew_stability", "delta_bins"});
  const std::string w = "tolerances";
  opt_positive(t, "tol_w", out.tol_w, w);
  opt_positive(t, "tol_S", out.tol_s, w);
  if (t.contains("horizon")) out.horizon = integer(t.at("horizon"), "tolerances.horizon", 16, 1000000);
  opt_positive(t, "tail", out.tail, w);
  opt_positive(t, "v_min", out.v_min, w);
  opt_positive(t, "transport", out.transport, w);
  opt_positive(t, "canonical", out.canonical, w);
  opt_positive(t, "summation_rel", out.summation_rel, w);
  opt_positive(t, "mourre_slack", out.mourre_slack, w);
  opt_positive(t, "smooth_rel", out.smooth_rel, w);
  opt_positive(t, "isometry", out.isometry, w);
  opt_positive(t, "commutation", out.commutation, w);
  opt_positive(t, "identity_S", out.identity_s, w);
  opt_positive(t, "tau_rel", out.tau_rel, w);
  if (t.contains("tau_abs")) {
    out.tau_abs = number(t.at("tau_abs"), "tolerances.tau_abs");
    if (out.tau_abs < 0.0) throw ConfigError("tolerances.tau_abs: must be nonnegative");
  }
  opt_positive(t, "ew_rel", out.ew_rel, w);
  if (t.contains("ew_abs")) {
    out.ew_abs = number(t.at("ew_abs"), "tolerances.ew_abs");
    if (out.ew_abs < 0.0) throw ConfigError("tolerances.ew_abs: must be nonnegative");
  }
  opt_positive(t, "ew_stability", out.ew_stability, w);
  if (t.contains("delta_bins")) out.delta_bins = static_cast<int>(integer(t.at("delta_bins"), "tolerances.delta_bins", 2, 64));
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  check_keys(root, "config",
             {"schema_version", "name", "model", "grid", "state", "summation_state", "localisation", "r_list", "tolerances", "suite",
              "output", "seed", "probes", "max_shift", "windows"});
  ExperimentConfig cfg;
  cfg.schema_version = static_cast<int>(integer(need(root, "config", "schema_version"), "schema_version", 1, 1000));
  if (cfg.schema_version != kSchemaVersion)
    throw ConfigError("schema_version " + std::to_string(cfg.schema_version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  if (root.contains("name")) {
    if (!root.at("name").is_string()) throw ConfigError("name: expected a string");
    cfg.name = root.at("name").get<std::string>();
  }
  cfg.grid = parse_grid(need(root, "config", "grid"));
  cfg.model = parse_model(need(root, "config", "model"), cfg.grid.d);
  cfg.state = parse_state(need(root, "config", "state"), cfg.grid.d, cfg.model.kind == "coined_walk");
  if (root.contains("summation_state"))
    cfg.summation_state = parse_state(root.at("summation_state"), cfg.grid.d, cfg.model.kind == "coined_walk");
  const json& loc = need(root, "config", "localisation");
  check_keys(loc, "localisation", {"w"});
  cfg.w = positive(need(loc, "localisation", "w"), "localisation.w");
  const json& rl = need(root, "config", "r_list");
  if (!rl.is_array() || rl.size() < 3) throw ConfigError("r_list: needs at least three scales");
  for (const auto& r : rl) cfg.r_list.push_back(positive(r, "r_list"));
  for (std::size_t k = 1; k < cfg.r_list.size(); ++k)
    if (!(cfg.r_list[k] > cfg.r_list[k - 1])) throw ConfigError("r_list: must be strictly increasing");
  if (root.contains("tolerances")) parse_tolerances(root.at("tolerances"), cfg.tol);
  if (root.contains("suite")) {
    if (!root.at("suite").is_string()) throw ConfigError("suite: expected a string");
    cfg.suite = root.at("suite").get<std::string>();
  }
  if (root.contains("output")) {
    const json& o = root.at("output");
    check_keys(o, "output", {"dir"});
    if (o.contains("dir")) {
      if (!o.at("dir").is_string() || o.at("dir").get<std::string>().empty())
        throw ConfigError("output.dir: expected a nonempty string");
      cfg.out_dir = o.at("dir").get<std::string>();
    }
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }
  if (root.contains("probes")) cfg.probes = static_cast<int>(integer(root.at("probes"), "probes", 1, 1000));
  if (root.contains("max_shift")) cfg.max_shift = static_cast<int>(integer(root.at("max_shift"), "max_shift", 1, 1000));
  if (root.contains("windows")) cfg.windows = static_cast<int>(integer(root.at("windows"), "windows", 1, 1000));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qtd::cli
