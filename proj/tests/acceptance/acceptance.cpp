// Runs the bundled experiments and prints one PASS/FAIL line per acceptance criterion.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "config.hpp"
#include "qtd/hilbert.hpp"
#include "report.hpp"
#include "runner.hpp"

namespace fs = std::filesystem;
using qtd::cli::ExperimentConfig;
using qtd::cli::SuiteOutcome;
using nlohmann::json;

namespace {

int failures = 0;
int counter = 0;

void verdict(bool ok, const std::string& name, const std::string& detail) {
  ++counter;
  std::printf("%s [%d/10] %s: %s\n", ok ? "PASS" : "FAIL", counter, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const SuiteOutcome& find(const std::vector<SuiteOutcome>& all, const std::string& name) {
  for (const auto& o : all)
    if (o.name == name) return o;
  std::fprintf(stderr, "suite %s missing\n", name.c_str());
  std::exit(1);
}

// Mean position from the amplitudes, x_k = (k - N/2) h.
double mean_x(const qtd::State& s) {
  const qtd::State p = qtd::to_position(s);
  const qtd::Grid& g = p.grid();
  double m = 0.0, n = 0.0;
  for (int k = 0; k < g.n(); ++k) {
    const double w = std::norm(p(0, static_cast<std::size_t>(k)));
    m += (k - g.n() / 2) * g.h() * w;
    n += w;
  }
  return m / n;
}

// <phi, T phi> for a 1D Laplacian packet on one side of p = 0, where T = -(Q V^-1 + V^-1 Q)/2
// and V = 2p: -Re <Q phi, phi / V>.
double laplacian_time_oracle(const qtd::State& phi) {
  const qtd::State x = qtd::to_position(phi);
  const qtd::Grid& g = x.grid();
  qtd::State qx(g, 1, qtd::Rep::position);
  for (int k = 0; k < g.n(); ++k) qx(0, k) = g.x(k) * x(0, k);
  const qtd::State qp = qtd::to_momentum(qx);
  // exact zeros outside the momentum window
  const qtd::State pm = qtd::as_rep(phi, qtd::Rep::momentum);
  std::complex<double> acc = 0.0, nn = 0.0;
  for (int m = 0; m < g.n(); ++m) {
    const double p = g.p(m);
    if (pm(0, m) == 0.0) continue;
    acc += std::conj(qp(0, m)) * pm(0, m) / (2 * p);
    nn += std::norm(pm(0, m));
  }
  return -acc.real() / nn.real();
}

int run_cli(const fs::path& cfg, const fs::path& out, int threads) {
  const std::string cmd = std::string("\"") + QTD_CLI_PATH + "\" run \"" + cfg.string() + "\" --out \"" +
                          out.string() + "\" --threads " + std::to_string(threads) + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

int main() {
  const fs::path src(QTD_SOURCE_DIR);
  const fs::path well_path = src / "configs" / "laplacian_well.json";
  const fs::path defect_path = src / "configs" / "shift_phase_defect.json";
  const ExperimentConfig well_cfg = qtd::cli::load_config(well_path);
  const ExperimentConfig defect_cfg = qtd::cli::load_config(defect_path);
  const auto names = qtd::cli::resolve_suites("all");
  const auto well = qtd::cli::run_suites(well_cfg, names);
  const auto defect = qtd::cli::run_suites(defect_cfg, names);

  {
    const double a = find(defect, "transport_identity").details["max_residual"];
    const double b = find(well, "transport_identity").details["max_residual"];
    const int probes = defect_cfg.probes, shift = defect_cfg.max_shift;
    const bool ok = a <= 1e-10 && b <= 1e-10 && probes >= 20 && shift >= 16 && well_cfg.probes >= 20 &&
                    well_cfg.max_shift >= 16;
    verdict(ok, "transport identity", fmt("shift %.2e, laplacian %.2e (tol 1e-10)", a, b));
  }
  {
    const double a = find(defect, "canonical_commutation").details["max_residual"];
    const double b = find(well, "canonical_commutation").details["max_residual"];
    verdict(a <= 1e-8 && b <= 1e-8, "canonical commutation", fmt("shift %.2e, laplacian %.2e (tol 1e-8)", a, b));
  }
  {
    // shift: closed form -<x>/v; laplacian: independent evaluation of <T>
    const auto& ds = find(defect, "summation_formula").details;
    const qtd::State sphi = qtd::make_wavepacket(
        qtd::Grid(1, defect_cfg.grid.n, defect_cfg.grid.h, defect_cfg.grid.guard_fraction), defect_cfg.summation_state.value_or(defect_cfg.state));
    const double closed = -mean_x(sphi) / defect_cfg.model.velocity[0];
    const double shift_rel = std::abs(ds["extrapolated"].get<double>() - closed) / std::abs(closed);

    const auto& dl = find(well, "summation_formula").details;
    const qtd::State lphi = qtd::make_wavepacket(qtd::Grid(1, well_cfg.grid.n, well_cfg.grid.h, well_cfg.grid.guard_fraction),
                                                 well_cfg.summation_state.value_or(well_cfg.state));
    const double oracle = laplacian_time_oracle(lphi);
    const double lap_rel = std::abs(dl["extrapolated"].get<double>() - oracle) / std::abs(oracle);
    const bool r_ok = well_cfg.r_list == std::vector<double>{64, 128, 256};
    verdict(shift_rel <= 1e-3 && lap_rel <= 5e-2 && r_ok, "summation formula",
            fmt("laplacian rel %.2e (tol 5e-2), shift rel %.2e vs -<x>/v = %.6g (tol 1e-3)", lap_rel, shift_rel, closed));
  }
  {
    bool ok = true;
    double worst = 1e300, shift_dev = 0.0;
    int count = 0;
    for (const auto* run : {&defect, &well}) {
      const auto& wins = find(*run, "mourre_bound").details["windows"];
      ok = ok && wins.size() >= 10;
      for (const auto& w : wins) {
        const double margin = w["numeric"].get<double>() - w["analytic"].get<double>();
        worst = std::min(worst, margin);
        ok = ok && margin >= -1e-9;
        if (run == &defect) shift_dev = std::max(shift_dev, std::abs(w["numeric"].get<double>() - 0.5));
        ++count;
      }
    }
    ok = ok && shift_dev <= 1e-12;
    verdict(ok, "mourre estimate",
            fmt("%g windows, min(numeric - analytic) %.2e, shift |numeric - 1/2| %.2e", count, worst, shift_dev));
  }
  {
    bool ok = true;
    double worst = 0.0, vmin = 1e300;
    for (const auto* run : {&defect, &well})
      for (const auto& p : find(*run, "local_smoothness").details["probes"]) {
        const double rel = p["relative_change"], vf = p["velocity_floor"];
        worst = std::max(worst, rel);
        vmin = std::min(vmin, vf);
        ok = ok && rel <= 1e-6 && vf >= 0.2;
      }
    verdict(ok, "local smoothness", fmt("max relative change %.2e (tol 1e-6), min velocity floor %.3f", worst, vmin));
  }
  {
    const auto& d = find(well, "scattering_sanity").details;
    const double iso = std::max(d["isometry_defect_minus"].get<double>(), d["isometry_defect_plus"].get<double>());
    const double comm = d["commutation_defect"], free = d["free_s_residual"];
    const bool ok = iso <= 1e-8 && comm <= 1e-8 && free <= 1e-12 && well_cfg.tol.tol_w == 1e-9;
    verdict(ok, "scattering sanity", fmt("isometry %.2e, [S,U0] %.2e, free S residual %.2e", iso, comm, free));
  }
  const auto& td = find(well, "time_delay").details;
  {
    const double sym = td["tau_sym_limit"], ew = td["ew_direct"];
    const bool has_fiber = td.contains("ew_fiber");
    const double fib = has_fiber ? td["ew_fiber"]["value"].get<double>() : NAN;
    const double change = has_fiber ? td["ew_fiber"]["relative_change"].get<double>() : NAN;
    const double r1 = std::abs(sym - ew) / std::abs(ew);
    const double r2 = std::abs(ew - fib) / std::abs(fib);
    const bool ok = has_fiber && r1 <= 5e-2 && r2 <= 2e-2 && change <= 1e-2;
    verdict(ok, "symmetrised time delay",
            fmt("tau_sym %.6f vs EW %.6f (rel %.2e); EW routes rel %.2e", sym, ew, r1, r2) +
                fmt(", fiber step halving %.2e", change));
  }
  {
    const double sym = td["tau_sym_limit"], nsym = td["tau_nsym_limit"];
    const double rel = std::abs(nsym - sym) / std::abs(sym);
    std::vector<double> mags;
    for (const auto& r : td["records"]) mags.push_back(std::abs(r["elastic"].get<double>()));
    bool decreasing = mags.size() == 3;
    for (std::size_t k = 1; k < mags.size(); ++k) decreasing = decreasing && mags[k] < mags[k - 1];
    verdict(rel <= 5e-2 && decreasing, "elastic equality",
            fmt("tau_nsym rel %.2e; |elastic| %.2e > %.2e > %.2e", rel, mags.at(0), mags.at(1), mags.at(2)));
  }
  {
    const auto& d = find(defect, "time_delay").details;
    double sym = NAN, nsym = NAN;
    for (const auto& r : d["records"])
      if (r["r"].get<double>() == 256.0) {
        sym = r["tau_sym"];
        nsym = r["tau_nsym"];
      }
    const double ew = d["ew_direct"];
    const double fib = d.contains("ew_fiber") ? d["ew_fiber"]["value"].get<double>() : NAN;
    const bool ok = std::abs(sym) <= 2e-2 && std::abs(nsym) <= 2e-2 && std::abs(ew) <= 2e-6 && std::abs(fib) <= 2e-6;
    verdict(ok, "zero delay", fmt("r=256 tau_sym %.2e, tau_nsym %.2e; EW direct %.2e, fiber %.2e", sym, nsym, ew, fib));
  }
  {
    const fs::path base = fs::temp_directory_path() / "qtd_acceptance";
    fs::remove_all(base);
    const int s1 = run_cli(well_path, base / "a", 1);
    const int s2 = run_cli(well_path, base / "b", 1);
    const int s4 = run_cli(well_path, base / "c", 4);
    const std::string a = slurp(base / "a" / "results.csv");
    const std::string b = slurp(base / "b" / "results.csv");
    const std::string c = slurp(base / "c" / "results.csv");
    const auto ra = split_csv(a), rc = split_csv(c);
    bool parallel_ok = ra.size() == rc.size() && !ra.empty();
    double worst = 0.0;
    for (std::size_t i = 1; parallel_ok && i < ra.size(); ++i) {
      if (ra[i].size() != 7 || rc[i].size() != 7) {
        parallel_ok = false;
        break;
      }
      for (int k : {0, 1, 2, 3, 5, 6}) parallel_ok = parallel_ok && ra[i][k] == rc[i][k];
      const double x = std::stod(ra[i][4]), y = std::stod(rc[i][4]);
      if (x != y) worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
    }
    parallel_ok = parallel_ok && worst <= 1e-12;
    const bool ok = s1 == 0 && s2 == 0 && s4 == 0 && !a.empty() && a == b && parallel_ok;
    verdict(ok, "reproducibility",
            std::string(a == b ? "single-thread CSV bit-identical" : "single-thread CSV differs") +
                fmt(", 4-thread max deviation %.2e, exit codes %g %g %g", worst, s1, s2, s4));
  }
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
