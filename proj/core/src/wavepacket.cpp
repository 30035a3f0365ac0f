#include <cmath>
#include <numbers>

#include "qtd/bump.hpp"
#include "qtd/hilbert.hpp"

namespace qtd {
namespace {

void validate(const Grid& g, const WavepacketSpec& spec, int comps) {
  const auto d = static_cast<std::size_t>(g.dim());
  if (spec.center.size() != d || spec.p_lo.size() != d || spec.p_hi.size() != d)
    throw std::invalid_argument("wavepacket spec dimension does not match grid");
  for (std::size_t j = 0; j < d; ++j) {
    if (!(spec.p_lo[j] < spec.p_hi[j])) throw std::invalid_argument("empty momentum window");
    if (spec.p_lo[j] <= -g.p_max() || spec.p_hi[j] >= g.p_max())
      throw DomainError("momentum window touches the edge of the dual grid");
  }
  if (spec.sigma_p < 0.0) throw std::invalid_argument("negative momentum width");
  if (static_cast<int>(spec.polarization.size()) < comps)
    throw std::invalid_argument("polarization shorter than component count");
}

double profile(const Grid& g, const WavepacketSpec& spec, std::size_t idx) {
  double a = 1.0;
  for (int j = 0; j < g.dim(); ++j) {
    const double p = g.coord(idx, j, Rep::momentum);
    const double c = 0.5 * (spec.p_lo[j] + spec.p_hi[j]);
    const double hw = 0.5 * (spec.p_hi[j] - spec.p_lo[j]);
    a *= bump((p - c) / hw);
    if (a == 0.0) return 0.0;
    if (spec.sigma_p > 0.0) a *= std::exp(-(p - c) * (p - c) / (4.0 * spec.sigma_p * spec.sigma_p));
  }
  return a;
}

}  // namespace

State make_wavepacket(const Grid& grid, const WavepacketSpec& spec, int comps) {
  validate(grid, spec, comps);
  State s(grid, comps, Rep::momentum);
  double pn = 0.0;
  for (int c = 0; c < comps; ++c) pn += std::norm(spec.polarization[c]);
  if (!(pn > 0.0)) throw std::invalid_argument("zero polarization");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double a = profile(grid, spec, i);
    if (a == 0.0) continue;
    double phase = 0.0;
    for (int j = 0; j < grid.dim(); ++j) phase -= grid.coord(i, j, Rep::momentum) * spec.center[j];
    const cplx base = a * std::polar(1.0, phase);
    for (int c = 0; c < comps; ++c) s(c, i) = base * spec.polarization[c];
  }
  const double n = norm(s);
  if (!(n > 0.0)) throw DomainError("momentum window contains no grid point");
  s *= 1.0 / n;
  return s;
}

double window_mass(const State& s, const WavepacketSpec& spec) {
  State m = as_rep(s, Rep::momentum);
  const Grid& g = m.grid();
  double in = 0.0, total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double w = 0.0;
    for (int c = 0; c < m.comps(); ++c) w += std::norm(m(c, i));
    total += w;
    bool inside = true;
    for (int j = 0; j < g.dim(); ++j) {
      const double p = g.coord(i, j, Rep::momentum);
      inside = inside && p >= spec.p_lo[j] && p <= spec.p_hi[j];
    }
    if (inside) in += w;
  }
  return total > 0.0 ? in / total : 0.0;
}

}  // namespace qtd
