#include "qtd/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qtd/bump.hpp"
#include "qtd/localisation.hpp"

namespace qtd {

struct FiberedPropagator::Impl {
  Grid grid{1, 4, 1.0};
  int comps = 1;
  ModelKind kind = ModelKind::shift;
  std::string label;
  std::function<double(std::span<const double>)> omega;
  std::function<std::vector<double>(std::span<const double>)> vel;
  std::optional<double> vprime;
  std::vector<double> omega_tab;
  std::vector<double> vel_tab;  // [(axis * bands + band) * points + idx]
  Mat2 coin{};
  std::vector<Eigen2> eig;
};

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

std::vector<double> momentum_of(const Grid& g, std::size_t idx) {
  std::vector<double> p(g.dim());
  for (int j = 0; j < g.dim(); ++j) p[j] = g.coord(idx, j, Rep::momentum);
  return p;
}

void fill_scalar_tables(FiberedPropagator::Impl& m) {
  const std::size_t np = m.grid.size();
  const int d = m.grid.dim();
  m.omega_tab.resize(np);
  m.vel_tab.resize(np * d);
  for (std::size_t i = 0; i < np; ++i) {
    const auto p = momentum_of(m.grid, i);
    m.omega_tab[i] = m.omega(p);
    const auto v = m.vel(p);
    for (int j = 0; j < d; ++j) m.vel_tab[j * np + i] = v[j];
  }
}

Mat2 matmul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

cplx dot(const std::array<cplx, 2>& a, const std::array<cplx, 2>& b) {
  return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
}

}  // namespace

Eigen2 eigen_unitary2(const Mat2& m) {
  Eigen2 e;
  if (std::abs(m[1]) < 1e-14 && std::abs(m[2]) < 1e-14) {
    e.value = {m[0] / std::abs(m[0]), m[3] / std::abs(m[3])};
    e.vector[0] = {1.0, 0.0};
    e.vector[1] = {0.0, 1.0};
    return e;
  }
  const cplx t = m[0] + m[3];
  const cplx det = m[0] * m[3] - m[1] * m[2];
  const cplx disc = std::sqrt(t * t - 4.0 * det);
  const std::array<cplx, 2> lam{0.5 * (t + disc), 0.5 * (t - disc)};
  for (int b = 0; b < 2; ++b) {
    const cplx l = lam[b] / std::abs(lam[b]);
    std::array<cplx, 2> v = std::abs(m[1]) >= std::abs(m[2]) ? std::array<cplx, 2>{m[1], l - m[0]}
                                                               : std::array<cplx, 2>{l - m[3], m[2]};
    const double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    e.value[b] = l;
    e.vector[b] = {v[0] / n, v[1] / n};
  }
  return e;
}

const Grid& FiberedPropagator::grid() const { return impl_->grid; }
int FiberedPropagator::comps() const { return impl_->comps; }
ModelKind FiberedPropagator::kind() const { return impl_->kind; }
const std::string& FiberedPropagator::label() const { return impl_->label; }
std::optional<double> FiberedPropagator::vprime_scale() const { return impl_->vprime; }

double FiberedPropagator::omega(std::span<const double> p) const {
  if (impl_->comps != 1) throw std::logic_error("omega is defined for scalar models only");
  return impl_->omega(p);
}

std::vector<double> FiberedPropagator::velocity_at(std::span<const double> p) const {
  if (impl_->comps != 1) throw std::logic_error("velocity_at is defined for scalar models only");
  return impl_->vel(p);
}

Mat2 FiberedPropagator::fiber(double p) const {
  if (impl_->kind != ModelKind::coined_walk) throw std::logic_error("fiber matrix requires the coined walk");
  const double h = impl_->grid.h();
  const Mat2 s{std::polar(1.0, -p * h), 0.0, 0.0, std::polar(1.0, p * h)};
  return matmul(s, impl_->coin);
}

double FiberedPropagator::velocity(int axis, std::size_t idx, int band) const {
  const std::size_t np = impl_->grid.size();
  return impl_->vel_tab[(static_cast<std::size_t>(axis) * impl_->comps + band) * np + idx];
}

double FiberedPropagator::speed(std::size_t idx, int band) const {
  double s = 0.0;
  for (int j = 0; j < impl_->grid.dim(); ++j) {
    const double v = velocity(j, idx, band);
    s += v * v;
  }
  return std::sqrt(s);
}

cplx FiberedPropagator::eigenvalue(std::size_t idx, int band) const {
  if (impl_->comps == 1) return std::polar(1.0, -impl_->omega_tab[idx]);
  return impl_->eig[idx].value[band];
}

const Eigen2& FiberedPropagator::eigen(std::size_t idx) const {
  if (impl_->comps == 1) throw std::logic_error("eigen decomposition requires the coined walk");
  return impl_->eig[idx];
}

State FiberedPropagator::power(const State& s, long n) const {
  if (!(s.grid() == impl_->grid) || s.comps() != impl_->comps)
    throw GridMismatch("state does not match the propagator grid");
  State out = as_rep(s, Rep::momentum);
  const std::size_t np = out.points();
  auto data = out.data();
  if (impl_->comps == 1) {
    for (std::size_t i = 0; i < np; ++i) {
      if (data[i] == cplx(0.0)) continue;
      data[i] *= std::polar(1.0, -static_cast<double>(n) * impl_->omega_tab[i]);
    }
    return out;
  }
  for (std::size_t i = 0; i < np; ++i) {
    const Eigen2& e = impl_->eig[i];
    const std::array<cplx, 2> v{data[i], data[np + i]};
    std::array<cplx, 2> r{0.0, 0.0};
    for (int b = 0; b < 2; ++b) {
      const cplx lam = std::polar(1.0, static_cast<double>(n) * std::arg(e.value[b]));
      const cplx c = lam * dot(e.vector[b], v);
      r[0] += c * e.vector[b][0];
      r[1] += c * e.vector[b][1];
    }
    data[i] = r[0];
    data[np + i] = r[1];
  }
  return out;
}

State FiberedPropagator::conjugated(const State& s, std::span<const double> x) const {
  State out = as_rep(s, Rep::momentum);
  const Grid& g = impl_->grid;
  const std::size_t np = g.size();
  auto data = out.data();
  for (std::size_t i = 0; i < np; ++i) {
    auto p = momentum_of(g, i);
    for (int j = 0; j < g.dim(); ++j) p[j] += x[j];
    if (impl_->comps == 1) {
      data[i] *= std::polar(1.0, -impl_->omega(p));
    } else {
      const Mat2 m = fiber(p[0]);
      const cplx a = data[i], b = data[np + i];
      data[i] = m[0] * a + m[1] * b;
      data[np + i] = m[2] * a + m[3] * b;
    }
  }
  return out;
}

State FiberedPropagator::apply_velocity_function(
    const State& s, const std::function<double(std::span<const double>)>& g) const {
  State out = as_rep(s, Rep::momentum);
  const Grid& grid = impl_->grid;
  const std::size_t np = grid.size();
  const int d = grid.dim();
  auto data = out.data();
  std::vector<double> v(d);
  if (impl_->comps == 1) {
    for (std::size_t i = 0; i < np; ++i) {
      if (data[i] == cplx(0.0)) continue;
      for (int j = 0; j < d; ++j) v[j] = impl_->vel_tab[j * np + i];
      data[i] *= g(v);
    }
    return out;
  }
  for (std::size_t i = 0; i < np; ++i) {
    const Eigen2& e = impl_->eig[i];
    const std::array<cplx, 2> a{data[i], data[np + i]};
    std::array<cplx, 2> r{0.0, 0.0};
    for (int b = 0; b < 2; ++b) {
      for (int j = 0; j < d; ++j) v[j] = velocity(j, i, b);
      const cplx c = g(v) * dot(e.vector[b], a);
      r[0] += c * e.vector[b][0];
      r[1] += c * e.vector[b][1];
    }
    data[i] = r[0];
    data[np + i] = r[1];
  }
  return out;
}

State FiberedPropagator::apply_velocity(const State& s, int axis) const {
  return apply_velocity_function(s, [axis](std::span<const double> v) { return v[axis]; });
}

FiberedPropagator build_free_shift(const Grid& grid, std::vector<double> v) {
  if (static_cast<int>(v.size()) != grid.dim()) throw std::invalid_argument("velocity dimension mismatch");
  if (std::all_of(v.begin(), v.end(), [](double c) { return c == 0.0; }))
    throw DegenerateModel("zero velocity makes every spectral point critical");
  auto m = std::make_shared<FiberedPropagator::Impl>();
  m->grid = grid;
  m->kind = ModelKind::shift;
  m->label = "shift";
  m->omega = [v](std::span<const double> p) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += p[j] * v[j];
    return s;
  };
  m->vel = [v](std::span<const double>) { return v; };
  m->vprime = 0.0;
  fill_scalar_tables(*m);
  return FiberedPropagator(std::move(m));
}

FiberedPropagator build_free_laplacian(const Grid& grid) {
  auto m = std::make_shared<FiberedPropagator::Impl>();
  m->grid = grid;
  m->kind = ModelKind::laplacian;
  m->label = "laplacian";
  m->omega = [](std::span<const double> p) {
    double s = 0.0;
    for (double c : p) s += c * c;
    return s;
  };
  m->vel = [](std::span<const double> p) {
    std::vector<double> v(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) v[j] = 2.0 * p[j];
    return v;
  };
  m->vprime = 2.0;
  fill_scalar_tables(*m);
  return FiberedPropagator(std::move(m));
}

#if defined(QTD_WITH_COINED_WALK)
FiberedPropagator build_coined_walk(const Grid& grid, const Mat2& coin) {
  if (grid.dim() != 1) throw std::invalid_argument("the coined walk is one dimensional");
  const Mat2 cc{std::conj(coin[0]), std::conj(coin[2]), std::conj(coin[1]), std::conj(coin[3])};
  const Mat2 id = matmul(cc, coin);
  if (std::abs(id[0] - 1.0) > 1e-12 || std::abs(id[3] - 1.0) > 1e-12 || std::abs(id[1]) > 1e-12 ||
      std::abs(id[2]) > 1e-12)
    throw std::invalid_argument("coin is not unitary");
  auto m = std::make_shared<FiberedPropagator::Impl>();
  m->grid = grid;
  m->comps = 2;
  m->kind = ModelKind::coined_walk;
  m->label = "coined_walk";
  m->coin = coin;
  const std::size_t np = grid.size();
  m->eig.resize(np);
  m->vel_tab.resize(2 * np);
  FiberedPropagator tmp(m);
  const double h = grid.h();
  for (std::size_t i = 0; i < np; ++i) {
    const double p = grid.p(static_cast<int>(i));
    m->eig[i] = eigen_unitary2(tmp.fiber(p));
    // Hellmann-Feynman: omega' = Re(i <e, M' e> / lambda)
    const Mat2 ds{cplx(0.0, -h) * std::polar(1.0, -p * h), 0.0, 0.0, cplx(0.0, h) * std::polar(1.0, p * h)};
    const Mat2 dm = matmul(ds, coin);
    for (int b = 0; b < 2; ++b) {
      const auto& e = m->eig[i].vector[b];
      const std::array<cplx, 2> me{dm[0] * e[0] + dm[1] * e[1], dm[2] * e[0] + dm[3] * e[1]};
      m->vel_tab[b * np + i] = std::real(cplx(0.0, 1.0) * dot(e, me) / m->eig[i].value[b]);
    }
  }
  return FiberedPropagator(std::move(m));
}
#endif

VelocityTable velocity_operator(const FiberedPropagator& u0, VelocityMethod method, double step) {
  const Grid& g = u0.grid();
  VelocityTable t;
  t.dim = g.dim();
  t.bands = u0.bands();
  t.points = g.size();
  t.data.resize(static_cast<std::size_t>(t.dim) * t.bands * t.points);
  if (method == VelocityMethod::analytic) {
    for (int j = 0; j < t.dim; ++j)
      for (int b = 0; b < t.bands; ++b)
        for (std::size_t i = 0; i < t.points; ++i)
          t.data[(static_cast<std::size_t>(j) * t.bands + b) * t.points + i] = u0.velocity(j, i, b);
    return t;
  }
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  for (std::size_t i = 0; i < t.points; ++i) {
    auto p = momentum_of(g, i);
    if (u0.comps() == 1) {
      // Hermitian part of (i/2s)(U0(s e_j) - U0(-s e_j)) U0^{-1} on the fiber
      const double w0 = u0.omega(p);
      for (int j = 0; j < t.dim; ++j) {
        auto q = p;
        q[j] = p[j] + step;
        const double dp = u0.omega(q) - w0;
        q[j] = p[j] - step;
        const double dm = u0.omega(q) - w0;
        t.data[static_cast<std::size_t>(j) * t.points + i] = (std::sin(dp) - std::sin(dm)) / (2.0 * step);
      }
      continue;
    }
    // coined walk: centred difference of eigenphases, bands matched by eigenvector overlap
    const Eigen2& e0 = u0.eigen(i);
    const Eigen2 ep = eigen_unitary2(u0.fiber(p[0] + step));
    const Eigen2 em = eigen_unitary2(u0.fiber(p[0] - step));
    for (int b = 0; b < 2; ++b) {
      auto match = [&](const Eigen2& e) {
        const int k = std::abs(dot(e0.vector[b], e.vector[0])) >= std::abs(dot(e0.vector[b], e.vector[1])) ? 0 : 1;
        return e.value[k];
      };
      const double ap = std::arg(match(ep) / e0.value[b]);
      const double am = std::arg(match(em) / e0.value[b]);
      t.data[static_cast<std::size_t>(b) * t.points + i] = -(ap - am) / (2.0 * step);
    }
  }
  return t;
}

bool Arc::contains(double angle) const {
  if (length >= kTwoPi) return true;
  return wrap_angle(angle - start) <= length + 1e-15;
}

bool Arc::overlaps(const Arc& o) const { return contains(o.start) || o.contains(start); }

bool CriticalSet::contains(double angle) const {
  return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.contains(angle); });
}

bool CriticalSet::overlaps(const Arc& window) const {
  return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.overlaps(window); });
}

double spectral_angle(const FiberedPropagator& u0, std::size_t idx, int band) {
  return wrap_angle(std::arg(u0.eigenvalue(idx, band)));
}

namespace {

// Shorter arc joining two angles.
Arc join(double a, double b) {
  const double d = wrap_angle(b - a);
  if (d <= std::numbers::pi) return {wrap_angle(a), d};
  return {wrap_angle(b), kTwoPi - d};
}

std::vector<Arc> merge(std::vector<Arc> arcs) {
  if (arcs.empty()) return arcs;
  std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.start < y.start; });
  std::vector<Arc> out{arcs.front()};
  for (std::size_t k = 1; k < arcs.size(); ++k) {
    Arc& cur = out.back();
    const Arc& nx = arcs[k];
    if (nx.start <= cur.start + cur.length + 1e-15) {
      cur.length = std::max(cur.length, nx.start + nx.length - cur.start);
    } else {
      out.push_back(nx);
    }
  }
  // wrap-around: the last arc may reach past 2 pi into the first
  while (out.size() > 1) {
    Arc& last = out.back();
    Arc& first = out.front();
    const double end = last.start + last.length - kTwoPi;
    if (end + 1e-15 < first.start) break;
    last.length = std::max(last.length, first.start + first.length + kTwoPi - last.start);
    out.erase(out.begin());
  }
  for (auto& a : out)
    if (a.length >= kTwoPi) return {Arc{0.0, kTwoPi}};
  return out;
}

}  // namespace

CriticalSet critical_values(const FiberedPropagator& u0, double v_min) {
  if (!(v_min > 0.0)) throw std::invalid_argument("v_min must be positive");
  const Grid& g = u0.grid();
  const std::size_t np = g.size();
  const int bands = u0.bands();
  bool any_fast = false;
  std::vector<Arc> pieces;
  std::vector<int> k(g.dim());
  for (std::size_t i = 0; i < np; ++i) {
    for (int b = 0; b < bands; ++b) {
      if (u0.speed(i, b) >= v_min) {
        any_fast = true;
        continue;
      }
      const double a = spectral_angle(u0, i, b);
      pieces.push_back({a, 0.0});
      // the image of the segment to each slow neighbour belongs to the closure
      for (int j = 0; j < g.dim(); ++j) {
        const int kj = g.axis_index(i, j);
        if (kj + 1 >= g.n()) continue;
        std::size_t stride = 1;
        for (int q = j + 1; q < g.dim(); ++q) stride *= g.n();
        const std::size_t nb = i + stride;
        int bn = b;
        if (bands == 2) {
          const auto& e0 = u0.eigen(i).vector[b];
          const auto& e1 = u0.eigen(nb).vector;
          bn = std::abs(dot(e0, e1[0])) >= std::abs(dot(e0, e1[1])) ? 0 : 1;
        }
        if (u0.speed(nb, bn) < v_min) pieces.push_back(join(a, spectral_angle(u0, nb, bn)));
      }
    }
  }
  if (!any_fast) throw DegenerateModel("v_min exceeds every grid velocity: all spectral points critical");
  return CriticalSet{merge(std::move(pieces)), v_min};
}

namespace {

// Per-point band masses of a momentum state.
void band_masses(const FiberedPropagator& u0, const State& m, std::size_t i, double* out) {
  if (u0.comps() == 1) {
    out[0] = std::norm(m(0, i));
    return;
  }
  const Eigen2& e = u0.eigen(i);
  const std::array<cplx, 2> v{m(0, i), m(1, i)};
  for (int b = 0; b < 2; ++b) out[b] = std::norm(dot(e.vector[b], v));
}

}  // namespace

double velocity_floor(const FiberedPropagator& u0, const State& s, double rel_mass) {
  const State m = as_rep(s, Rep::momentum);
  std::vector<std::pair<double, double>> pts;
  double total = 0.0;
  double w[2];
  for (std::size_t i = 0; i < m.points(); ++i) {
    band_masses(u0, m, i, w);
    for (int b = 0; b < u0.bands(); ++b) {
      if (w[b] == 0.0) continue;
      pts.emplace_back(u0.speed(i, b), w[b]);
      total += w[b];
    }
  }
  std::sort(pts.begin(), pts.end());
  // smallest speed carrying more than rel_mass of the state below it
  double below = 0.0;
  for (const auto& [speed, mass] : pts) {
    below += mass;
    if (below > rel_mass * total) return speed;
  }
  return std::numeric_limits<double>::infinity();
}

double slow_mass(const FiberedPropagator& u0, const State& s, double v_min) {
  const State m = as_rep(s, Rep::momentum);
  double slow = 0.0, total = 0.0;
  double w[2];
  for (std::size_t i = 0; i < m.points(); ++i) {
    band_masses(u0, m, i, w);
    for (int b = 0; b < u0.bands(); ++b) {
      total += w[b];
      if (u0.speed(i, b) < v_min) slow += w[b];
    }
  }
  return total > 0.0 ? slow / total : 0.0;
}

void check_admissible(const FiberedPropagator& u0, const State& s, double v_min, double tol) {
  const double slow = slow_mass(u0, s, v_min);
  if (slow > tol)
    throw DomainError("momentum mass " + std::to_string(slow) + " below the velocity floor " +
                      std::to_string(v_min));
}

Propagator::Propagator(Grid grid, std::vector<Factor> factors, std::string label)
    : grid_(grid), factors_(std::move(factors)), label_(std::move(label)) {
  for (const auto& f : factors_) {
    if (const auto* pf = std::get_if<PositionFactor>(&f)) {
      if (pf->phase.size() != grid_.size()) throw GridMismatch("position factor size mismatch");
      for (const auto& z : pf->phase)
        if (std::abs(std::abs(z) - 1.0) > 1e-12) throw std::invalid_argument("position factor is not unitary");
    } else if (!(std::get<1>(f)->grid() == grid_)) {
      throw GridMismatch("fibered factor lives on another grid");
    }
  }
}

namespace {

State apply_factor(const Propagator::Factor& f, const State& s, bool inverse) {
  if (const auto* pf = std::get_if<PositionFactor>(&f)) {
    State out = as_rep(s, Rep::position);
    const std::size_t np = out.points();
    auto data = out.data();
    for (int c = 0; c < out.comps(); ++c)
      for (std::size_t i = 0; i < np; ++i)
        data[c * np + i] *= inverse ? std::conj(pf->phase[i]) : pf->phase[i];
    return out;
  }
  return std::get<1>(f)->power(s, inverse ? -1 : 1);
}

}  // namespace

State Propagator::step(const State& s) const {
  State out = s;
  for (const auto& f : factors_) out = apply_factor(f, out, false);
  return out;
}

State Propagator::step_inverse(const State& s) const {
  State out = s;
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) out = apply_factor(*it, out, true);
  return out;
}

std::vector<double> smooth_well(const Grid& grid, double depth, double width,
                                std::span<const double> center) {
  if (!(width > 0.0)) throw std::invalid_argument("well width must be positive");
  if (static_cast<int>(center.size()) != grid.dim()) throw std::invalid_argument("well center dimension");
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double r2 = 0.0;
    for (int j = 0; j < grid.dim(); ++j) {
      const double dx = grid.coord(i, j, Rep::position) - center[j];
      r2 += dx * dx;
    }
    w[i] = -depth * bump(std::sqrt(r2) / width);
  }
  return w;
}

Propagator as_propagator(const FiberedPropagator& u0) {
  return Propagator(u0.grid(), {std::make_shared<const FiberedPropagator>(u0)}, u0.label());
}

Propagator build_full_split_step(const FiberedPropagator& u0, const std::vector<double>& w) {
  const Grid& g = u0.grid();
  if (w.size() != g.size()) throw GridMismatch("potential size does not match grid");
  bool zero = true;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(w[i])) throw std::invalid_argument("potential must be finite and real");
    if (w[i] == 0.0) continue;
    zero = false;
    for (int j = 0; j < g.dim(); ++j)
      if (std::abs(g.coord(i, j, Rep::position)) > g.guard_radius())
        throw PreconditionError("potential support touches the guard band");
  }
  auto free = std::make_shared<const FiberedPropagator>(u0);
  if (zero) return Propagator(g, {free}, u0.label() + "+split(0)");
  PositionFactor half;
  half.phase.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) half.phase[i] = std::polar(1.0, -0.5 * w[i]);
  return Propagator(g, {half, free, half}, u0.label() + "+split");
}

Propagator build_phase_defect(const FiberedPropagator& u0, double theta,
                              const std::vector<std::vector<int>>& sites) {
  const Grid& g = u0.grid();
  auto free = std::make_shared<const FiberedPropagator>(u0);
  if (theta == 0.0 || sites.empty()) return Propagator(g, {free}, u0.label() + "+defect(0)");
  PositionFactor defect;
  defect.phase.assign(g.size(), cplx(1.0));
  for (const auto& s : sites) {
    if (static_cast<int>(s.size()) != g.dim()) throw std::invalid_argument("site dimension mismatch");
    std::size_t idx = 0;
    for (int j = 0; j < g.dim(); ++j) {
      const int k = s[j] + g.n() / 2;
      if (k < 0 || k >= g.n() || std::abs(g.x(k)) > g.guard_radius())
        throw PreconditionError("defect site outside the guard region");
      idx = idx * g.n() + static_cast<std::size_t>(k);
    }
    defect.phase[idx] = std::polar(1.0, -theta);
  }
  return Propagator(g, {free, defect}, u0.label() + "+defect");
}

State evolve(const FiberedPropagator& u0, const State& s, long n, double guard_tol) {
  State out = u0.power(s, n);
  check_guard(out, guard_tol);
  return out;
}

State evolve(const Propagator& u, const State& s, long n, double guard_tol) {
  State out = s;
  const long steps = n < 0 ? -n : n;
  for (long k = 0; k < steps; ++k) {
    out = n > 0 ? u.step(out) : u.step_inverse(out);
    check_guard(out, guard_tol);
  }
  return out;
}

double transport_identity_residual(const FiberedPropagator& u0, const State& phi, long n) {
  if (u0.comps() != 1) throw PreconditionError("transport identity is checked for scalar models");
  const State pm = as_rep(phi, Rep::momentum);
  const State back = u0.power(pm, -n);
  check_guard(back);
  const double nphi = norm(pm);
  double worst = 0.0;
  for (int j = 0; j < u0.grid().dim(); ++j) {
    const State lhs = u0.power(apply_position(back, j), n);
    State rhs = apply_position(pm, j);
    rhs -= cplx(static_cast<double>(n)) * u0.apply_velocity(pm, j);
    worst = std::max(worst, norm(lhs - rhs) / nphi);
  }
  return worst;
}

double trotter_transport_check(const FiberedPropagator& u0, const LocalisationFunction& f,
                               double nu, long n, const State& phi) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  const Grid& g = u0.grid();
  const int d = g.dim();
  const State pm = as_rep(phi, Rep::momentum);
  const State fwd = u0.power(pm, n);
  check_guard(fwd);
  const State lhs = u0.power(apply_position_function(f, 1.0 / nu, fwd), -n);

  State rhs = zeros_like(pm);
  std::vector<double> y(d);
  if (u0.kind() == ModelKind::shift || n == 0) {
    const std::vector<double> zero(d, 0.0);
    const auto v = u0.kind() == ModelKind::shift ? u0.velocity_at(zero) : zero;
    rhs = multiply(pm, Rep::position, [&](std::size_t i) {
      for (int j = 0; j < d; ++j) y[j] = nu * (g.coord(i, j, Rep::position) + n * v[j]);
      return cplx(f(y));
    });
  } else if (u0.kind() == ModelKind::laplacian) {
    // Q + 2nP = e^{-iQ^2/4n} (2nP) e^{iQ^2/4n}
    const double a = 1.0 / (4.0 * static_cast<double>(n));
    auto chirp = [&](double sign) {
      return [&g, d, a, sign](std::size_t i) {
        double x2 = 0.0;
        for (int j = 0; j < d; ++j) {
          const double x = g.coord(i, j, Rep::position);
          x2 += x * x;
        }
        return std::polar(1.0, sign * a * x2);
      };
    };
    State t = multiply(pm, Rep::position, chirp(+1.0));
    t = multiply(t, Rep::momentum, [&](std::size_t i) {
      for (int j = 0; j < d; ++j) y[j] = 2.0 * n * nu * g.coord(i, j, Rep::momentum);
      return cplx(f(y));
    });
    rhs = multiply(t, Rep::position, chirp(-1.0));
  } else {
    throw PreconditionError("no independent transported localisation for this model");
  }
  return norm(lhs - as_rep(rhs, Rep::momentum)) / norm(pm);
}

}  // namespace qtd
