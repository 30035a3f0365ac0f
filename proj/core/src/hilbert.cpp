#include "qtd/hilbert.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "fft.hpp"

namespace qtd {
namespace {

bool is_pow2(int n) { return n >= 4 && (n & (n - 1)) == 0; }

// (-1)^{sum_j k_j} for the flat index
int parity(const Grid& g, std::size_t idx) {
  int s = 0;
  for (int j = g.dim() - 1; j >= 0; --j) {
    s += static_cast<int>(idx % g.n());
    idx /= g.n();
  }
  return (s & 1) ? -1 : 1;
}

void require_same(const State& a, const State& b) {
  if (!(a.grid() == b.grid()) || a.comps() != b.comps())
    throw GridMismatch("states live on different grids");
  if (a.rep() != b.rep()) throw RepresentationError("states carry different representations");
}

State transform(const State& s, Rep to) {
  const Grid& g = s.grid();
  State out = s;
  auto data = out.data();
  const std::size_t np = g.size();
  for (int c = 0; c < s.comps(); ++c)
    for (std::size_t i = 0; i < np; ++i)
      if (parity(g, i) < 0) data[c * np + i] = -data[c * np + i];
  const int sign = to == Rep::momentum ? -1 : +1;
  detail::fft_inplace(data, g.dim(), g.n(), s.comps(), sign);
  const double w = to == Rep::momentum ? g.h() : g.dp();
  const double scale = std::pow(w / std::sqrt(2.0 * std::numbers::pi), g.dim());
  for (int c = 0; c < s.comps(); ++c)
    for (std::size_t i = 0; i < np; ++i)
      data[c * np + i] *= parity(g, i) < 0 ? -scale : scale;
  return State(g, s.comps(), to, std::vector<cplx>(data.begin(), data.end()));
}

}  // namespace

Grid::Grid(int d, int n, double h, double guard_fraction)
    : d_(d), n_(n), h_(h), guard_(guard_fraction), size_(1) {
  if (d < 1) throw std::invalid_argument("grid dimension must be positive");
  if (!is_pow2(n)) throw std::invalid_argument("points per axis must be a power of two >= 4");
  if (!(h > 0.0)) throw std::invalid_argument("grid spacing must be positive");
  if (!(guard_fraction > 0.0 && guard_fraction <= 1.0))
    throw std::invalid_argument("guard fraction must lie in (0, 1]");
  for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(n);
}

double Grid::dp() const { return 2.0 * std::numbers::pi / (n_ * h_); }
double Grid::p_max() const { return std::numbers::pi / h_; }

int Grid::axis_index(std::size_t idx, int axis) const {
  for (int j = d_ - 1; j > axis; --j) idx /= n_;
  return static_cast<int>(idx % n_);
}

double Grid::coord(std::size_t idx, int axis, Rep rep) const {
  int k = axis_index(idx, axis);
  return rep == Rep::position ? x(k) : p(k);
}

double Grid::cell(Rep rep) const { return std::pow(rep == Rep::position ? h_ : dp(), d_); }

State::State(Grid grid, int comps, Rep rep)
    : grid_(grid), comps_(comps), rep_(rep), amps_(grid.size() * comps) {
  if (comps < 1) throw std::invalid_argument("component count must be positive");
}

State::State(Grid grid, int comps, Rep rep, std::vector<cplx> amps)
    : grid_(grid), comps_(comps), rep_(rep), amps_(std::move(amps)) {
  if (comps < 1) throw std::invalid_argument("component count must be positive");
  if (amps_.size() != grid_.size() * comps) throw std::invalid_argument("amplitude count mismatch");
}

State& State::operator+=(const State& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] += o.amps_[i];
  return *this;
}

State& State::operator-=(const State& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] -= o.amps_[i];
  return *this;
}

State& State::operator*=(cplx s) {
  for (auto& a : amps_) a *= s;
  return *this;
}

State operator+(State a, const State& b) { return a += b; }
State operator-(State a, const State& b) { return a -= b; }
State operator*(cplx s, State a) { return a *= s; }

State to_momentum(const State& s) {
  if (s.rep() != Rep::position) throw RepresentationError("to_momentum expects a position state");
  return transform(s, Rep::momentum);
}

State to_position(const State& s) {
  if (s.rep() != Rep::momentum) throw RepresentationError("to_position expects a momentum state");
  return transform(s, Rep::position);
}

State as_rep(const State& s, Rep rep) {
  if (s.rep() == rep) return s;
  return rep == Rep::momentum ? to_momentum(s) : to_position(s);
}

double norm2(const State& s) {
  double acc = 0.0;
  for (const auto& a : s.amps()) acc += std::norm(a);
  return acc * s.grid().cell(s.rep());
}

double norm(const State& s) { return std::sqrt(norm2(s)); }

cplx inner(const State& a, const State& b) {
  require_same(a, b);
  cplx acc = 0.0;
  auto x = a.amps();
  auto y = b.amps();
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc * a.grid().cell(a.rep());
}

State apply_position_function(const PositionFn& g, double r, const State& s) {
  State out = as_rep(s, Rep::position);
  const Grid& grid = out.grid();
  std::vector<double> y(grid.dim());
  auto data = out.data();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int j = 0; j < grid.dim(); ++j) y[j] = grid.coord(i, j, Rep::position) / r;
    const double v = g(y);
    for (int c = 0; c < out.comps(); ++c) data[c * grid.size() + i] *= v;
  }
  return out;
}

double weighted_norm(const State& s, double t) {
  State ps = as_rep(s, Rep::position);
  const Grid& g = ps.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double q2 = 0.0;
    for (int j = 0; j < g.dim(); ++j) {
      const double x = g.coord(i, j, Rep::position);
      q2 += x * x;
    }
    const double w = std::pow(1.0 + q2, t);
    for (int c = 0; c < ps.comps(); ++c) acc += w * std::norm(ps(c, i));
  }
  return std::sqrt(acc * g.cell(Rep::position));
}

State apply_position(const State& s, int axis) {
  const Grid& g = s.grid();
  if (axis < 0 || axis >= g.dim()) throw std::out_of_range("axis out of range");
  State out = multiply(s, Rep::position,
                       [&](std::size_t i) { return cplx(g.coord(i, axis, Rep::position)); });
  return as_rep(out, s.rep());
}

State multiply(const State& s, Rep rep, const std::function<cplx(std::size_t)>& m) {
  State out = as_rep(s, rep);
  const std::size_t np = out.points();
  auto data = out.data();
  for (std::size_t i = 0; i < np; ++i) {
    const cplx f = m(i);
    for (int c = 0; c < out.comps(); ++c) data[c * np + i] *= f;
  }
  return out;
}

std::vector<double> mean_position(const State& s) {
  State ps = as_rep(s, Rep::position);
  const Grid& g = ps.grid();
  std::vector<double> mean(g.dim(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double w = 0.0;
    for (int c = 0; c < ps.comps(); ++c) w += std::norm(ps(c, i));
    total += w;
    for (int j = 0; j < g.dim(); ++j) mean[j] += w * g.coord(i, j, Rep::position);
  }
  for (auto& m : mean) m /= total;
  return mean;
}

double position_spread(const State& s) {
  State ps = as_rep(s, Rep::position);
  const Grid& g = ps.grid();
  const auto mean = mean_position(ps);
  double var = 0.0, total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double w = 0.0;
    for (int c = 0; c < ps.comps(); ++c) w += std::norm(ps(c, i));
    total += w;
    for (int j = 0; j < g.dim(); ++j) {
      const double dx = g.coord(i, j, Rep::position) - mean[j];
      var += w * dx * dx;
    }
  }
  return std::sqrt(var / total);
}

double guard_leak(const State& s) {
  State ps = as_rep(s, Rep::position);
  const Grid& g = ps.grid();
  const double lg = g.guard_radius();
  double out = 0.0, total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double w = 0.0;
    for (int c = 0; c < ps.comps(); ++c) w += std::norm(ps(c, i));
    total += w;
    for (int j = 0; j < g.dim(); ++j) {
      if (std::abs(g.coord(i, j, Rep::position)) > lg) {
        out += w;
        break;
      }
    }
  }
  return total > 0.0 ? out / total : 0.0;
}

void check_guard(const State& s, double tol) {
  const double leak = guard_leak(s);
  if (leak > tol) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "mass %.3e outside guard radius", leak);
    throw TruncationError(buf);
  }
}

State zeros_like(const State& s) { return State(s.grid(), s.comps(), s.rep()); }

}  // namespace qtd
