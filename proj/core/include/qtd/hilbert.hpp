#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "qtd/errors.hpp"

namespace qtd {

using cplx = std::complex<double>;

enum class Rep { position, momentum };

// Periodic d-dimensional lattice with N points per axis and spacing h.
// Positions x_k = (k - N/2) h, momenta p_m = (m - N/2) 2pi/(N h).
class Grid {
 public:
  Grid(int d, int n, double h, double guard_fraction = 0.9);

  int dim() const { return d_; }
  int n() const { return n_; }
  double h() const { return h_; }
  double dp() const;
  double guard_fraction() const { return guard_; }
  double guard_radius() const { return guard_ * 0.5 * n_ * h_; }
  double p_max() const;
  std::size_t size() const { return size_; }

  double x(int k) const { return (k - n_ / 2) * h_; }
  double p(int m) const { return (m - n_ / 2) * dp(); }
  int axis_index(std::size_t idx, int axis) const;
  double coord(std::size_t idx, int axis, Rep rep) const;
  // integration weight of one lattice cell in the given representation
  double cell(Rep rep) const;

  bool operator==(const Grid& o) const {
    return d_ == o.d_ && n_ == o.n_ && h_ == o.h_ && guard_ == o.guard_;
  }

 private:
  int d_;
  int n_;
  double h_;
  double guard_;
  std::size_t size_;
};

// Amplitudes are stored component-major: amp[c * size + idx].
class State {
 public:
  State(Grid grid, int comps, Rep rep);
  State(Grid grid, int comps, Rep rep, std::vector<cplx> amps);

  const Grid& grid() const { return grid_; }
  int comps() const { return comps_; }
  Rep rep() const { return rep_; }
  std::size_t points() const { return grid_.size(); }

  std::span<const cplx> amps() const { return amps_; }
  std::span<cplx> data() { return amps_; }
  cplx operator()(int c, std::size_t idx) const { return amps_[c * points() + idx]; }
  cplx& operator()(int c, std::size_t idx) { return amps_[c * points() + idx]; }

  State& operator+=(const State& o);
  State& operator-=(const State& o);
  State& operator*=(cplx s);

 private:
  Grid grid_;
  int comps_;
  Rep rep_;
  std::vector<cplx> amps_;
};

State operator+(State a, const State& b);
State operator-(State a, const State& b);
State operator*(cplx s, State a);

State to_momentum(const State& s);
State to_position(const State& s);
// Converts only if needed.
State as_rep(const State& s, Rep rep);

double norm2(const State& s);
double norm(const State& s);
cplx inner(const State& a, const State& b);

// Pointwise multiplication by g(x / r); the result is in position representation.
// A momentum-tagged input is transformed first.
using PositionFn = std::function<double(std::span<const double>)>;
State apply_position_function(const PositionFn& g, double r, const State& s);

// ||<Q>^t phi|| with <Q> = (1 + Q^2)^{1/2}.
double weighted_norm(const State& s, double t);

// Q_j phi, returned in the representation of the input.
State apply_position(const State& s, int axis);

// Pointwise multiplier evaluated on the flat grid index, in the given representation.
State multiply(const State& s, Rep rep, const std::function<cplx(std::size_t)>& m);

// <Q_j> / ||phi||^2 and the total position spread sqrt(sum_j Var Q_j).
std::vector<double> mean_position(const State& s);
double position_spread(const State& s);

// Relative position-space mass outside the guard radius.
double guard_leak(const State& s);
void check_guard(const State& s, double tol = 1e-10);

State zeros_like(const State& s);

struct WavepacketSpec {
  std::vector<double> center;
  std::vector<double> p_lo;
  std::vector<double> p_hi;
  // momentum spread of the Gaussian envelope; zero gives a pure bump profile
  double sigma_p = 0.0;
  std::vector<cplx> polarization{1.0, 0.0};
};

// Normalised packet with a compactly supported C-infinity momentum profile,
// returned in momentum representation.
State make_wavepacket(const Grid& grid, const WavepacketSpec& spec, int comps = 1);

// Relative momentum mass inside the packet window.
double window_mass(const State& s, const WavepacketSpec& spec);

}  // namespace qtd
