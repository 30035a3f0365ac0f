#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qtd/hilbert.hpp"

namespace qtd {

class LocalisationFunction;

enum class ModelKind { shift, laplacian, coined_walk };

// Row-major 2x2 complex matrix.
using Mat2 = std::array<cplx, 4>;

struct Eigen2 {
  std::array<cplx, 2> value;
  std::array<std::array<cplx, 2>, 2> vector;  // vector[b] is the eigenvector of value[b]
};

Eigen2 eigen_unitary2(const Mat2& m);

// Free propagator diagonal in momentum: scalar fiber e^{-i omega(p)} or, for the
// coined walk, a 2x2 unitary per momentum.
class FiberedPropagator {
 public:
  struct Impl;

  const Grid& grid() const;
  int comps() const;
  int bands() const { return comps(); }
  ModelKind kind() const;
  const std::string& label() const;

  // Scalar models only: quasi-energy omega(p) and analytic velocity at any p.
  double omega(std::span<const double> p) const;
  std::vector<double> velocity_at(std::span<const double> p) const;
  // Coined walk only: fiber matrix at momentum p.
  Mat2 fiber(double p) const;

  // Grid tables. For the coined walk `band` selects an eigenpair of the fiber.
  double velocity(int axis, std::size_t idx, int band = 0) const;
  double speed(std::size_t idx, int band = 0) const;
  cplx eigenvalue(std::size_t idx, int band = 0) const;
  const Eigen2& eigen(std::size_t idx) const;

  // V' = vprime_scale * identity; empty when no closed form is implemented.
  std::optional<double> vprime_scale() const;

  // U0^n applied in momentum space; output is momentum represented.
  State power(const State& s, long n) const;
  // U0(x) = e^{-ix.Q} U0 e^{ix.Q}, applied through its fiber u0(p + x).
  State conjugated(const State& s, std::span<const double> x) const;
  // Velocity component V_j, through the fiber spectral decomposition.
  State apply_velocity(const State& s, int axis) const;
  // Applies a real function of the fiber velocity (all axes) per band.
  State apply_velocity_function(const State& s,
                                const std::function<double(std::span<const double>)>& g) const;

  explicit FiberedPropagator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

FiberedPropagator build_free_shift(const Grid& grid, std::vector<double> v);
FiberedPropagator build_free_laplacian(const Grid& grid);
#if defined(QTD_WITH_COINED_WALK)
FiberedPropagator build_coined_walk(const Grid& grid, const Mat2& coin);
#endif

enum class VelocityMethod { analytic, finite_difference };

struct VelocityTable {
  int dim = 0;
  int bands = 0;
  std::size_t points = 0;
  std::vector<double> data;  // [(axis * bands + band) * points + idx]
  double at(int axis, int band, std::size_t idx) const {
    return data[(static_cast<std::size_t>(axis) * bands + band) * points + idx];
  }
};

VelocityTable velocity_operator(const FiberedPropagator& u0, VelocityMethod method,
                                double step = 1e-3);

// Arc of the unit circle: angles in [start, start + length], radians.
struct Arc {
  double start = 0.0;
  double length = 0.0;
  bool contains(double angle) const;
  bool overlaps(const Arc& o) const;
};

struct CriticalSet {
  std::vector<Arc> arcs;
  double v_min = 0.0;
  bool contains(double angle) const;
  bool overlaps(const Arc& window) const;
};

// Angle of the spectral point u0(p) (or of a band eigenvalue) in [0, 2 pi).
double spectral_angle(const FiberedPropagator& u0, std::size_t idx, int band = 0);

CriticalSet critical_values(const FiberedPropagator& u0, double v_min);

// Smallest speed over the momentum support of the state, ignoring a slow fraction of
// at most rel_mass of its mass (numerical leakage).
double velocity_floor(const FiberedPropagator& u0, const State& s, double rel_mass = 1e-14);
// Momentum mass of the state where the speed falls below v_min, relative to its norm.
double slow_mass(const FiberedPropagator& u0, const State& s, double v_min);
// Throws DomainError if more than tol of the mass lies below the velocity floor.
void check_admissible(const FiberedPropagator& u0, const State& s, double v_min, double tol = 1e-14);

struct PositionFactor {
  std::vector<cplx> phase;  // unit modulus per site, shared by all components
};

// Unitary given by factors applied in order: U = F_k ... F_2 F_1.
class Propagator {
 public:
  using Factor = std::variant<PositionFactor, std::shared_ptr<const FiberedPropagator>>;

  Propagator(Grid grid, std::vector<Factor> factors, std::string label);

  const Grid& grid() const { return grid_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::string& label() const { return label_; }

  State step(const State& s) const;
  State step_inverse(const State& s) const;

 private:
  Grid grid_;
  std::vector<Factor> factors_;
  std::string label_;
};

// Real potential values on the lattice.
std::vector<double> smooth_well(const Grid& grid, double depth, double width,
                                std::span<const double> center);

Propagator build_full_split_step(const FiberedPropagator& u0, const std::vector<double>& w);
// Sites are integer lattice coordinates relative to the origin.
Propagator build_phase_defect(const FiberedPropagator& u0, double theta,
                              const std::vector<std::vector<int>>& sites);
// U = U0 wrapped as a one-factor propagator.
Propagator as_propagator(const FiberedPropagator& u0);

State evolve(const FiberedPropagator& u0, const State& s, long n, double guard_tol = 1e-10);
State evolve(const Propagator& u, const State& s, long n, double guard_tol = 1e-10);

double transport_identity_residual(const FiberedPropagator& u0, const State& phi, long n);
double trotter_transport_check(const FiberedPropagator& u0, const LocalisationFunction& f,
                               double nu, long n, const State& phi);

}  // namespace qtd
