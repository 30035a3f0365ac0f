#include "qtd/localisation.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qtd/bump.hpp"
#include "qtd/errors.hpp"

namespace qtd {
namespace {

double length(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

void require_nonzero(std::span<const double> x) {
  if (length(x) == 0.0) throw DomainError("averaged localisation is singular at the origin");
}

// Adaptive Gauss-Kronrod on [a, b] with absolute tolerance.
template <class F>
double integrate(F&& g, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, a, b, 20, tol, &err);
}

// Integration breakpoints in mu for a function with plateau 1 and support 1 + w.
std::vector<double> breakpoints(double rho, double w) {
  std::vector<double> pts{1.0 / rho, (1.0 + w) / rho, 1.0};
  std::sort(pts.begin(), pts.end());
  return pts;
}

}  // namespace

LocalisationFunction LocalisationFunction::custom(double w, Fn f, GradFn grad) {
  if (!(w > 0.0)) throw std::invalid_argument("transition width must be positive");
  LocalisationFunction out;
  out.w_ = w;
  out.radial_ = false;
  out.f_ = std::move(f);
  out.grad_ = std::move(grad);
  return out;
}

LocalisationFunction make_bump(double w) {
  if (!(w > 0.0)) throw std::invalid_argument("transition width must be positive");
  LocalisationFunction out;
  out.w_ = w;
  out.radial_ = true;
  out.f_ = [w](std::span<const double> x) { return smooth_step((length(x) - 1.0) / w); };
  out.grad_ = [w](std::span<const double> x) {
    const double rho = length(x);
    std::vector<double> g(x.size(), 0.0);
    if (rho <= 1.0 || rho >= 1.0 + w) return g;
    const double d = smooth_step_deriv((rho - 1.0) / w) / (w * rho);
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = d * x[j];
    return g;
  };
  return out;
}

double LocalisationFunction::operator()(std::span<const double> x) const { return f_(x); }

std::vector<double> LocalisationFunction::gradient(std::span<const double> x) const {
  return grad_(x);
}

double LocalisationFunction::profile(double rho) const {
  if (!radial_) throw std::logic_error("profile requested for a non-radial function");
  return smooth_step((rho - 1.0) / w_);
}

double LocalisationFunction::profile_deriv(double rho) const {
  if (!radial_) throw std::logic_error("profile requested for a non-radial function");
  return smooth_step_deriv((rho - 1.0) / w_) / w_;
}

LocalisationFunction LocalisationFunction::as_general() const {
  LocalisationFunction out = *this;
  out.radial_ = false;
  return out;
}

double averaged_localisation(const LocalisationFunction& f, std::span<const double> x) {
  require_nonzero(x);
  const double rho = length(x);
  const auto pts = breakpoints(rho, f.w());
  std::vector<double> y(x.size());
  auto integrand = [&](double mu) {
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = mu * x[j];
    const double chi = mu <= 1.0 ? 1.0 : 0.0;
    return (f(y) - chi) / mu;
  };
  // Below pts[0] both terms equal 1; above pts[2] both vanish.
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) acc += integrate(integrand, pts[k], pts[k + 1], 1e-12);
  return acc;
}

std::vector<double> grad_averaged_localisation(const LocalisationFunction& f,
                                               std::span<const double> x) {
  require_nonzero(x);
  std::vector<double> g(x.size());
  if (f.radial()) {
    double x2 = 0.0;
    for (double v : x) x2 += v * v;
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = -x[j] / x2;
    return g;
  }
  const double rho = length(x);
  const double a = 1.0 / rho;
  const double b = (1.0 + f.w()) / rho;
  std::vector<double> y(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    auto integrand = [&](double mu) {
      for (std::size_t k = 0; k < x.size(); ++k) y[k] = mu * x[k];
      return f.gradient(y)[j];
    };
    g[j] = integrate(integrand, a, b, 1e-13);
  }
  return g;
}

double lattice_sum_F(const LocalisationFunction& f, double nu, std::span<const double> x) {
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  require_nonzero(x);
  const double step = nu * length(x);
  const long nmax = static_cast<long>(std::floor((1.0 + f.w()) / step));
  std::vector<double> y(x.size());
  double acc = 0.0;
  // symmetric accumulation keeps F(nu, x) == F(nu, -x) bitwise
  for (long n = nmax; n >= 1; --n) {
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = nu * n * x[j];
    const double plus = f(y);
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = -nu * n * x[j];
    acc += plus + f(y);
  }
  std::fill(y.begin(), y.end(), 0.0);
  return acc + f(y);
}

}  // namespace qtd
