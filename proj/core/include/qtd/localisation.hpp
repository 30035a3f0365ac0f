#pragma once

#include <functional>
#include <span>
#include <vector>

namespace qtd {

// f = 1 on the closed unit ball, f = 0 for |x| >= 1 + w, even, values in [0, 1].
class LocalisationFunction {
 public:
  using Fn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<std::vector<double>(std::span<const double>)>;

  // Caller guarantees the plateau/support/evenness contract.
  static LocalisationFunction custom(double w, Fn f, GradFn grad);

  double w() const { return w_; }
  bool radial() const { return radial_; }
  double operator()(std::span<const double> x) const;
  std::vector<double> gradient(std::span<const double> x) const;
  // Radial profile F with f(x) = F(|x|); radial functions only.
  double profile(double rho) const;
  double profile_deriv(double rho) const;

  // Same function with the radial shortcut disabled, so quadrature paths run.
  LocalisationFunction as_general() const;

 private:
  friend LocalisationFunction make_bump(double w);
  LocalisationFunction() = default;

  double w_ = 1.0;
  bool radial_ = true;
  Fn f_;
  GradFn grad_;
};

LocalisationFunction make_bump(double w = 1.0);

// R_f(x) = int_0^inf dmu/mu (f(mu x) - chi_[0,1](mu)).
double averaged_localisation(const LocalisationFunction& f, std::span<const double> x);
std::vector<double> grad_averaged_localisation(const LocalisationFunction& f,
                                               std::span<const double> x);

// sum_n f(nu n x), exact finite sum.
double lattice_sum_F(const LocalisationFunction& f, double nu, std::span<const double> x);

}  // namespace qtd
