#pragma once

#include <cmath>

namespace qtd {

// exp(1 - 1/(1 - s^2)) on |s| < 1, zero outside; equals 1 at s = 0.
inline double bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

// C-infinity step falling from 1 at s <= 0 to 0 at s >= 1, flat at both ends.
inline double smooth_step(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - s));
  const double b = std::exp(-1.0 / s);
  return a / (a + b);
}

inline double smooth_step_deriv(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - s));
  const double b = std::exp(-1.0 / s);
  const double q = a + b;
  return -a * b * (1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / (s * s)) / (q * q);
}

}  // namespace qtd
