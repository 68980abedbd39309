#pragma once

#include <cmath>
#include <complex>

namespace dcsim {

/// Optical phase k * length reduced into [-pi, pi].
///
/// Wavenumbers of 1e6..1e8 rad/m times metre-scale distances give raw phases
/// near 1e9 rad, where a plain double product already loses ~1e-7 rad. The
/// product is formed exactly with fma and reduced against a two-word 2*pi, so
/// the result carries absolute error ~1e-15 rad for the given double inputs.
/// `length_lo` is an optional low-order word of the length (double-double).
inline double reduced_phase(double k, double length_hi, double length_lo = 0.0) {
  constexpr double two_pi_hi = 6.283185307179586232;      // nearest double to 2*pi
  constexpr double two_pi_lo = 2.4492935982947064e-16;    // 2*pi - two_pi_hi
  constexpr double inv_two_pi = 0.15915494309189535;

  const double p = k * length_hi;
  const double p_err = std::fma(k, length_hi, -p) + k * length_lo;
  const double n = std::nearbyint(p * inv_two_pi);
  double r = std::fma(-n, two_pi_hi, p);
  r -= n * two_pi_lo;
  r += p_err;
  return std::remainder(r, 2.0 * 3.14159265358979323846);
}

/// exp(i * k * (a + b)) with the sum carried in double-double.
inline std::complex<double> phase_factor(double k, double a, double b = 0.0) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return std::polar(1.0, reduced_phase(k, s, err));
}

}  // namespace dcsim
