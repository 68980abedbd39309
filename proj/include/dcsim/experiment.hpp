#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcsim/fock.hpp"
#include "dcsim/phase.hpp"

namespace dcsim {

/// Raised when a quantity that must be real comes back with a sizeable imaginary part.
class InternalInconsistency : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised for a pattern with max + min == 0.
class UndefinedVisibility : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Slit { A, B };

inline const char* to_string(Slit s) { return s == Slit::A ? "a" : "b"; }

/// Two-slit registry: mode 0 is slit a, mode 1 is slit b.
inline constexpr std::size_t kSlitModes = 2;
inline constexpr std::size_t mode_of(Slit s) { return s == Slit::A ? 0 : 1; }

/// Double-slit layout. Slit a sits at transverse +d/2, slit b at -d/2, both on
/// the plane z = 0; detector points are (x, L). Lengths in metres, k in rad/m.
struct Geometry {
  double slit_separation{0.5e-3};
  double screen_distance{1.0};
  double source_distance{1.0};
  double wavenumber{2.0 * std::numbers::pi / 633e-9};

  static Geometry from_wavelength(double d, double L, double ds, double wavelength) {
    if (!(wavelength > 0.0)) throw std::invalid_argument("Geometry: wavelength must be > 0");
    return Geometry{d, L, ds, 2.0 * std::numbers::pi / wavelength};
  }
};

/// `allow_coincident_slits` admits d == 0, used only for the degenerate flat density.
inline void validate(const Geometry& g, bool allow_coincident_slits = false) {
  const bool separation_ok = allow_coincident_slits ? g.slit_separation >= 0.0 : g.slit_separation > 0.0;
  if (!separation_ok || !std::isfinite(g.slit_separation))
    throw std::invalid_argument("Geometry: slit separation must be > 0");
  if (!(g.screen_distance > 0.0) || !std::isfinite(g.screen_distance))
    throw std::invalid_argument("Geometry: screen distance must be > 0");
  if (!(g.source_distance >= 0.0) || !std::isfinite(g.source_distance))
    throw std::invalid_argument("Geometry: source distance must be >= 0");
  if (!(g.wavenumber > 0.0) || !std::isfinite(g.wavenumber))
    throw std::invalid_argument("Geometry: wavenumber must be > 0");
}

/// Fringe spacing near the axis, 2*pi*L / (k*d).
inline double paraxial_fringe_period(const Geometry& g) {
  return 2.0 * std::numbers::pi * g.screen_distance / (g.wavenumber * g.slit_separation);
}

struct SourceParams {
  double epsilon{0.1};
  double phi_a{0.0};
  double phi_b{0.0};
};

inline void validate(const SourceParams& sp) {
  if (!(sp.epsilon > 0.0) || !std::isfinite(sp.epsilon))
    throw std::invalid_argument("SourceParams: epsilon must be > 0");
  if (!std::isfinite(sp.phi_a) || !std::isfinite(sp.phi_b))
    throw std::invalid_argument("SourceParams: phases must be finite");
}

struct PatternPoint {
  double x;
  double p;
};

/// Detection probability over an increasing set of screen coordinates.
/// Values are raw expectation values and are not clamped here.
struct Pattern {
  std::vector<PatternPoint> points;

  std::size_t size() const { return points.size(); }
};

inline void require_increasing(const std::vector<double>& grid) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
  }
  for (double x : grid) {
    if (!std::isfinite(x)) throw std::invalid_argument("grid contains a non-finite coordinate");
  }
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw std::invalid_argument("linspace: need at least 2 points");
  if (!(hi > lo)) throw std::invalid_argument("linspace: need lo < hi");
  std::vector<double> out(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

/// |vac> + (eps/sqrt2)(e^{i phi_a}|1,0> + e^{i phi_b}|0,1>); squared norm 1 + eps^2.
inline StateVector source_state(const SourceParams& sp) {
  validate(sp);
  const double w = sp.epsilon / std::numbers::sqrt2;
  StateVector s = vacuum(kSlitModes);
  s.add({1, 0}, std::polar(w, sp.phi_a));
  s.add({0, 1}, std::polar(w, sp.phi_b));
  return s;
}

/// Euclidean distance from the given slit to the detector point (x, L).
inline double path_length(const Geometry& g, Slit slit, double x) {
  const double half = 0.5 * g.slit_separation;
  const double dx = slit == Slit::A ? x - half : x + half;
  return std::hypot(g.screen_distance, dx);
}

/// E+(x) = a exp(ik[ds + d_ax]) + b exp(ik[ds + d_bx]).
inline OperatorExpression screen_field_operator(const Geometry& g, double x) {
  validate(g);
  OperatorExpression e(kSlitModes);
  e.add_term({phase_factor(g.wavenumber, g.source_distance, path_length(g, Slit::A, x)), {annihilate(0)}});
  e.add_term({phase_factor(g.wavenumber, g.source_distance, path_length(g, Slit::B, x)), {annihilate(1)}});
  return e;
}

/// Default aperture position for a telescope: straight behind its slit.
inline double default_aperture(const Geometry& g, Slit slit) {
  return slit == Slit::A ? 0.5 * g.slit_separation : -0.5 * g.slit_separation;
}

/// Ideal telescope focused on one slit: a single annihilator for that slit's
/// mode, phased by the path to the aperture position.
inline OperatorExpression telescope_field_operator(const Geometry& g, Slit slit,
                                                   std::optional<double> aperture = std::nullopt) {
  validate(g);
  const double pos = aperture.value_or(default_aperture(g, slit));
  if (!std::isfinite(pos)) throw std::invalid_argument("telescope aperture position must be finite");
  return OperatorExpression::single(kSlitModes, annihilate(mode_of(slit)),
                                    phase_factor(g.wavenumber, g.source_distance, path_length(g, slit, pos)));
}

inline constexpr double kImagTolerance = 1e-9;

/// Real part of a value that should be real; a residual imaginary part above
/// kImagTolerance means the operator algebra went wrong somewhere.
inline double checked_real(Complex value, const char* where) {
  if (!(std::abs(value.imag()) <= kImagTolerance)) {
    throw InternalInconsistency(std::string(where) + ": imaginary part " + std::to_string(value.imag()));
  }
  return value.real();
}

/// <E- E+> in state `s`, where E- is the adjoint of `e_plus`.
inline double detection_probability(const OperatorExpression& e_plus, const StateVector& s) {
  return checked_real(expectation(adjoint(e_plus) * e_plus, s), "detection_probability");
}

/// eps^2 (1 + cos(k[d_ax - d_bx] + phi_a - phi_b)).
inline double closed_form_screen_probability(const Geometry& g, const SourceParams& sp, double x) {
  validate(g, true);
  validate(sp);
  // d_ax and d_bx are within a factor of two of each other, so the difference is exact.
  const double diff = path_length(g, Slit::A, x) - path_length(g, Slit::B, x);
  const double arg = reduced_phase(g.wavenumber, diff) + (sp.phi_a - sp.phi_b);
  return sp.epsilon * sp.epsilon * (1.0 + std::cos(arg));
}

/// Operator-path screen pattern over `x_grid`.
inline Pattern screen_pattern(const Geometry& g, const SourceParams& sp, const std::vector<double>& x_grid) {
  require_increasing(x_grid);
  const StateVector psi = source_state(sp);
  Pattern out;
  out.points.reserve(x_grid.size());
  for (double x : x_grid) out.points.push_back({x, detection_probability(screen_field_operator(g, x), psi)});
  return out;
}

inline Pattern closed_form_pattern(const Geometry& g, const SourceParams& sp, const std::vector<double>& x_grid) {
  require_increasing(x_grid);
  Pattern out;
  out.points.reserve(x_grid.size());
  for (double x : x_grid) out.points.push_back({x, closed_form_screen_probability(g, sp, x)});
  return out;
}

/// Telescope probability sampled at each grid point used as the aperture position.
inline Pattern telescope_pattern(const Geometry& g, const SourceParams& sp, Slit slit,
                                 const std::vector<double>& x_grid) {
  require_increasing(x_grid);
  const StateVector psi = source_state(sp);
  Pattern out;
  out.points.reserve(x_grid.size());
  for (double x : x_grid) out.points.push_back({x, detection_probability(telescope_field_operator(g, slit, x), psi)});
  return out;
}

/// (max - min) / (max + min).
inline double fringe_visibility(const Pattern& p) {
  if (p.size() < 2) throw std::invalid_argument("fringe_visibility: need at least 2 points");
  auto [lo, hi] = std::minmax_element(p.points.begin(), p.points.end(),
                                      [](const PatternPoint& a, const PatternPoint& b) { return a.p < b.p; });
  const double sum = hi->p + lo->p;
  if (!(sum > 0.0)) throw UndefinedVisibility("fringe_visibility: max + min is not positive");
  return (hi->p - lo->p) / sum;
}

}  // namespace dcsim
