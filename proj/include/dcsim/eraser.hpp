#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dcsim/experiment.hpp"

namespace dcsim::eraser {

enum class Polarization { H, V };

/// Four-mode registry, slit-major:
///   0 = (a, H), 1 = (a, V), 2 = (b, H), 3 = (b, V)
inline constexpr std::size_t kTaggedModes = 4;

inline constexpr std::size_t tagged_mode(Slit slit, Polarization pol) {
  return (slit == Slit::A ? 0 : 2) + (pol == Polarization::H ? 0 : 1);
}

/// Linear analyzer in front of the screen detector. Absent means no analyzer:
/// the detector registers both polarizations.
struct AnalyzerSetting {
  std::optional<double> angle;

  static AnalyzerSetting absent() { return {}; }
  static AnalyzerSetting at(double theta) {
    if (!(theta >= 0.0 && theta < std::numbers::pi)) throw std::invalid_argument("analyzer angle must lie in [0, pi)");
    return {theta};
  }
};

/// Source with slit a marked `tag_a` and slit b marked `tag_b`. The default
/// (H, V) marks the paths orthogonally.
inline StateVector tagged_source_state(const SourceParams& sp, Polarization tag_a = Polarization::H,
                                       Polarization tag_b = Polarization::V) {
  validate(sp);
  const double w = sp.epsilon / std::numbers::sqrt2;
  const StateVector vac = vacuum(kTaggedModes);
  StateVector s = vac;
  s += std::polar(w, sp.phi_a) * apply_ladder(create(tagged_mode(Slit::A, tag_a)), vac);
  s += std::polar(w, sp.phi_b) * apply_ladder(create(tagged_mode(Slit::B, tag_b)), vac);
  return s;
}

/// Screen field restricted to one polarization:
/// a_pol exp(ik[ds + d_ax]) + b_pol exp(ik[ds + d_bx]).
inline OperatorExpression polarized_field_operator(const Geometry& g, double x, Polarization pol) {
  validate(g);
  OperatorExpression e(kTaggedModes);
  e.add_term({phase_factor(g.wavenumber, g.source_distance, path_length(g, Slit::A, x)),
              {annihilate(tagged_mode(Slit::A, pol))}});
  e.add_term({phase_factor(g.wavenumber, g.source_distance, path_length(g, Slit::B, x)),
              {annihilate(tagged_mode(Slit::B, pol))}});
  return e;
}

/// Detector field behind the analyzer. With an analyzer at theta this is a
/// single operator cos(theta) E_H + sin(theta) E_V; without one it is the pair
/// (E_H, E_V), whose probabilities add.
struct AnalyzedField {
  std::vector<OperatorExpression> outcomes;
};

inline AnalyzedField analyzed_field_operator(const Geometry& g, double x, const AnalyzerSetting& setting) {
  auto h = polarized_field_operator(g, x, Polarization::H);
  auto v = polarized_field_operator(g, x, Polarization::V);
  if (!setting.angle) return {{std::move(h), std::move(v)}};
  const double theta = *setting.angle;
  return {{Complex{std::cos(theta), 0.0} * std::move(h) + Complex{std::sin(theta), 0.0} * std::move(v)}};
}

inline double analyzed_probability(const AnalyzedField& field, const StateVector& s) {
  double total = 0.0;
  for (const auto& e : field.outcomes) total += detection_probability(e, s);
  return total;
}

inline Pattern analyzed_pattern(const Geometry& g, const StateVector& tagged, const std::vector<double>& x_grid,
                                const AnalyzerSetting& setting) {
  require_increasing(x_grid);
  Pattern out;
  out.points.reserve(x_grid.size());
  for (double x : x_grid) out.points.push_back({x, analyzed_probability(analyzed_field_operator(g, x, setting), tagged)});
  return out;
}

struct EraserPatterns {
  Pattern marked;           // no analyzer
  Pattern erased_diag;      // analyzer at pi/4
  Pattern erased_antidiag;  // analyzer at 3pi/4
};

inline EraserPatterns eraser_patterns(const Geometry& g, const SourceParams& sp, const std::vector<double>& x_grid) {
  const StateVector tagged = tagged_source_state(sp);
  return {
      analyzed_pattern(g, tagged, x_grid, AnalyzerSetting::absent()),
      analyzed_pattern(g, tagged, x_grid, AnalyzerSetting::at(std::numbers::pi / 4)),
      analyzed_pattern(g, tagged, x_grid, AnalyzerSetting::at(3 * std::numbers::pi / 4)),
  };
}

/// Largest |diag + antidiag - marked| over the grid.
inline double complementarity_residual(const EraserPatterns& p) {
  if (p.marked.size() != p.erased_diag.size() || p.marked.size() != p.erased_antidiag.size())
    throw std::invalid_argument("complementarity_residual: pattern sizes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < p.marked.size(); ++i) {
    const double r = p.erased_diag.points[i].p + p.erased_antidiag.points[i].p - p.marked.points[i].p;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace dcsim::eraser
