#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dcsim/experiment.hpp"

using namespace dcsim;

namespace {

Geometry random_geometry(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.1e-3, 2e-3), L(0.5, 5.0), ds(0.0, 2.0), logk(6.0, 8.0);
  return Geometry{d(rng), L(rng), ds(rng), std::pow(10.0, logk(rng))};
}

std::vector<double> fringe_grid(const Geometry& g, double periods, std::size_t n) {
  const double half = 0.5 * periods * paraxial_fringe_period(g);
  return linspace(-half, half, n);
}

}  // namespace

TEST(SourceState, AmplitudesAndNorm) {
  const auto s = source_state({0.2, 0.0, 0.0});
  EXPECT_EQ(s.amplitude({0, 0}), Complex(1.0, 0.0));
  EXPECT_NEAR(s.amplitude({1, 0}).real(), 0.14142135623730950, 1e-16);
  EXPECT_NEAR(s.amplitude({0, 1}).real(), 0.14142135623730950, 1e-16);

  const auto flipped = source_state({0.2, std::numbers::pi, 0.0});
  EXPECT_NEAR(flipped.amplitude({1, 0}).real(), -0.14142135623730950, 1e-16);

  const auto unit = source_state({1.0, 0.3, 0.9});
  double brute = 0.0;
  for (const auto& [b, a] : unit.terms()) brute += std::norm(a);
  EXPECT_NEAR(brute, 2.0, 1e-15);
  EXPECT_NEAR(unit.norm2(), 2.0, 1e-15);
}

TEST(SourceState, RejectsNonPositiveEpsilon) {
  EXPECT_THROW(source_state({0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(source_state({-0.1, 0.0, 0.0}), std::invalid_argument);
}

TEST(PathLength, Examples) {
  const Geometry g{1e-3, 1.0, 1.0, 1e7};
  EXPECT_EQ(path_length(g, Slit::A, 0.0), path_length(g, Slit::B, 0.0));
  EXPECT_NEAR(path_length(g, Slit::A, 0.0), std::sqrt(1.0 + 0.25e-6), 1e-15);
  // sqrt(1 + 0.0095^2), evaluated to 30 digits offline
  EXPECT_NEAR(path_length(g, Slit::A, 0.01), 1.0000451239819131, 1e-15);

  Geometry coincident = g;
  coincident.slit_separation = 0.0;
  for (double x : {-0.3, 0.0, 0.02, 1.5}) EXPECT_EQ(path_length(coincident, Slit::A, x), path_length(coincident, Slit::B, x));
}

TEST(ScreenFieldOperator, SymmetricPointHasEqualCoefficients) {
  const Geometry g{};
  const auto e = screen_field_operator(g, 0.0);
  ASSERT_EQ(e.terms().size(), 2u);
  EXPECT_EQ(e.terms()[0].coefficient, e.terms()[1].coefficient);
  EXPECT_EQ(e.terms()[0].factors, std::vector<LadderOp>{annihilate(0)});
  EXPECT_EQ(e.terms()[1].factors, std::vector<LadderOp>{annihilate(1)});
  const double path = g.source_distance + std::sqrt(g.screen_distance * g.screen_distance +
                                                    0.25 * g.slit_separation * g.slit_separation);
  const Complex expected = std::polar(1.0, std::remainder(g.wavenumber * path, 2 * std::numbers::pi));
  // the naive product carries ~1e-7 rad of rounding at this phase magnitude
  EXPECT_LT(std::abs(e.terms()[0].coefficient - expected), 1e-6);
}

TEST(ScreenFieldOperator, HalfWaveDifferenceFlipsSign) {
  Geometry g{};
  // pick k so that k (d_ax - d_bx) = pi at x
  const double x = 1e-3;
  const double diff = path_length(g, Slit::A, x) - path_length(g, Slit::B, x);
  g.wavenumber = std::numbers::pi / std::abs(diff);
  const auto e = screen_field_operator(g, x);
  const auto ratio = e.terms()[0].coefficient / e.terms()[1].coefficient;
  EXPECT_NEAR(ratio.real(), -1.0, 1e-9);
  EXPECT_NEAR(ratio.imag(), 0.0, 1e-9);
}

TEST(ScreenFieldOperator, AdjointSwapsAndConjugates) {
  const auto e = screen_field_operator(Geometry{}, 2e-3);
  const auto a = adjoint(e);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.terms()[i].coefficient, std::conj(e.terms()[i].coefficient));
    EXPECT_EQ(a.terms()[i].factors[0].kind, LadderKind::Create);
  }
}

TEST(DetectionProbability, Examples) {
  const Geometry g{};
  EXPECT_EQ(detection_probability(screen_field_operator(g, 1e-3), vacuum(2)), 0.0);
  const auto psi = source_state({0.1, 0.7, 0.7});
  EXPECT_NEAR(detection_probability(screen_field_operator(g, 0.0), psi), 0.02, 1e-15);
  EXPECT_NEAR(detection_probability(telescope_field_operator(g, Slit::A), psi), 0.005, 1e-15);
}

TEST(DetectionProbability, ImaginaryResidualGuard) {
  EXPECT_EQ(checked_real({0.25, 1e-13}, "test"), 0.25);
  EXPECT_THROW(checked_real({0.25, 1e-6}, "test"), InternalInconsistency);
  EXPECT_THROW(checked_real({0.25, NAN}, "test"), InternalInconsistency);
}

TEST(DetectionProbability, RealWithinTightToleranceOnRandomPoints) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> xs(-5e-3, 5e-3), phase(-3.0, 3.0);
  const Geometry g{};
  for (int i = 0; i < 200; ++i) {
    const auto e = screen_field_operator(g, xs(rng));
    const auto v = expectation(adjoint(e) * e, source_state({0.3, phase(rng), phase(rng)}));
    EXPECT_LT(std::abs(v.imag()), 1e-12);
  }
}

TEST(ClosedForm, Examples) {
  const Geometry g{};
  const SourceParams sp{0.1, 0.0, 0.0};
  EXPECT_NEAR(closed_form_screen_probability(g, sp, 0.0), 0.02, 1e-15);
  // shifting phi_a by pi at the center puts a dark fringe there
  EXPECT_NEAR(closed_form_screen_probability(g, {0.1, std::numbers::pi, 0.0}, 0.0), 0.0, 1e-15);
}

TEST(ClosedForm, FunctionalFormOnePlusCos) {
  const Geometry g{};
  const SourceParams sp{0.25, 0.0, 0.0};
  for (double x : {-3e-3, -1e-4, 2.2e-3, 4.9e-3}) {
    const double delta = path_length(g, Slit::A, x) - path_length(g, Slit::B, x);
    const double expected = sp.epsilon * sp.epsilon * (1.0 + std::cos(g.wavenumber * delta));
    // naive k*delta at this scale is good to ~1e-12 rad
    EXPECT_NEAR(closed_form_screen_probability(g, sp, x), expected, 1e-11);
  }
}

TEST(ScreenPattern, MatchesClosedFormAcrossRandomConfigurations) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi), eps(0.01, 1.0);
  for (int cfg = 0; cfg < 20; ++cfg) {
    const auto g = random_geometry(rng);
    const SourceParams sp{eps(rng), phase(rng), phase(rng)};
    const auto grid = fringe_grid(g, 6.0, 1000);
    const auto op = screen_pattern(g, sp, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      ASSERT_NEAR(op.points[i].p, closed_form_screen_probability(g, sp, grid[i]), 1e-12) << "cfg " << cfg << " i " << i;
    }
  }
}

TEST(ScreenPattern, SymmetricAboutCenter) {
  const Geometry g{};
  const SourceParams sp{0.1, 0.4, 0.4};
  const auto grid = linspace(-5e-3, 5e-3, 1001);
  const auto p = screen_pattern(g, sp, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(p.points[i].p, p.points[grid.size() - 1 - i].p, 1e-12);
  }
}

TEST(ScreenPattern, SinglePointAtCenter) {
  const auto p = screen_pattern(Geometry{}, {0.1, 0.0, 0.0}, {0.0});
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p.points[0].p, 0.02, 1e-15);
}

TEST(ScreenPattern, UnsortedGridRejected) {
  EXPECT_THROW(screen_pattern(Geometry{}, {}, {0.0, 1e-3, 5e-4}), std::invalid_argument);
  EXPECT_THROW(screen_pattern(Geometry{}, {}, {0.0, 0.0}), std::invalid_argument);
}

TEST(Telescope, UniformForAllAperturesSlitsAndPhases) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> phase(-10.0, 10.0), aperture(-0.05, 0.05);
  for (int cfg = 0; cfg < 20; ++cfg) {
    const auto g = random_geometry(rng);
    const SourceParams sp{0.1, phase(rng), phase(rng)};
    const auto psi = source_state(sp);
    for (Slit slit : {Slit::A, Slit::B}) {
      EXPECT_NEAR(detection_probability(telescope_field_operator(g, slit, aperture(rng)), psi), 0.005, 1e-12);
      EXPECT_NEAR(detection_probability(telescope_field_operator(g, slit), psi), 0.005, 1e-12);
      EXPECT_LT(fringe_visibility(telescope_pattern(g, sp, slit, linspace(-0.01, 0.01, 200))), 1e-12);
    }
  }
}

TEST(Telescope, EqualForBothSlitsAndZeroOnVacuum) {
  const Geometry g{};
  const auto psi = source_state({0.37, 1.0, -2.0});
  EXPECT_DOUBLE_EQ(detection_probability(telescope_field_operator(g, Slit::A), psi),
                   detection_probability(telescope_field_operator(g, Slit::B), psi));
  EXPECT_EQ(detection_probability(telescope_field_operator(g, Slit::B), vacuum(2)), 0.0);
}

TEST(Complementarity, ScreenFringesVersusFlatTelescope) {
  std::mt19937_64 rng(303);
  std::vector<Geometry> configs{Geometry{}};
  for (int i = 0; i < 10; ++i) configs.push_back(random_geometry(rng));
  for (const auto& g : configs) {
    const SourceParams sp{0.1, 0.3, 0.3};
    const auto grid = fringe_grid(g, 3.0, 3001);
    EXPECT_GT(fringe_visibility(screen_pattern(g, sp, grid)), 0.999);
    EXPECT_LT(fringe_visibility(telescope_pattern(g, sp, Slit::A, grid)), 1e-12);
  }
}

TEST(Invariants, PhaseCovariance) {
  const Geometry g{};
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> shift(-3.0, 3.0), xs(-5e-3, 5e-3);
  for (int i = 0; i < 200; ++i) {
    const double delta = shift(rng), x = xs(rng);
    const double base_arg = reduced_phase(g.wavenumber, path_length(g, Slit::A, x) - path_length(g, Slit::B, x));
    const double shifted = closed_form_screen_probability(g, {0.1, delta, 0.0}, x);
    EXPECT_NEAR(shifted, 0.01 * (1.0 + std::cos(base_arg + delta)), 1e-15);
  }
}

TEST(Invariants, GlobalPhaseInvariance) {
  const Geometry g{};
  const auto grid = linspace(-5e-3, 5e-3, 257);
  const auto base = screen_pattern(g, {0.2, 0.3, -0.8}, grid);
  const auto moved = screen_pattern(g, {0.2, 0.3 + 1.7, -0.8 + 1.7}, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(base.points[i].p, moved.points[i].p, 1e-12);
}

TEST(Visibility, Examples) {
  Pattern flat{{{0.0, 2.0}, {1.0, 2.0}, {2.0, 2.0}}};
  EXPECT_EQ(fringe_visibility(flat), 0.0);

  Pattern full, half;
  for (int i = 0; i <= 400; ++i) {
    const double theta = 2 * std::numbers::pi * i / 400.0;
    full.points.push_back({theta, 0.01 * (1 + std::cos(theta))});
    half.points.push_back({theta, 1 + 0.5 * std::cos(theta)});
  }
  EXPECT_NEAR(fringe_visibility(full), 1.0, 1e-12);
  EXPECT_NEAR(fringe_visibility(half), 0.5, 1e-12);
}

TEST(Visibility, Errors) {
  EXPECT_THROW(fringe_visibility(Pattern{{{0.0, 0.0}, {1.0, 0.0}}}), UndefinedVisibility);
  EXPECT_THROW(fringe_visibility(Pattern{{{0.0, 1.0}}}), std::invalid_argument);
}

TEST(Phase, ReducedPhaseMatchesLongDoubleReference) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> logk(6.0, 8.0), len(0.5, 7.0);
  for (int i = 0; i < 1000; ++i) {
    const double k = std::pow(10.0, logk(rng)), L = len(rng);
    const long double exact = static_cast<long double>(k) * static_cast<long double>(L);
    const long double two_pi = 6.283185307179586476925286766559L;
    const long double ref = std::remainder(exact, two_pi);
    // long double carries 64 bits, so the reference itself is good to ~1e-10 at |kL| ~ 1e9
    EXPECT_NEAR(reduced_phase(k, L), static_cast<double>(ref), 5e-10);
  }
}

TEST(GeometryValidation, RejectsBadInputs) {
  EXPECT_THROW(screen_field_operator(Geometry{0.0, 1.0, 1.0, 1e7}, 0.0), std::invalid_argument);
  EXPECT_THROW(screen_field_operator(Geometry{1e-3, -1.0, 1.0, 1e7}, 0.0), std::invalid_argument);
  EXPECT_THROW(screen_field_operator(Geometry{1e-3, 1.0, -1.0, 1e7}, 0.0), std::invalid_argument);
  EXPECT_THROW(screen_field_operator(Geometry{1e-3, 1.0, 1.0, 0.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(Geometry::from_wavelength(1e-3, 1.0, 1.0, 0.0), std::invalid_argument);
}
