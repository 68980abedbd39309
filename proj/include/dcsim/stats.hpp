#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

namespace dcsim::stats {

struct ChiSquareResult {
  double statistic{0.0};
  std::size_t dof{0};
  double p_value{1.0};
};

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double statistic, std::size_t dof) {
  if (dof == 0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  boost::math::chi_squared_distribution<double> dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

/// Pearson goodness of fit of observed counts against bin probabilities.
/// Bins with zero expected probability must also be empty.
inline ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probabilities) {
  if (observed.size() != probabilities.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_gof: need matching bin counts (>= 2)");
  double total_p = 0.0;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    total_p += probabilities[i];
    n += observed[i];
  }
  if (n == 0 || !(total_p > 0.0)) throw std::invalid_argument("chi_square_gof: empty data or zero probability mass");

  ChiSquareResult r;
  std::size_t used = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = static_cast<double>(n) * probabilities[i] / total_p;
    if (expected <= 0.0) {
      if (observed[i] != 0) {
        r.statistic = INFINITY;
        r.p_value = 0.0;
        return r;
      }
      continue;
    }
    const double diff = static_cast<double>(observed[i]) - expected;
    r.statistic += diff * diff / expected;
    ++used;
  }
  r.dof = used > 0 ? used - 1 : 0;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

/// Two-sample chi-square homogeneity test on histograms with possibly unequal totals.
inline ChiSquareResult chi_square_two_sample(std::span<const std::uint64_t> first, std::span<const std::uint64_t> second) {
  if (first.size() != second.size()) throw std::invalid_argument("chi_square_two_sample: bin count mismatch");
  double r_total = 0.0, s_total = 0.0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    r_total += static_cast<double>(first[i]);
    s_total += static_cast<double>(second[i]);
  }
  ChiSquareResult r;
  if (r_total == 0.0 || s_total == 0.0) return r;

  const double kr = std::sqrt(s_total / r_total);
  const double ks = std::sqrt(r_total / s_total);
  std::size_t used = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double ri = static_cast<double>(first[i]);
    const double si = static_cast<double>(second[i]);
    if (ri + si == 0.0) continue;
    const double diff = kr * ri - ks * si;
    r.statistic += diff * diff / (ri + si);
    ++used;
  }
  r.dof = used > 0 ? used - 1 : 0;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

/// Two-sided pooled z test for equality of successes1/n1 and successes2/n2.
/// Returns 1 when either sample is empty.
inline double two_proportion_p_value(std::uint64_t successes1, std::uint64_t n1, std::uint64_t successes2,
                                     std::uint64_t n2) {
  if (successes1 > n1 || successes2 > n2) throw std::invalid_argument("two_proportion_p_value: successes exceed trials");
  if (n1 == 0 || n2 == 0) return 1.0;
  const double p1 = static_cast<double>(successes1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(successes2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(successes1 + successes2) / static_cast<double>(n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  if (se == 0.0) return p1 == p2 ? 1.0 : 0.0;
  const double z = (p1 - p2) / se;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

/// Two-sided exact binomial test (doubled smaller tail, capped at 1).
inline double binomial_two_sided_p_value(std::uint64_t successes, std::uint64_t trials, double p) {
  if (successes > trials) throw std::invalid_argument("binomial_two_sided_p_value: successes exceed trials");
  if (trials == 0) return 1.0;
  boost::math::binomial_distribution<double> dist(static_cast<double>(trials), p);
  const double k = static_cast<double>(successes);
  const double lower = boost::math::cdf(dist, k);
  const double upper = successes == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, k - 1.0));
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
template <typename Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace dcsim::stats
