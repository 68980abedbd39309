#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dcsim/experiment.hpp"
#include "dcsim/stats.hpp"

namespace dcsim {

struct Extent {
  double x_min{-5e-3};
  double x_max{5e-3};

  double width() const { return x_max - x_min; }
  friend bool operator==(const Extent&, const Extent&) = default;
};

inline void validate(const Extent& e) {
  if (!std::isfinite(e.x_min) || !std::isfinite(e.x_max) || !(e.x_min < e.x_max))
    throw std::invalid_argument("Extent: need finite x_min < x_max");
}

/// Inverse-CDF sampler for a non-negative density tabulated on a uniform grid.
///
/// The CDF is accumulated with the trapezoid rule and inverted by linear
/// interpolation between support points.
class ScreenSampler {
 public:
  static constexpr std::size_t kMinSupport = 10'000;

  ScreenSampler(const std::function<double(double)>& density, Extent extent, std::size_t support)
      : extent_(extent) {
    validate(extent);
    if (support < 2) throw std::invalid_argument("ScreenSampler: resolution must be >= 2");
    support = std::max(support, kMinSupport);
    nodes_ = linspace(extent.x_min, extent.x_max, support);
    cdf_.assign(support, 0.0);
    double prev = density(nodes_[0]);
    check_density(prev);
    for (std::size_t i = 1; i < support; ++i) {
      const double cur = density(nodes_[i]);
      check_density(cur);
      cdf_[i] = cdf_[i - 1] + 0.5 * (prev + cur) * (nodes_[i] - nodes_[i - 1]);
      prev = cur;
    }
    const double total = cdf_.back();
    if (!(total > 0.0)) throw std::invalid_argument("ScreenSampler: density has zero total weight over the extent");
    for (auto& c : cdf_) c /= total;
    cdf_.back() = 1.0;
  }

  const Extent& extent() const { return extent_; }
  std::size_t support() const { return nodes_.size(); }

  /// Maps u in [0, 1) to a screen position inside the extent.
  double sample(double u) const {
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return extent_.x_max;
    if (it == cdf_.begin()) return extent_.x_min;
    const auto hi = static_cast<std::size_t>(it - cdf_.begin());
    const auto lo = hi - 1;
    const double span = cdf_[hi] - cdf_[lo];
    const double t = span > 0.0 ? (u - cdf_[lo]) / span : 0.0;
    return std::clamp(nodes_[lo] + t * (nodes_[hi] - nodes_[lo]), extent_.x_min, extent_.x_max);
  }

  /// Tabulated (piecewise-linear) CDF.
  double cdf(double x) const {
    if (x <= extent_.x_min) return 0.0;
    if (x >= extent_.x_max) return 1.0;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    const auto hi = static_cast<std::size_t>(it - nodes_.begin());
    const auto lo = hi - 1;
    const double t = (x - nodes_[lo]) / (nodes_[hi] - nodes_[lo]);
    return cdf_[lo] + t * (cdf_[hi] - cdf_[lo]);
  }

 private:
  static void check_density(double v) {
    if (!std::isfinite(v) || v < -1e-12) throw std::invalid_argument("ScreenSampler: density must be finite and >= 0");
  }

  Extent extent_;
  std::vector<double> nodes_;
  std::vector<double> cdf_;
};

/// Sampler whose density is proportional to the closed-form screen probability.
inline ScreenSampler build_screen_sampler(const Geometry& g, const SourceParams& sp, Extent extent,
                                          std::size_t resolution) {
  validate(g, true);
  validate(sp);
  return ScreenSampler([&](double x) { return std::max(0.0, closed_form_screen_probability(g, sp, x)); }, extent,
                       resolution);
}

/// Counter-based generator: the stream for (seed, event_id) is independent of
/// which thread produces it or in what order events are generated.
class EventRng {
 public:
  EventRng(std::uint64_t seed, std::uint64_t event_id)
      : state_(mix(seed ^ mix(event_id + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

enum class ChoiceTime { BeforeSlit, AfterSlit };

inline const char* to_string(ChoiceTime t) { return t == ChoiceTime::BeforeSlit ? "before" : "after"; }

/// Which detector system sees each photon. `choice_time` is recorded only;
/// no sampling step reads it.
struct ChoicePolicy {
  enum class Rule { AlwaysScreen, AlwaysTelescope, RandomPerEvent };

  Rule rule{Rule::RandomPerEvent};
  double p_screen{0.5};
  ChoiceTime choice_time{ChoiceTime::BeforeSlit};

  static ChoicePolicy always_screen(ChoiceTime t = ChoiceTime::BeforeSlit) { return {Rule::AlwaysScreen, 1.0, t}; }
  static ChoicePolicy always_telescope(ChoiceTime t = ChoiceTime::BeforeSlit) {
    return {Rule::AlwaysTelescope, 0.0, t};
  }
  static ChoicePolicy random_per_event(double p_screen, ChoiceTime t = ChoiceTime::BeforeSlit) {
    return {Rule::RandomPerEvent, p_screen, t};
  }

  friend bool operator==(const ChoicePolicy&, const ChoicePolicy&) = default;
};

inline void validate(const ChoicePolicy& p) {
  if (!(p.p_screen >= 0.0 && p.p_screen <= 1.0)) throw std::invalid_argument("ChoicePolicy: p_screen must lie in [0, 1]");
}

/// "always-screen", "always-telescope", or "random:<p_screen>".
inline std::string policy_name(const ChoicePolicy& p) {
  switch (p.rule) {
    case ChoicePolicy::Rule::AlwaysScreen: return "always-screen";
    case ChoicePolicy::Rule::AlwaysTelescope: return "always-telescope";
    case ChoicePolicy::Rule::RandomPerEvent: break;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "random:%.17g", p.p_screen);
  return buf;
}

enum class DetectorKind { Screen, Telescope };

struct DetectionEvent {
  std::uint64_t event_id{0};
  DetectorKind detector{DetectorKind::Screen};
  double x{0.0};  // valid for Screen
  Slit slit{Slit::A};  // valid for Telescope
  ChoiceTime choice_time{ChoiceTime::BeforeSlit};
};

/// Share of telescope clicks at the slit-a telescope: <E-_a E+_a> / (<E-_a E+_a> + <E-_b E+_b>).
inline double telescope_split(const Geometry& g, const SourceParams& sp) {
  const StateVector psi = source_state(sp);
  const double pa = detection_probability(telescope_field_operator(g, Slit::A), psi);
  const double pb = detection_probability(telescope_field_operator(g, Slit::B), psi);
  return pa / (pa + pb);
}

/// One post-selected detection. Draw order per event: detector choice, then outcome.
inline DetectionEvent simulate_event(const ScreenSampler& sampler, const ChoicePolicy& policy, std::uint64_t seed,
                                     std::uint64_t event_id, double p_slit_a = 0.5) {
  EventRng rng(seed, event_id);
  const double u_choice = rng.uniform();
  const double u_outcome = rng.uniform();

  bool screen = false;
  switch (policy.rule) {
    case ChoicePolicy::Rule::AlwaysScreen: screen = true; break;
    case ChoicePolicy::Rule::AlwaysTelescope: screen = false; break;
    case ChoicePolicy::Rule::RandomPerEvent: screen = u_choice < policy.p_screen; break;
  }

  DetectionEvent ev;
  ev.event_id = event_id;
  ev.choice_time = policy.choice_time;
  if (screen) {
    ev.detector = DetectorKind::Screen;
    ev.x = sampler.sample(u_outcome);
  } else {
    ev.detector = DetectorKind::Telescope;
    ev.slit = u_outcome < p_slit_a ? Slit::A : Slit::B;
  }
  return ev;
}

struct RunStatistics {
  std::uint64_t seed{0};
  std::uint64_t n_events{0};
  Extent extent;
  std::vector<std::uint64_t> bins;
  std::uint64_t telescope_a{0};
  std::uint64_t telescope_b{0};
  ChoicePolicy policy;

  RunStatistics() = default;
  RunStatistics(std::uint64_t seed_, Extent extent_, std::size_t n_bins, ChoicePolicy policy_)
      : seed(seed_), extent(extent_), bins(n_bins, 0), policy(policy_) {
    validate(extent);
    if (n_bins < 2) throw std::invalid_argument("RunStatistics: need at least 2 bins");
  }

  std::uint64_t screen_events() const {
    std::uint64_t total = 0;
    for (auto c : bins) total += c;
    return total;
  }
  std::uint64_t telescope_events() const { return telescope_a + telescope_b; }

  std::size_t bin_of(double x) const {
    const double t = (x - extent.x_min) / extent.width();
    auto idx = static_cast<std::ptrdiff_t>(std::floor(t * static_cast<double>(bins.size())));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(bins.size()) - 1));
  }

  void record(const DetectionEvent& ev) {
    if (ev.detector == DetectorKind::Screen) {
      if (ev.x < extent.x_min || ev.x > extent.x_max) throw std::out_of_range("screen event outside the extent");
      ++bins[bin_of(ev.x)];
    } else if (ev.slit == Slit::A) {
      ++telescope_a;
    } else {
      ++telescope_b;
    }
    ++n_events;
  }

  /// Adds the counts of `other`; binning must match.
  RunStatistics& merge(const RunStatistics& other) {
    if (other.bins.size() != bins.size() || !(other.extent == extent))
      throw std::invalid_argument("RunStatistics::merge: binning mismatch");
    for (std::size_t i = 0; i < bins.size(); ++i) bins[i] += other.bins[i];
    telescope_a += other.telescope_a;
    telescope_b += other.telescope_b;
    n_events += other.n_events;
    return *this;
  }

  friend bool operator==(const RunStatistics&, const RunStatistics&) = default;
};

/// Equality of everything a detector records; the choice-time tag is ignored.
inline bool same_outcomes(const RunStatistics& a, const RunStatistics& b) {
  return a.seed == b.seed && a.n_events == b.n_events && a.extent == b.extent && a.bins == b.bins &&
         a.telescope_a == b.telescope_a && a.telescope_b == b.telescope_b && a.policy.rule == b.policy.rule &&
         a.policy.p_screen == b.policy.p_screen;
}

struct ScreenConfig {
  Extent extent;
  std::size_t bins{50};
  std::size_t support{ScreenSampler::kMinSupport};
  unsigned threads{1};  // 0 picks hardware concurrency
};

/// Generates `n_events` detections. The result depends only on the inputs and
/// the seed, never on `threads`.
inline RunStatistics run(const Geometry& g, const SourceParams& sp, const ChoicePolicy& policy,
                         std::uint64_t n_events, std::uint64_t seed, const ScreenConfig& cfg = {}) {
  validate(policy);
  if (n_events == 0) throw std::invalid_argument("run: n_events must be >= 1");
  const ScreenSampler sampler = build_screen_sampler(g, sp, cfg.extent, cfg.support);
  const double p_slit_a = telescope_split(g, sp);

  unsigned workers = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_events));

  std::vector<RunStatistics> partial(workers, RunStatistics(seed, cfg.extent, cfg.bins, policy));
  auto work = [&](unsigned w) {
    const std::uint64_t begin = n_events * w / workers;
    const std::uint64_t end = n_events * (w + 1) / workers;
    for (std::uint64_t id = begin; id < end; ++id) partial[w].record(simulate_event(sampler, policy, seed, id, p_slit_a));
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  RunStatistics total(seed, cfg.extent, cfg.bins, policy);
  for (const auto& p : partial) total.merge(p);
  return total;
}

struct ComparisonReport {
  double alpha{0.01};
  stats::ChiSquareResult screen;  // two-sample chi-square on screen histograms
  double p_detector_fraction{1.0};  // telescope events / n_events
  double p_slit{1.0};  // a-clicks / telescope events
  bool indistinguishable{true};
};

inline ComparisonReport compare_runs(const RunStatistics& s1, const RunStatistics& s2, double alpha = 0.01) {
  if (s1.bins.size() != s2.bins.size() || !(s1.extent == s2.extent))
    throw std::invalid_argument("compare_runs: mismatched binning");
  ComparisonReport r;
  r.alpha = alpha;
  r.screen = stats::chi_square_two_sample(s1.bins, s2.bins);
  r.p_detector_fraction = stats::two_proportion_p_value(s1.telescope_events(), s1.n_events, s2.telescope_events(),
                                                        s2.n_events);
  r.p_slit = stats::two_proportion_p_value(s1.telescope_a, s1.telescope_events(), s2.telescope_a,
                                           s2.telescope_events());
  r.indistinguishable = r.screen.p_value > alpha && r.p_detector_fraction > alpha && r.p_slit > alpha;
  return r;
}

}  // namespace dcsim
