#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dcsim/eraser.hpp"
#include "dcsim/experiment.hpp"
#include "dcsim/serialize.hpp"
#include "dcsim/stochastic.hpp"

namespace dcsim::cli {

enum ExitCode : int { kSuccess = 0, kCheckFailed = 1, kUsage = 2 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultWavelength = 633e-9;

/// Everything a subcommand needs. Exactly one of `wavelength` / `k` is set
/// after resolution; when neither is given the demo wavelength applies.
struct RunConfig {
  double d{0.5e-3};
  double L{1.0};
  double ds{1.0};
  std::optional<double> wavelength;
  std::optional<double> k;
  double epsilon{0.1};
  double phi_a{0.0};
  double phi_b{0.0};
  double xmin{-5e-3};
  double xmax{5e-3};
  std::uint64_t grid{1001};
  std::uint64_t bins{50};
  std::uint64_t events{100'000};
  std::uint64_t seed{1};
  std::string policy{"random:0.5"};
  std::string choice_time{"before"};
  std::string format{"auto"};

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline ChoicePolicy parse_policy(const std::string& text, ChoiceTime t) {
  if (text == "always-screen") return ChoicePolicy::always_screen(t);
  if (text == "always-telescope") return ChoicePolicy::always_telescope(t);
  if (text == "random") return ChoicePolicy::random_per_event(0.5, t);
  if (text.rfind("random:", 0) == 0) {
    const std::string tail = text.substr(7);
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tail.size() || tail.empty() || !(p >= 0.0 && p <= 1.0))
      throw UsageError("--policy: random:<p> needs 0 <= p <= 1, got '" + tail + "'");
    return ChoicePolicy::random_per_event(p, t);
  }
  throw UsageError("--policy must be always-screen, always-telescope, random or random:<p>");
}

inline ChoiceTime parse_choice_time(const std::string& text) {
  if (text == "before") return ChoiceTime::BeforeSlit;
  if (text == "after") return ChoiceTime::AfterSlit;
  throw UsageError("--choice-time must be before or after");
}

inline void validate(const RunConfig& c) {
  if (c.wavelength && c.k) throw UsageError("give either wavelength or k, not both");
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string(name) + " must be positive");
  };
  positive(c.d, "d");
  positive(c.L, "L");
  if (!(c.ds >= 0.0) || !std::isfinite(c.ds)) throw UsageError("ds must be non-negative");
  if (c.wavelength) positive(*c.wavelength, "wavelength");
  if (c.k) positive(*c.k, "k");
  positive(c.epsilon, "epsilon");
  if (!std::isfinite(c.phi_a) || !std::isfinite(c.phi_b)) throw UsageError("phases must be finite");
  if (!std::isfinite(c.xmin) || !std::isfinite(c.xmax) || !(c.xmin < c.xmax)) throw UsageError("need xmin < xmax");
  if (c.grid < 2) throw UsageError("grid must have at least 2 points");
  if (c.bins < 2) throw UsageError("bins must be at least 2");
  if (c.events < 1) throw UsageError("events must be at least 1");
  parse_policy(c.policy, parse_choice_time(c.choice_time));
  if (c.format != "auto" && c.format != "csv" && c.format != "json") throw UsageError("--format must be csv or json");
}

inline Geometry geometry_of(const RunConfig& c) {
  const double k = c.k ? *c.k : 2.0 * std::numbers::pi / c.wavelength.value_or(kDefaultWavelength);
  return Geometry{c.d, c.L, c.ds, k};
}

inline SourceParams source_of(const RunConfig& c) { return {c.epsilon, c.phi_a, c.phi_b}; }
inline std::vector<double> grid_of(const RunConfig& c) { return linspace(c.xmin, c.xmax, c.grid); }

inline Json to_json(const RunConfig& c) {
  Json j;
  j["d"] = c.d;
  j["L"] = c.L;
  j["ds"] = c.ds;
  if (c.k) {
    j["k"] = *c.k;
  } else {
    j["wavelength"] = c.wavelength.value_or(kDefaultWavelength);
  }
  j["epsilon"] = c.epsilon;
  j["phi_a"] = c.phi_a;
  j["phi_b"] = c.phi_b;
  j["xmin"] = c.xmin;
  j["xmax"] = c.xmax;
  j["grid"] = c.grid;
  j["bins"] = c.bins;
  j["events"] = c.events;
  j["seed"] = c.seed;
  j["policy"] = c.policy;
  j["choice_time"] = c.choice_time;
  j["format"] = c.format;
  return j;
}

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(const Json& j, RunConfig& c) {
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  if (j.contains("wavelength") && j.contains("k")) throw UsageError("config file sets both wavelength and k");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "d") c.d = value.get<double>();
      else if (key == "L") c.L = value.get<double>();
      else if (key == "ds") c.ds = value.get<double>();
      else if (key == "wavelength") { c.wavelength = value.get<double>(); c.k.reset(); }
      else if (key == "k") { c.k = value.get<double>(); c.wavelength.reset(); }
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "phi_a") c.phi_a = value.get<double>();
      else if (key == "phi_b") c.phi_b = value.get<double>();
      else if (key == "xmin") c.xmin = value.get<double>();
      else if (key == "xmax") c.xmax = value.get<double>();
      else if (key == "grid") c.grid = value.get<std::uint64_t>();
      else if (key == "bins") c.bins = value.get<std::uint64_t>();
      else if (key == "events") c.events = value.get<std::uint64_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "policy") c.policy = value.get<std::string>();
      else if (key == "choice_time") c.choice_time = value.get<std::string>();
      else if (key == "format") c.format = value.get<std::string>();
      else throw UsageError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("cannot parse config file '" + path + "': " + e.what());
  }
  apply_json(j, base);
  return base;
}

struct CommandOutput {
  std::string body;
  int exit_code{kSuccess};
};

inline std::string resolve_format(const RunConfig& c, const char* fallback) {
  return c.format == "auto" ? fallback : c.format;
}

inline constexpr double kPatternAgreement = 1e-9;

/// x, operator-path probability and closed-form probability on the grid.
inline CommandOutput cmd_pattern(const RunConfig& c) {
  validate(c);
  const auto g = geometry_of(c);
  const auto sp = source_of(c);
  const auto grid = grid_of(c);
  const Pattern op = screen_pattern(g, sp, grid);
  const Pattern closed = closed_form_pattern(g, sp, grid);

  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(op.points[i].p - closed.points[i].p));

  CommandOutput out;
  out.exit_code = worst > kPatternAgreement ? kCheckFailed : kSuccess;
  if (resolve_format(c, "csv") == "csv") {
    std::string body = "x,p_op,p_closed\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      body += format_number(grid[i]) + ',' + format_number(std::max(0.0, op.points[i].p)) + ',' +
              format_number(std::max(0.0, closed.points[i].p)) + '\n';
    }
    out.body = std::move(body);
  } else {
    Json j;
    j["max_abs_diff"] = worst;
    j["x"] = grid;
    Json p_op = Json::array(), p_closed = Json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      p_op.push_back(std::max(0.0, op.points[i].p));
      p_closed.push_back(std::max(0.0, closed.points[i].p));
    }
    j["p_op"] = std::move(p_op);
    j["p_closed"] = std::move(p_closed);
    out.body = j.dump(2) + '\n';
  }
  return out;
}

inline constexpr double kFlatTolerance = 1e-12;

/// Per-slit telescope probabilities, plus the aperture scanned over the grid.
inline CommandOutput cmd_telescope(const RunConfig& c) {
  validate(c);
  const auto g = geometry_of(c);
  const auto sp = source_of(c);
  const auto grid = grid_of(c);
  const StateVector psi = source_state(sp);
  const double pa = detection_probability(telescope_field_operator(g, Slit::A), psi);
  const double pb = detection_probability(telescope_field_operator(g, Slit::B), psi);
  const Pattern scan_a = telescope_pattern(g, sp, Slit::A, grid);
  const Pattern scan_b = telescope_pattern(g, sp, Slit::B, grid);
  const double visibility = std::max(fringe_visibility(scan_a), fringe_visibility(scan_b));

  CommandOutput out;
  const bool uniform = visibility < kFlatTolerance && std::abs(pa - pb) < kFlatTolerance;
  out.exit_code = uniform ? kSuccess : kCheckFailed;
  if (resolve_format(c, "json") == "csv") {
    std::string body = "x,p_a,p_b\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      body += format_number(grid[i]) + ',' + format_number(std::max(0.0, scan_a.points[i].p)) + ',' +
              format_number(std::max(0.0, scan_b.points[i].p)) + '\n';
    }
    out.body = std::move(body);
  } else {
    Json j;
    j["epsilon"] = sp.epsilon;
    j["p_a"] = pa;
    j["p_b"] = pb;
    j["aperture_a"] = default_aperture(g, Slit::A);
    j["aperture_b"] = default_aperture(g, Slit::B);
    j["visibility"] = visibility;
    j["uniform"] = uniform;
    out.body = j.dump(2) + '\n';
  }
  return out;
}

/// Seed for the statistically independent "after" run.
inline std::uint64_t independent_seed(std::uint64_t seed) { return EventRng(seed, ~std::uint64_t{0}).next(); }

/// Before/after runs with the same seed (must agree exactly) and an
/// independent-seed after run compared statistically against the before run.
inline CommandOutput cmd_montecarlo(const RunConfig& c, unsigned threads = 0) {
  validate(c);
  if (resolve_format(c, "json") != "json") throw UsageError("montecarlo only writes json");
  const auto g = geometry_of(c);
  const auto sp = source_of(c);
  const ScreenConfig screen{{c.xmin, c.xmax}, static_cast<std::size_t>(c.bins), ScreenSampler::kMinSupport, threads};

  const auto before_policy = parse_policy(c.policy, ChoiceTime::BeforeSlit);
  const auto after_policy = parse_policy(c.policy, ChoiceTime::AfterSlit);
  const auto before = run(g, sp, before_policy, c.events, c.seed, screen);
  const auto after = run(g, sp, after_policy, c.events, c.seed, screen);
  const auto after_independent = run(g, sp, after_policy, c.events, independent_seed(c.seed), screen);
  const auto report = compare_runs(before, after_independent);
  const bool identical = same_outcomes(before, after);

  Json j;
  j["config"] = to_json(c);
  j["before"] = to_json(before);
  j["after"] = to_json(after);
  j["structural_identical"] = identical;
  j["after_independent"] = to_json(after_independent);
  j["comparison"] = to_json(report);

  CommandOutput out;
  out.body = j.dump(2) + '\n';
  out.exit_code = identical && report.indistinguishable ? kSuccess : kCheckFailed;
  return out;
}

inline constexpr double kErasedVisibility = 0.999;

inline CommandOutput cmd_eraser(const RunConfig& c) {
  validate(c);
  const auto g = geometry_of(c);
  const auto sp = source_of(c);
  const auto grid = grid_of(c);
  const auto patterns = eraser::eraser_patterns(g, sp, grid);
  const double v_marked = fringe_visibility(patterns.marked);
  const double v_diag = fringe_visibility(patterns.erased_diag);
  const double v_anti = fringe_visibility(patterns.erased_antidiag);
  const double residual = eraser::complementarity_residual(patterns);
  const bool sum_ok = residual <= kFlatTolerance;
  const bool ok = v_marked <= kFlatTolerance && v_diag >= kErasedVisibility && sum_ok;

  CommandOutput out;
  out.exit_code = ok ? kSuccess : kCheckFailed;
  if (resolve_format(c, "json") == "csv") {
    std::string body = "x,marked,erased_diag,erased_antidiag\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      body += format_number(grid[i]) + ',' + format_number(std::max(0.0, patterns.marked.points[i].p)) + ',' +
              format_number(std::max(0.0, patterns.erased_diag.points[i].p)) + ',' +
              format_number(std::max(0.0, patterns.erased_antidiag.points[i].p)) + '\n';
    }
    out.body = std::move(body);
  } else {
    auto column = [](const Pattern& p) {
      Json a = Json::array();
      for (const auto& pt : p.points) a.push_back(std::max(0.0, pt.p));
      return a;
    };
    Json j;
    j["summary"] = Json{{"marked_visibility", v_marked},
                        {"erased_diag_visibility", v_diag},
                        {"erased_antidiag_visibility", v_anti},
                        {"complementarity_residual", residual},
                        {"sum_check", sum_ok ? "pass" : "fail"}};
    j["x"] = grid;
    j["marked"] = column(patterns.marked);
    j["erased_diag"] = column(patterns.erased_diag);
    j["erased_antidiag"] = column(patterns.erased_antidiag);
    out.body = j.dump(2) + '\n';
  }
  return out;
}

/// Parses `args` (without the program name), runs the chosen subcommand and
/// writes its output to --out or `out`. Returns the process exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-mode Fock-space simulator for the delayed-choice double slit", "dcsim"};
  app.require_subcommand(1, 1);

  struct Flags {
    std::optional<double> d, L, ds, wavelength, k, epsilon, phi_a, phi_b, xmin, xmax;
    std::optional<std::uint64_t> grid, bins, events, seed;
    std::optional<std::string> policy, choice_time, format;
    std::string out_path, config_path;
    bool dump_config{false};
  } flags;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"pattern", "screen pattern: operator path vs closed form (CSV)"},
      {"telescope", "per-slit telescope probabilities and visibility"},
      {"montecarlo", "event-by-event before/after delayed-choice runs"},
      {"eraser", "polarization-marked paths with and without erasure"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--d", flags.d, "slit separation [m]");
    sub->add_option("--L", flags.L, "slit-to-screen distance [m]");
    sub->add_option("--ds", flags.ds, "source-to-slit distance [m]");
    auto* wl = sub->add_option("--wavelength", flags.wavelength, "wavelength [m]");
    auto* kk = sub->add_option("--k", flags.k, "wavenumber [rad/m]");
    wl->excludes(kk);
    sub->add_option("--epsilon", flags.epsilon, "source field strength");
    sub->add_option("--phi-a", flags.phi_a, "phase of slit a [rad]");
    sub->add_option("--phi-b", flags.phi_b, "phase of slit b [rad]");
    sub->add_option("--xmin", flags.xmin, "screen extent lower edge [m]");
    sub->add_option("--xmax", flags.xmax, "screen extent upper edge [m]");
    sub->add_option("--grid", flags.grid, "number of grid points");
    sub->add_option("--bins", flags.bins, "histogram bins (montecarlo)");
    sub->add_option("--events", flags.events, "events per run (montecarlo)");
    sub->add_option("--seed", flags.seed, "RNG seed (montecarlo)");
    sub->add_option("--policy", flags.policy, "always-screen | always-telescope | random[:p]");
    sub->add_option("--choice-time", flags.choice_time, "before | after");
    sub->add_option("--format", flags.format, "csv | json");
    sub->add_option("--out", flags.out_path, "output file (default stdout)");
    sub->add_option("--config", flags.config_path, "JSON config file; flags override its values");
    sub->add_flag("--dump-config", flags.dump_config, "print the effective config as JSON and exit");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kUsage;
  }

  try {
    RunConfig config;
    if (!flags.config_path.empty()) config = load_config(flags.config_path);
    auto set = [](auto& target, const auto& flag) {
      if (flag) target = *flag;
    };
    set(config.d, flags.d);
    set(config.L, flags.L);
    set(config.ds, flags.ds);
    if (flags.wavelength) {
      config.wavelength = flags.wavelength;
      config.k.reset();
    }
    if (flags.k) {
      config.k = flags.k;
      config.wavelength.reset();
    }
    set(config.epsilon, flags.epsilon);
    set(config.phi_a, flags.phi_a);
    set(config.phi_b, flags.phi_b);
    set(config.xmin, flags.xmin);
    set(config.xmax, flags.xmax);
    set(config.grid, flags.grid);
    set(config.bins, flags.bins);
    set(config.events, flags.events);
    set(config.seed, flags.seed);
    set(config.policy, flags.policy);
    set(config.choice_time, flags.choice_time);
    set(config.format, flags.format);
    validate(config);

    CommandOutput result;
    if (flags.dump_config) {
      result.body = to_json(config).dump(2) + '\n';
    } else {
      const std::string name = app.get_subcommands().front()->get_name();
      if (name == "pattern") result = cmd_pattern(config);
      else if (name == "telescope") result = cmd_telescope(config);
      else if (name == "montecarlo") result = cmd_montecarlo(config);
      else result = cmd_eraser(config);
    }

    if (flags.out_path.empty()) {
      out << result.body;
    } else {
      std::ofstream file(flags.out_path, std::ios::binary);
      if (!file) throw UsageError("cannot open output file '" + flags.out_path + "'");
      file << result.body;
    }
    return result.exit_code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace dcsim::cli
