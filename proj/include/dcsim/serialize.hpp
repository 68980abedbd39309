#pragma once

#include <cstdio>
#include <string>

#include "json.hpp"

#include "dcsim/experiment.hpp"
#include "dcsim/stochastic.hpp"

namespace dcsim {

using Json = nlohmann::ordered_json;

inline Json to_json(const RunStatistics& s) {
  Json j;
  j["seed"] = s.seed;
  j["n_events"] = s.n_events;
  j["extent"] = Json::array({s.extent.x_min, s.extent.x_max});
  j["bins"] = s.bins;
  j["telescope"] = Json{{"a", s.telescope_a}, {"b", s.telescope_b}};
  j["policy"] = policy_name(s.policy);
  j["choice_time"] = to_string(s.policy.choice_time);
  return j;
}

inline Json to_json(const ComparisonReport& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["screen_chi2"] = r.screen.statistic;
  j["screen_dof"] = r.screen.dof;
  j["screen_p_value"] = r.screen.p_value;
  j["detector_fraction_p_value"] = r.p_detector_fraction;
  j["slit_p_value"] = r.p_slit;
  j["verdict"] = r.indistinguishable ? "indistinguishable" : "distinguishable";
  return j;
}

/// Fixed 17-significant-digit rendering used for CSV cells.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace dcsim
