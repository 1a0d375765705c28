#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

#include "nclbf/assumptions.hpp"
#include "nclbf/barrier.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/simulator.hpp"
#include "nclbf/verify.hpp"

namespace nclbf {

using Json = nlohmann::ordered_json;

inline Json to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

/// Non-finite reals become strings so the output stays valid JSON.
inline Json real_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline Json to_json(const ValidationReport& rep) {
  Json out;
  out["pass"] = rep.pass();
  Json entries = Json::array();
  for (const auto& e : rep.entries) {
    Json j;
    j["name"] = e.name;
    if (e.obstacle) j["obstacle"] = *e.obstacle + 1;
    if (e.other) j["other"] = *e.other + 1;
    j["pass"] = e.pass;
    j["slack"] = real_json(e.slack);
    if (e.informational) j["informational"] = true;
    if (!e.detail.empty()) j["detail"] = e.detail;
    entries.push_back(j);
  }
  out["entries"] = entries;
  return out;
}

inline Json geometry_json(const LyapunovBarrier& bar) {
  Json out = Json::array();
  for (std::size_t i = 0; i < bar.size(); ++i) {
    Json j;
    j["obstacle"] = i + 1;
    const auto s = bar.boundary_sphere(i);
    j["boundary_center"] = to_json(s.center);
    j["boundary_radius_sq"] = s.radius_sq;
    try {
      j["buffer_width"] = bar.buffer_width(i);
    } catch (const ParameterError& e) {
      j["buffer_width"] = nullptr;
      j["buffer_width_error"] = e.what();
    }
    j["phi"] = bar.phi(i);
    if (bar.obstacle(i).dim() == 2) {
      try {
        Json pts = Json::array();
        for (const auto& p : bar.contact_points_2d(i)) pts.push_back(to_json(p));
        j["contact_points"] = pts;
      } catch (const GeometryError& e) {
        j["contact_points"] = nullptr;
        j["contact_points_error"] = e.what();
      }
    }
    out.push_back(j);
  }
  return out;
}

inline Json to_json(const DecreaseReport& rep) {
  Json out;
  out["pass"] = rep.pass();
  out["rho0_star"] = real_json(rep.rho0_star);
  if (rep.evaluated > 0) {
    out["worst_point"] = to_json(rep.worst_point);
    out["worst_region"] = to_code(rep.worst_region);
    out["worst_derivative"] = rep.worst_derivative;
  }
  out["resolution"] = rep.resolution;
  out["grid_points"] = rep.grid_points;
  out["evaluated"] = rep.evaluated;
  out["excluded"] = {{"obstacle", rep.excluded_obstacle},
                     {"shrunk_band", rep.excluded_shrunk_band},
                     {"conv_ball", rep.excluded_conv_ball},
                     {"g_vanishing", rep.excluded_g_vanishing},
                     {"g_vanishing_nonnegative_derivative", rep.g_vanishing_nonnegative}};
  return out;
}

inline Json to_json(const InvariantReport& rep) {
  Json out;
  out["pass"] = rep.pass();
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    Json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["value"] = real_json(c.value);
    j["failures"] = c.failures;
    if (c.first_failure_t) j["first_failure_t"] = *c.first_failure_t;
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(j);
  }
  out["checks"] = checks;
  out["C_estimate"] = real_json(rep.C_estimate);
  out["C_allowed"] = rep.C_allowed;
  out["smooth_steps"] = rep.smooth_steps;
  return out;
}

inline Json to_json(const AssumptionReport& rep) {
  Json out;
  out["pass"] = rep.pass();
  out["system"] = rep.system;
  out["resolution"] = rep.resolution;
  out["f_zero_at_origin"] = rep.f_zero_at_origin;
  out["f_origin_norm"] = rep.f_origin_norm;
  out["g_full_rank"] = rep.g_full_rank;
  out["min_singular_value"] = real_json(rep.min_singular_value);
  out["rank_deficient_points"] = rep.rank_deficient_points;
  out["finite"] = rep.finite;
  Json conds = Json::array();
  auto points = [](const std::vector<AssumptionPoint>& v) {
    Json a = Json::array();
    for (const auto& p : v) a.push_back({{"x", to_json(p.x)}, {"drift", p.drift}, {"grad_g_norm", p.grad_g_norm}});
    return a;
  };
  for (const auto& c : rep.conditions) {
    Json j;
    j["function"] = c.function;
    j["pass"] = c.pass();
    j["points_checked"] = c.points_checked;
    j["vanishing_points"] = c.vanishing_points;
    j["violations"] = c.violations;
    j["transversal"] = c.transversal;
    j["tol_g"] = c.tol_g;
    j["violating"] = points(c.violating);
    j["escaping"] = points(c.escaping);
    conds.push_back(j);
  }
  out["conditions"] = conds;
  out["notes"] = rep.notes;
  out["zero_state_detectability"] = rep.zero_state_detectability;
  return out;
}

inline Json to_json(const RunSummary& s) {
  Json j;
  j["index"] = s.index + 1;
  j["x0"] = to_json(s.x0);
  j["outcome"] = to_string(s.outcome.kind);
  j["t_end"] = s.outcome.t;
  if (s.outcome.kind == Outcome::Kind::SafetyViolation) j["obstacle"] = s.outcome.obstacle + 1;
  if (!s.outcome.detail.empty()) j["detail"] = s.outcome.detail;
  j["final_norm"] = real_json(s.final_norm);
  j["max_V_increase"] = real_json(s.max_V_increase);
  j["min_clearance"] = real_json(s.min_clearance);
  j["samples"] = s.samples;
  return j;
}

}  // namespace nclbf
