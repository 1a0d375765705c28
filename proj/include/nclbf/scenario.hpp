#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nclbf/types.hpp"

namespace nclbf {

/// Open ball {x : |x - center|^2 < radius_sq} enclosing an unsafe region.
struct ObstacleSpec {
  StateVector center;
  double radius_sq = 0.0;
  // Radius exactly as read from a scenario file, kept so that saving a loaded
  // file reproduces it bit for bit. Empty when built from radius_sq.
  std::optional<double> radius_as_given;

  static ObstacleSpec from_radius(StateVector c, double radius) {
    return {std::move(c), radius * radius, radius};
  }
  static ObstacleSpec from_radius_sq(StateVector c, double r) {
    return {std::move(c), r, std::nullopt};
  }

  double radius() const { return radius_as_given ? *radius_as_given : std::sqrt(radius_sq); }
  double center_norm() const { return center.norm(); }
  double center_norm_sq() const { return center.squaredNorm(); }
  std::size_t dim() const { return static_cast<std::size_t>(center.size()); }
};

/// Per-obstacle barrier design constants. eta2 is always resolved; w and
/// eta2_explicit record what the scenario actually specified.
struct ObstacleParams {
  double eta1 = 0.0;
  double eta2 = 0.0;
  std::optional<double> w;
  bool eta2_explicit = true;
  Eigen::VectorXd c1;  // diagonal of the R1 decay gain, length m
};

struct ControllerGains {
  double gamma = 1.0;
};

struct IntegratorSettings {
  double dt = 1e-3;
  double t_max = 20.0;
  double eps_conv = 1e-2;
  double eps_band = 1e-3;
};

struct StateBox {
  std::vector<std::pair<double, double>> bounds;

  std::size_t dim() const { return bounds.size(); }
};

struct ScenarioConfig {
  std::string system_id;
  StateBox state_box;
  std::vector<ObstacleSpec> obstacles;
  std::vector<ObstacleParams> params;
  ControllerGains gains;
  IntegratorSettings integrator;
  std::vector<StateVector> initial_states;

  std::size_t num_obstacles() const { return obstacles.size(); }
  std::size_t state_dim() const { return state_box.dim(); }
};

// ---------------------------------------------------------------------------
// Parameter bounds

/// max over the closed ball of |x|^2, i.e. (|x_c| + sqrt r)^2, expanded so
/// that exactly representable inputs stay exact.
inline double max_sq_norm_on_ball(const ObstacleSpec& o) {
  const double c2 = o.center_norm_sq();
  return c2 + 2.0 * std::sqrt(c2 * o.radius_sq) + o.radius_sq;
}

inline double eta1_lower_bound(const ObstacleSpec& o) {
  const double c = o.center_norm();
  const double s = std::sqrt(o.radius_sq);
  return (c + s) / (c - s);
}

inline double eta2_lower_bound(double eta1, const ObstacleSpec& o) {
  return eta1 * o.radius_sq + max_sq_norm_on_ball(o);
}

inline double eta2_upper_bound(double eta1, const ObstacleSpec& o) {
  return eta1 * o.center_norm_sq();
}

/// Exclusive upper limit on the buffer parameter w.
inline double w_upper_bound(double eta1, const ObstacleSpec& o) {
  return eta1 * (o.center_norm_sq() - o.radius_sq) - max_sq_norm_on_ball(o);
}

/// eta2 = eta1 r + (|x_c| + sqrt r)^2 + w, with both bounds enforced.
inline double derive_eta2(double eta1, const ObstacleSpec& obstacle, double w) {
  if (!(obstacle.center_norm_sq() > obstacle.radius_sq)) {
    throw ParameterError("origin inside unsafe ball");
  }
  if (!(eta1 >= eta1_lower_bound(obstacle))) {
    std::ostringstream os;
    os << "eta1 >= (|x_c|+sqrt r)/(|x_c|-sqrt r) violated: eta1=" << eta1
       << " bound=" << eta1_lower_bound(obstacle);
    throw ParameterError(os.str());
  }
  if (!(w > 0.0)) {
    throw ParameterError("w > 0 violated: w=" + std::to_string(w));
  }
  const double w_max = w_upper_bound(eta1, obstacle);
  if (!(w < w_max)) {
    std::ostringstream os;
    os << "w < eta1(|x_c|^2 - r) - (|x_c|+sqrt r)^2 violated: w=" << w << " bound=" << w_max;
    throw ParameterError(os.str());
  }
  return (eta1 * obstacle.radius_sq + max_sq_norm_on_ball(obstacle)) + w;
}

/// Buffer parameter implied by a given eta2 (inverse of derive_eta2).
inline double implied_w(const ObstacleParams& p, const ObstacleSpec& o) {
  if (p.w) return *p.w;
  return p.eta2 - eta2_lower_bound(p.eta1, o);
}

/// Squared radius of the sphere {B = L}.
inline double boundary_radius_sq(const ObstacleParams& p, const ObstacleSpec& o) {
  const double a = 1.0 + p.eta1;
  return (a * p.eta2 - p.eta1 * o.center_norm_sq()) / (a * a);
}

inline StateVector boundary_center(const ObstacleParams& p, const ObstacleSpec& o) {
  return (p.eta1 / (1.0 + p.eta1)) * o.center;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationEntry {
  std::string name;
  std::optional<std::size_t> obstacle;
  std::optional<std::size_t> other;
  bool pass = true;
  // Positive when satisfied; distance to the bound in the inequality's units.
  double slack = 0.0;
  std::string detail;
  // Informational entries never affect the overall verdict.
  bool informational = false;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;

  bool pass() const {
    for (const auto& e : entries) {
      if (!e.informational && !e.pass) return false;
    }
    return true;
  }

  const ValidationEntry* find(const std::string& name, std::optional<std::size_t> obstacle = {}) const {
    for (const auto& e : entries) {
      if (e.name == name && (!obstacle || e.obstacle == obstacle)) return &e;
    }
    return nullptr;
  }

  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
      if (e.informational || e.pass) continue;
      std::string s = e.name;
      if (e.obstacle) s += " (obstacle " + std::to_string(*e.obstacle + 1);
      if (e.other) s += ", " + std::to_string(*e.other + 1);
      if (e.obstacle) s += ")";
      if (!e.detail.empty()) s += ": " + e.detail;
      out.push_back(s);
    }
    return out;
  }
};

inline ValidationReport validate_params(const ScenarioConfig& config) {
  ValidationReport rep;
  auto add = [&rep](std::string name, std::optional<std::size_t> i, std::optional<std::size_t> j, bool ok,
                    double slack, std::string detail = {}, bool info = false) {
    rep.entries.push_back({std::move(name), i, j, ok, slack, std::move(detail), info});
  };

  const std::size_t n_obs = config.obstacles.size();
  add("params_count", std::nullopt, std::nullopt, config.params.size() == n_obs,
      static_cast<double>(config.params.size()) - static_cast<double>(n_obs));
  if (config.params.size() != n_obs) return rep;

  // A single obstacle uses a non-strict eta1 bound, the multi-obstacle
  // construction a strict one.
  const bool strict_eta1 = n_obs > 1;

  for (std::size_t i = 0; i < n_obs; ++i) {
    const auto& o = config.obstacles[i];
    const auto& p = config.params[i];

    add("radius_positive", i, std::nullopt, o.radius_sq > 0.0, o.radius_sq);
    const double origin_slack = o.center_norm_sq() - o.radius_sq;
    add("origin_outside", i, std::nullopt, origin_slack > 0.0, origin_slack,
        origin_slack > 0.0 ? "" : "origin inside unsafe ball");
    if (!(o.radius_sq > 0.0) || !(origin_slack > 0.0)) continue;

    const double e1_slack = p.eta1 - eta1_lower_bound(o);
    add("eta1_lower", i, std::nullopt, strict_eta1 ? e1_slack > 0.0 : e1_slack >= 0.0, e1_slack);

    const double lo_slack = p.eta2 - eta2_lower_bound(p.eta1, o);
    add("eta2_lower", i, std::nullopt, lo_slack >= 0.0, lo_slack);

    const double hi_slack = eta2_upper_bound(p.eta1, o) - p.eta2;
    add("eta2_upper", i, std::nullopt, hi_slack > 0.0, hi_slack);

    if (p.w) {
      const double w_max = w_upper_bound(p.eta1, o);
      add("w_range", i, std::nullopt, *p.w > 0.0 && *p.w < w_max, std::min(*p.w, w_max - *p.w));
      if (p.eta2_explicit) {
        const double derived = eta2_lower_bound(p.eta1, o) + *p.w;
        const double rel = std::abs(derived - p.eta2) / std::max(1.0, std::abs(p.eta2));
        add("eta2_w_consistency", i, std::nullopt, rel <= 1e-9, 1e-9 - rel,
            "eta2 from (eta1, w) = " + std::to_string(derived));
      }
    } else {
      add("implied_w", i, std::nullopt, true, implied_w(p, o), "w recovered from eta2", true);
    }

    bool c1_ok = p.c1.size() > 0;
    double c1_min = p.c1.size() > 0 ? p.c1.minCoeff() : 0.0;
    c1_ok = c1_ok && c1_min > 0.0;
    add("c1_positive", i, std::nullopt, c1_ok, c1_min);
  }

  add("gamma_positive", std::nullopt, std::nullopt, config.gains.gamma > 0.0, config.gains.gamma);

  const auto& ig = config.integrator;
  add("dt_range", std::nullopt, std::nullopt, ig.dt > 0.0 && ig.dt < ig.t_max, std::min(ig.dt, ig.t_max - ig.dt));
  add("eps_conv_positive", std::nullopt, std::nullopt, ig.eps_conv > 0.0, ig.eps_conv);
  add("eps_band_positive", std::nullopt, std::nullopt, ig.eps_band > 0.0, ig.eps_band);

  for (std::size_t i = 0; i < n_obs; ++i) {
    for (std::size_t j = i + 1; j < n_obs; ++j) {
      const auto& oi = config.obstacles[i];
      const auto& oj = config.obstacles[j];
      const auto& pi = config.params[i];
      const auto& pj = config.params[j];
      const double ri = std::sqrt(std::max(0.0, boundary_radius_sq(pi, oi)));
      const double rj = std::sqrt(std::max(0.0, boundary_radius_sq(pj, oj)));

      const double balls = (oi.center - oj.center).norm() - (std::sqrt(oi.radius_sq) + std::sqrt(oj.radius_sq));
      add("obstacles_disjoint", i, j, balls > 0.0, balls);

      const double centers = (oi.center - oj.center).norm() - (ri + rj);
      add("sphere_separation", i, j, centers > 0.0, centers, "|x_ic - x_jc| > sqrt(rbar_i) + sqrt(rbar_j)");

      const double spheres = (boundary_center(pi, oi) - boundary_center(pj, oj)).norm() - (ri + rj);
      add("boundary_spheres_disjoint", i, j, spheres > 0.0, spheres);
    }
  }
  return rep;
}

}  // namespace nclbf
