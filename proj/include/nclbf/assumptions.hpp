#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nclbf/barrier.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/systems.hpp"
#include "nclbf/verify.hpp"

namespace nclbf {

struct AssumptionPoint {
  StateVector x;
  double drift = 0.0;       // grad . f at the point
  double grad_g_norm = 0.0;  // |grad . g| at the point
};

/// Sampled check of "grad . g = 0 implies grad . f <= 0" for one function
/// (L, or one B_i) over the grid points where its law applies.
struct GradientCondition {
  std::string function;  // "L" or "B1", "B2", ...
  std::optional<std::size_t> obstacle;
  std::size_t points_checked = 0;
  std::size_t vanishing_points = 0;
  std::size_t violations = 0;
  // Points with positive drift that the flow leaves transversally (the
  // derivative of grad . g along f is nonzero there).
  std::size_t transversal = 0;
  std::vector<AssumptionPoint> violating;     // first few hard violations
  std::vector<AssumptionPoint> escaping;      // first few transversal ones
  double tol_g = 0.0;

  bool pass() const { return violations == 0; }
};

struct AssumptionReport {
  std::string system;
  std::size_t resolution = 0;
  bool f_zero_at_origin = true;
  double f_origin_norm = 0.0;
  bool g_full_rank = true;
  double min_singular_value = 0.0;
  std::size_t rank_deficient_points = 0;
  bool finite = true;
  std::vector<GradientCondition> conditions;
  std::vector<std::string> notes;
  std::string zero_state_detectability = "not machine-checked";

  bool pass() const {
    if (!f_zero_at_origin || !g_full_rank || !finite) return false;
    return std::all_of(conditions.begin(), conditions.end(), [](const GradientCondition& c) { return c.pass(); });
  }
};

inline AssumptionReport check_assumptions(const ControlAffineSystem& sys, const ScenarioConfig& cfg,
                                          std::size_t resolution = 101, double tol_f = 1e-9,
                                          std::size_t keep_points = 20) {
  if (resolution < 2) throw ParameterError("grid resolution must be at least 2");
  if (cfg.state_dim() != sys.n) throw DimensionError("state box dimension differs from system dimension");
  const LyapunovBarrier bar(cfg);
  const double eps_band = cfg.integrator.eps_band;
  AssumptionReport rep;
  rep.system = sys.name;
  rep.resolution = resolution;

  const StateVector origin = StateVector::Zero(static_cast<Eigen::Index>(sys.n));
  rep.f_origin_norm = sys.f(origin).norm();
  rep.f_zero_at_origin = rep.f_origin_norm <= 1e-12;

  // First pass: grid points outside the obstacles, rank and scale of grad.g.
  std::vector<StateVector> pts;
  std::vector<double> lg_norms;
  rep.min_singular_value = std::numeric_limits<double>::infinity();
  for_each_grid_point(cfg.state_box, resolution, [&](const StateVector& x) {
    for (std::size_t i = 0; i < bar.size(); ++i) {
      if (bar.inside_obstacle(i, x)) return;
    }
    const Eigen::VectorXd fx = sys.f(x);
    const Eigen::MatrixXd gx = sys.g(x);
    if (!fx.allFinite() || !gx.allFinite()) rep.finite = false;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(gx);
    const double smin = svd.singularValues().size() > 0 ? svd.singularValues().minCoeff() : 0.0;
    const bool full = svd.singularValues().size() == static_cast<Eigen::Index>(sys.m) && smin > 1e-9;
    rep.min_singular_value = std::min(rep.min_singular_value, smin);
    if (!full) ++rep.rank_deficient_points;
    lg_norms.push_back((LyapunovBarrier::grad_L(x) * gx).norm());
    pts.push_back(x);
  });
  rep.g_full_rank = rep.rank_deficient_points == 0;

  double median = 0.0;
  if (!lg_norms.empty()) {
    auto mid = lg_norms.begin() + static_cast<std::ptrdiff_t>(lg_norms.size() / 2);
    std::nth_element(lg_norms.begin(), mid, lg_norms.end());
    median = *mid;
  }
  const double tol_g = 1e-6 * median;

  auto scan = [&](GradientCondition& cond, auto&& grad, auto&& relevant) {
    cond.tol_g = tol_g;
    for (const auto& x : pts) {
      if (!relevant(x)) continue;
      ++cond.points_checked;
      const Gradient gr = grad(x);
      const Eigen::VectorXd fx = sys.f(x);
      const double gg = (gr * sys.g(x)).norm();
      if (gg > tol_g) continue;
      ++cond.vanishing_points;
      const double drift = gr.dot(fx);
      if (drift <= tol_f) continue;
      // Rate of change of grad.g along the uncontrolled flow.
      const double step = 1e-6 * std::max(1.0, x.norm()) / std::max(1.0, fx.norm());
      const StateVector xp = x + step * fx;
      const StateVector xm = x - step * fx;
      const Eigen::VectorXd rate = (grad(xp) * sys.g(xp) - grad(xm) * sys.g(xm)) / (2.0 * step);
      const AssumptionPoint p{x, drift, gg};
      if (rate.norm() > 1e-6) {
        ++cond.transversal;
        if (cond.escaping.size() < keep_points) cond.escaping.push_back(p);
      } else {
        ++cond.violations;
        if (cond.violating.size() < keep_points) cond.violating.push_back(p);
      }
    }
  };

  GradientCondition lc;
  lc.function = "L";
  scan(
      lc, [](const StateVector& x) { return LyapunovBarrier::grad_L(x); },
      [&](const StateVector& x) {
        const auto r = bar.classify(x, eps_band);
        return r.is(RegionLabel::Kind::R2) || r.is(RegionLabel::Kind::R3);
      });
  rep.conditions.push_back(lc);

  for (std::size_t i = 0; i < bar.size(); ++i) {
    GradientCondition bc;
    bc.function = "B" + std::to_string(i + 1);
    bc.obstacle = i;
    scan(
        bc, [&bar, i](const StateVector& x) { return bar.grad_B(i, x); },
        [&](const StateVector& x) {
          const auto r = bar.classify(x, eps_band);
          return (r.is(RegionLabel::Kind::R1) || r.is(RegionLabel::Kind::R3)) && r.obstacle == i;
        });
    rep.conditions.push_back(bc);
  }

  for (const auto& c : rep.conditions) {
    if (c.transversal > 0) {
      rep.notes.push_back(c.function + ": " + std::to_string(c.transversal) +
                          " grid points where the input direction vanishes with positive drift; the flow crosses "
                          "that set transversally (escapes in finite time)");
    }
  }
  return rep;
}

}  // namespace nclbf
