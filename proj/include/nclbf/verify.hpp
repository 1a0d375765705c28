#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nclbf/barrier.hpp"
#include "nclbf/controller.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/simulator.hpp"
#include "nclbf/types.hpp"

namespace nclbf {

struct DerivativeBreakdown {
  RegionLabel region;
  double d_value = 0.0;
  // Terms for the dominant obstacle; NaN when there are no obstacles.
  double B_f = std::numeric_limits<double>::quiet_NaN();
  double B_gu = std::numeric_limits<double>::quiet_NaN();
  double L_f = 0.0;
  double L_gu = 0.0;
  // B - L at the point (dominant obstacle).
  double h2 = std::numeric_limits<double>::quiet_NaN();
  // "d1", "d2" or "d3": which form produced d_value.
  std::string form;
};

/// Upper generalized derivative of V along f + g u. Band points use the
/// memory to pick a branch; without memory the conservative max form.
inline DerivativeBreakdown upper_derivative(const Controller& ctrl, const StateVector& x, const InputVector& u,
                                            const std::optional<RegionMemory>& memory, double eps_band) {
  const auto& sys = ctrl.system();
  const auto& bar = ctrl.barrier();
  const Eigen::VectorXd fx = sys.f(x);
  const Eigen::VectorXd gu = sys.g(x) * u;

  DerivativeBreakdown out;
  out.region = bar.classify(x, eps_band);
  const Gradient gl = LyapunovBarrier::grad_L(x);
  out.L_f = gl.dot(fx);
  out.L_gu = gl.dot(gu);
  const double d2 = out.L_f + out.L_gu;
  if (bar.size() == 0) {
    out.d_value = d2;
    out.form = "d2";
    return out;
  }
  const std::size_t i = out.region.is(RegionLabel::Kind::R2) ? bar.max_barrier(x).first : out.region.obstacle;
  const Gradient gb = bar.grad_B(i, x);
  out.B_f = gb.dot(fx);
  out.B_gu = gb.dot(gu);
  out.h2 = bar.B(i, x) - LyapunovBarrier::L(x);
  const double d1 = out.B_f + out.B_gu;

  switch (out.region.kind) {
    case RegionLabel::Kind::R1:
    case RegionLabel::Kind::Unsafe:
      out.d_value = d1;
      out.form = "d1";
      return out;
    case RegionLabel::Kind::R2:
      out.d_value = d2;
      out.form = "d2";
      return out;
    case RegionLabel::Kind::R3:
      break;
  }
  if (memory && !memory->prev.is(RegionLabel::Kind::Unsafe)) {
    const bool from_r1 = memory->prev.is(RegionLabel::Kind::R1) && memory->prev.obstacle == i;
    out.d_value = from_r1 ? d1 : d2;
    out.form = from_r1 ? "d1" : "d2";
    return out;
  }
  out.d_value = 0.5 * (d1 + d2) + 0.5 * std::abs(d1 - d2);
  out.form = "d3";
  return out;
}

// ---------------------------------------------------------------------------
// Grid certification

/// Grid coordinate k of res points on [lo, hi], end points exact.
inline double grid_coord(double lo, double hi, std::size_t k, std::size_t res) {
  if (k + 1 == res) return hi;
  return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(res - 1);
}

/// Calls fn(x) for every point of a uniform grid on the box, first axis
/// fastest.
template <typename Fn>
void for_each_grid_point(const StateBox& box, std::size_t res, Fn&& fn) {
  const std::size_t n = box.dim();
  std::vector<std::size_t> idx(n, 0);
  StateVector x(static_cast<Eigen::Index>(n));
  while (true) {
    for (std::size_t a = 0; a < n; ++a) {
      x(static_cast<Eigen::Index>(a)) = grid_coord(box.bounds[a].first, box.bounds[a].second, idx[a], res);
    }
    fn(x);
    std::size_t a = 0;
    while (a < n && ++idx[a] == res) idx[a++] = 0;
    if (a == n) break;
  }
}

struct DecreaseReport {
  std::size_t resolution = 0;
  std::size_t grid_points = 0;
  std::size_t evaluated = 0;
  std::size_t excluded_obstacle = 0;
  std::size_t excluded_shrunk_band = 0;
  std::size_t excluded_conv_ball = 0;
  // Points where the input direction of the active law vanishes; there the
  // decrease rests on zero-state detectability, not on the controller.
  std::size_t excluded_g_vanishing = 0;
  std::size_t g_vanishing_nonnegative = 0;
  double rho0_star = std::numeric_limits<double>::infinity();
  StateVector worst_point;
  RegionLabel worst_region;
  double worst_derivative = 0.0;

  bool pass() const { return evaluated > 0 && rho0_star > 0.0; }
};

inline DecreaseReport grid_decrease_check(const Controller& ctrl, const ScenarioConfig& cfg, std::size_t resolution) {
  if (resolution < 2) throw ParameterError("grid resolution must be at least 2");
  const auto& bar = ctrl.barrier();
  const auto& sys = ctrl.system();
  const double eps_band = cfg.integrator.eps_band;
  DecreaseReport rep;
  rep.resolution = resolution;

  auto vanishes = [&](const Gradient& grad, const StateVector& x) { return (grad * sys.g(x)).norm() <= ctrl.tol_g(); };

  for_each_grid_point(cfg.state_box, resolution, [&](const StateVector& x) {
    ++rep.grid_points;
    const RegionLabel region = bar.classify(x, eps_band);
    if (region.is(RegionLabel::Kind::Unsafe)) {
      ++rep.excluded_obstacle;
      return;
    }
    if (x.norm() <= cfg.integrator.eps_conv) {
      ++rep.excluded_conv_ball;
      return;
    }
    for (std::size_t i = 0; i < bar.size(); ++i) {
      if (bar.in_shrunk_band(x, i, eps_band)) {
        ++rep.excluded_shrunk_band;
        return;
      }
    }
    double d = 0.0;
    bool g_vanishing = false;
    switch (region.kind) {
      case RegionLabel::Kind::R1: {
        g_vanishing = vanishes(bar.grad_B(region.obstacle, x), x);
        d = upper_derivative(ctrl, x, ctrl.kappa1(region.obstacle, x), std::nullopt, eps_band).d_value;
        break;
      }
      case RegionLabel::Kind::R2: {
        g_vanishing = vanishes(LyapunovBarrier::grad_L(x), x);
        d = upper_derivative(ctrl, x, ctrl.kappa2(x), std::nullopt, eps_band).d_value;
        break;
      }
      case RegionLabel::Kind::R3: {
        const std::size_t i = region.obstacle;
        g_vanishing = vanishes(bar.grad_B(i, x), x) || vanishes(LyapunovBarrier::grad_L(x), x);
        const double via_k1 = upper_derivative(ctrl, x, ctrl.kappa1(i, x), RegionMemory{RegionLabel::r1(i)}, eps_band).d_value;
        const double via_k2 = upper_derivative(ctrl, x, ctrl.kappa2(x), RegionMemory{RegionLabel::r2()}, eps_band).d_value;
        d = std::max(via_k1, via_k2);
        break;
      }
      case RegionLabel::Kind::Unsafe:
        return;
    }
    if (g_vanishing) {
      ++rep.excluded_g_vanishing;
      if (d >= 0.0) ++rep.g_vanishing_nonnegative;
      return;
    }
    ++rep.evaluated;
    const double ratio = -d / x.squaredNorm();
    if (ratio < rep.rho0_star) {
      rep.rho0_star = ratio;
      rep.worst_point = x;
      rep.worst_region = region;
      rep.worst_derivative = d;
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Trajectory checks

struct InvariantCheck {
  std::string name;
  bool pass = true;
  // Worst value of the checked quantity.
  double value = 0.0;
  std::optional<double> first_failure_t;
  std::size_t failures = 0;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantCheck> checks;
  // Finite-difference constants for the smooth-step check.
  double C_estimate = -std::numeric_limits<double>::infinity();
  double C_allowed = 1.0;
  std::size_t smooth_steps = 0;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.pass; });
  }

  const InvariantCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

inline InvariantReport trajectory_invariants(const TrajectoryRecord& rec, const Controller& ctrl,
                                             const ScenarioConfig& cfg, double v_tol = 1e-6) {
  if (rec.samples.empty()) throw ParameterError("empty trajectory record");
  const auto& bar = ctrl.barrier();
  const double eps_band = cfg.integrator.eps_band;
  const auto& s = rec.samples;
  InvariantReport rep;

  auto note = [](InvariantCheck& c, double t) {
    ++c.failures;
    c.pass = false;
    if (!c.first_failure_t) c.first_failure_t = t;
  };

  InvariantCheck safe{"clearance_positive", true, std::numeric_limits<double>::infinity(), {}, 0, {}};
  for (const auto& smp : s) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bar.size(); ++i) worst = std::min(worst, bar.clearance(i, smp.x));
    safe.value = std::min(safe.value, worst);
    if (!(worst > 0.0)) note(safe, smp.t);
  }
  rep.checks.push_back(safe);

  InvariantCheck mono{"V_nonincreasing", true, -std::numeric_limits<double>::infinity(), {}, 0, {}};
  mono.detail = "max V(x[k+1]) - V(x[k]) while |x[k]| > eps_conv";
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    if (!(s[k].x.norm() > cfg.integrator.eps_conv)) continue;
    const double inc = bar.V(s[k + 1].x) - bar.V(s[k].x);
    mono.value = std::max(mono.value, inc);
    if (inc > v_tol) note(mono, s[k + 1].t);
  }
  rep.checks.push_back(mono);

  InvariantCheck band{"no_shrunk_band", true, 0.0, {}, 0, {}};
  for (const auto& smp : s) {
    for (std::size_t i = 0; i < bar.size(); ++i) {
      if (bar.in_shrunk_band(smp.x, i, eps_band)) {
        note(band, smp.t);
        break;
      }
    }
  }
  band.value = static_cast<double>(band.failures);
  rep.checks.push_back(band);

  // Steps that stay in R1(i) or R2 under one law: V is smooth there, and the
  // difference quotient must match the derivative to first order in dt.
  std::vector<std::size_t> smooth;
  std::vector<RegionLabel> regions;
  for (const auto& smp : s) regions.push_back(bar.classify(smp.x, eps_band));
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const auto& r = regions[k];
    if (r.is(RegionLabel::Kind::R3) || r.is(RegionLabel::Kind::Unsafe)) continue;
    if (!(regions[k + 1] == r) || !(s[k + 1].law == s[k].law)) continue;
    if (!s[k].u.allFinite()) continue;
    smooth.push_back(k);
  }
  double curvature = 0.0;
  for (std::size_t k : smooth) {
    if (k == 0 || !(regions[k - 1] == regions[k])) continue;
    const double dt = s[k + 1].t - s[k].t;
    const double v0 = bar.V(s[k - 1].x), v1 = bar.V(s[k].x), v2 = bar.V(s[k + 1].x);
    curvature = std::max(curvature, std::abs(v2 - 2.0 * v1 + v0) / (dt * dt));
  }
  rep.C_allowed = std::max(1.0, 2.0 * curvature);
  InvariantCheck fd{"finite_difference_consistency", true, -std::numeric_limits<double>::infinity(), {}, 0, {}};
  for (std::size_t k : smooth) {
    const double dt = s[k + 1].t - s[k].t;
    const RegionMemory mem{k == 0 ? regions[0] : regions[k - 1]};
    const double d = upper_derivative(ctrl, s[k].x, s[k].u, mem, eps_band).d_value;
    const double excess = (bar.V(s[k + 1].x) - bar.V(s[k].x)) / dt - d;
    rep.C_estimate = std::max(rep.C_estimate, excess / dt);
    fd.value = std::max(fd.value, excess);
    if (excess > rep.C_allowed * dt) note(fd, s[k].t);
  }
  rep.smooth_steps = smooth.size();
  fd.detail = "(V[k+1]-V[k])/dt - DV(x[k]) <= C dt on smooth steps";
  rep.checks.push_back(fd);
  return rep;
}

}  // namespace nclbf
