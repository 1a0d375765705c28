#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "nclbf/scenario.hpp"
#include "nclbf/types.hpp"

namespace nclbf {

struct BoundarySphere {
  StateVector center;
  double radius_sq = 0.0;
};

/// The nonsmooth certificate V(x) = max(|x|^2, max_i B_i(x)) with
/// B_i(x) = eta2_i - eta1_i |x - c_i|^2, plus the geometry of the switching
/// surfaces {B_i = L}.
class LyapunovBarrier {
 public:
  LyapunovBarrier(std::vector<ObstacleSpec> obstacles, std::vector<ObstacleParams> params)
      : obstacles_(std::move(obstacles)), params_(std::move(params)) {
    if (obstacles_.size() != params_.size()) {
      throw DimensionError("obstacle and parameter lists differ in length");
    }
  }

  explicit LyapunovBarrier(const ScenarioConfig& config) : LyapunovBarrier(config.obstacles, config.params) {}

  std::size_t size() const { return obstacles_.size(); }
  const ObstacleSpec& obstacle(std::size_t i) const { return obstacles_.at(i); }
  const ObstacleParams& params(std::size_t i) const { return params_.at(i); }

  static double L(const StateVector& x) { return x.squaredNorm(); }
  static Gradient grad_L(const StateVector& x) { return 2.0 * x.transpose(); }

  double B(std::size_t i, const StateVector& x) const {
    const auto& o = obstacles_.at(i);
    const auto& p = params_[i];
    return p.eta2 - p.eta1 * (x - o.center).squaredNorm();
  }

  Gradient grad_B(std::size_t i, const StateVector& x) const {
    const auto& o = obstacles_.at(i);
    return -2.0 * params_[i].eta1 * (x - o.center).transpose();
  }

  /// Dominant barrier: lowest index wins ties. Requires size() > 0.
  std::pair<std::size_t, double> max_barrier(const StateVector& x) const {
    std::size_t best = 0;
    double best_val = B(0, x);
    for (std::size_t i = 1; i < size(); ++i) {
      const double b = B(i, x);
      if (b > best_val) {
        best = i;
        best_val = b;
      }
    }
    return {best, best_val};
  }

  double V(const StateVector& x) const {
    double v = L(x);
    for (std::size_t i = 0; i < size(); ++i) v = std::max(v, B(i, x));
    return v;
  }

  /// max_i B_i(x) - L(x); negative in R2, positive in some R1(i).
  double switching_gap(const StateVector& x) const {
    if (size() == 0) return -L(x);
    return max_barrier(x).second - L(x);
  }

  /// |x - c_i| - sqrt(r_i); negative inside the open ball.
  double clearance(std::size_t i, const StateVector& x) const {
    const auto& o = obstacles_.at(i);
    return (x - o.center).norm() - std::sqrt(o.radius_sq);
  }

  bool inside_obstacle(std::size_t i, const StateVector& x) const {
    const auto& o = obstacles_.at(i);
    return (x - o.center).squaredNorm() < o.radius_sq;
  }

  RegionLabel classify(const StateVector& x, double eps_band) const {
    for (std::size_t i = 0; i < size(); ++i) {
      if (inside_obstacle(i, x)) return RegionLabel::unsafe(i);
    }
    if (size() == 0) return RegionLabel::r2();
    const auto [i, m] = max_barrier(x);
    const double l = L(x);
    if (m - l > eps_band) return RegionLabel::r1(i);
    if (l - m > eps_band) return RegionLabel::r2();
    return RegionLabel::r3(i);
  }

  BoundarySphere boundary_sphere(std::size_t i) const {
    const auto& o = obstacles_.at(i);
    const auto& p = params_[i];
    return {boundary_center(p, o), boundary_radius_sq(p, o)};
  }

  /// sqrt(w / (eta1 + 1)); w is the given buffer parameter or the one
  /// implied by eta2.
  double buffer_width(std::size_t i) const {
    const auto& o = obstacles_.at(i);
    const auto& p = params_[i];
    const double w = implied_w(p, o);
    if (!(w > 0.0)) throw ParameterError("no positive buffer for obstacle " + std::to_string(i + 1));
    return std::sqrt(w / (p.eta1 + 1.0));
  }

  /// Squared norm of the tangency points of origin-passing hyperplanes with
  /// the boundary sphere: (eta1 |c|^2 - eta2) / (eta1 + 1).
  double phi(std::size_t i) const {
    const auto& o = obstacles_.at(i);
    const auto& p = params_[i];
    return (p.eta1 * o.center_norm_sq() - p.eta2) / (p.eta1 + 1.0);
  }

  /// Points of the boundary sphere whose tangent line passes through the
  /// origin. First element is the clockwise one (seen from the sphere
  /// centre direction).
  std::array<StateVector, 2> contact_points_2d(std::size_t i) const {
    const auto s = boundary_sphere(i);
    if (s.center.size() != 2) throw DimensionError("contact_points_2d requires n = 2");
    const double c2 = s.center.squaredNorm();
    // On the contact set |x|^2 = x.c and |x - c|^2 = rbar, hence
    // x.c = |x|^2 = c2 - rbar.
    const double p = c2 - s.radius_sq;
    if (!(p > 0.0) || !(p < c2)) throw GeometryError("boundary sphere has no origin tangents");
    const StateVector base = (p / c2) * s.center;
    StateVector perp(2);
    perp << -s.center(1), s.center(0);
    perp /= std::sqrt(c2);
    const double t = std::sqrt(p - p * p / c2);
    return {StateVector(base - t * perp), StateVector(base + t * perp)};
  }

  /// |x|^2 = x . xbar_c within tol (any dimension).
  bool on_contact_set(const StateVector& x, std::size_t i, double tol) const {
    const auto s = boundary_sphere(i);
    return std::abs(x.squaredNorm() - x.dot(s.center)) <= tol;
  }

  bool in_shrunk_band(const StateVector& x, std::size_t i, double eps_band) const {
    return std::abs(B(i, x) - L(x)) <= eps_band && x.squaredNorm() < phi(i);
  }

 private:
  std::vector<ObstacleSpec> obstacles_;
  std::vector<ObstacleParams> params_;
};

}  // namespace nclbf
