#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>

#include "nclbf/types.hpp"

namespace nclbf {

/// x' = f(x) + g(x) u. Evaluators must be pure and reentrant.
struct ControlAffineSystem {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  std::function<Eigen::VectorXd(const StateVector&)> f;
  std::function<Eigen::MatrixXd(const StateVector&)> g;

  Eigen::VectorXd dynamics(const StateVector& x, const InputVector& u) const { return f(x) + g(x) * u; }
};

/// x1' = -x1 + u1, x2' = -x2 + u2.
inline ControlAffineSystem builtin_linear2d() {
  ControlAffineSystem sys;
  sys.name = "linear2d";
  sys.n = 2;
  sys.m = 2;
  sys.f = [](const StateVector& x) -> Eigen::VectorXd { return -x; };
  sys.g = [](const StateVector&) -> Eigen::MatrixXd { return Eigen::MatrixXd::Identity(2, 2); };
  return sys;
}

/// Mass-spring-damper with a smoothed Coulomb/Stribeck friction term,
/// actuated on the velocity state only.
inline ControlAffineSystem builtin_nonlinear_mech() {
  ControlAffineSystem sys;
  sys.name = "nonlinear_mech";
  sys.n = 2;
  sys.m = 1;
  sys.f = [](const StateVector& x) -> Eigen::VectorXd {
    const double friction = (0.8 + 0.2 * std::exp(-100.0 * std::abs(x(1)))) * std::tanh(10.0 * x(1));
    Eigen::VectorXd dx(2);
    dx << x(1), -x(0) - x(1) - friction;
    return dx;
  };
  sys.g = [](const StateVector&) -> Eigen::MatrixXd {
    Eigen::MatrixXd g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  return sys;
}

inline bool is_builtin_system(const std::string& id) { return id == "linear2d" || id == "nonlinear_mech"; }

inline ControlAffineSystem system_by_id(const std::string& id) {
  if (id == "linear2d") return builtin_linear2d();
  if (id == "nonlinear_mech") return builtin_nonlinear_mech();
  throw SchemaError("unknown system '" + id + "'");
}

}  // namespace nclbf
