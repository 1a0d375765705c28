#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "nclbf/barrier.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/systems.hpp"
#include "nclbf/types.hpp"

namespace nclbf {

/// Which feedback law produced an input. K3 variants record the law κ3
/// dispatched to.
struct LawTag {
  enum class Kind { K1, K2, K3toK1, K3toK2, None };

  Kind kind = Kind::None;
  std::size_t obstacle = 0;

  static LawTag k1(std::size_t i) { return {Kind::K1, i}; }
  static LawTag k2() { return {Kind::K2, 0}; }
  static LawTag k3_k1(std::size_t i) { return {Kind::K3toK1, i}; }
  static LawTag k3_k2(std::size_t i) { return {Kind::K3toK2, i}; }
  static LawTag none() { return {}; }

  friend bool operator==(const LawTag& a, const LawTag& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::K2 || a.kind == Kind::None || a.obstacle == b.obstacle;
  }
};

inline std::string to_code(const LawTag& t) {
  const std::string idx = std::to_string(t.obstacle + 1);
  switch (t.kind) {
    case LawTag::Kind::K1: return "K1:" + idx;
    case LawTag::Kind::K2: return "K2";
    case LawTag::Kind::K3toK1: return "K3:" + idx + ">K1";
    case LawTag::Kind::K3toK2: return "K3:" + idx + ">K2";
    case LawTag::Kind::None: return "-";
  }
  return "-";
}

inline LawTag law_from_code(const std::string& code) {
  if (code == "K2") return LawTag::k2();
  if (code == "-") return LawTag::none();
  auto index = [&code](std::size_t from, std::size_t to) {
    std::size_t idx = 0;
    try {
      idx = std::stoul(code.substr(from, to - from));
    } catch (const std::exception&) {
      throw ParseError("bad law code '" + code + "'");
    }
    if (idx == 0) throw ParseError("law index is 1-based in '" + code + "'");
    return idx - 1;
  };
  if (code.rfind("K1:", 0) == 0) return LawTag::k1(index(3, code.size()));
  if (code.rfind("K3:", 0) == 0) {
    const auto gt = code.find('>');
    if (gt == std::string::npos) throw ParseError("bad law code '" + code + "'");
    const std::string target = code.substr(gt + 1);
    const std::size_t i = index(3, gt);
    if (target == "K1") return LawTag::k3_k1(i);
    if (target == "K2") return LawTag::k3_k2(i);
  }
  throw ParseError("bad law code '" + code + "'");
}

/// Region occupied one hold interval earlier.
struct RegionMemory {
  RegionLabel prev;
};

struct ControlDecision {
  InputVector u;
  LawTag law;
  RegionLabel region;
};

/// y^T / |y|^2.
inline Eigen::VectorXd mu(const Gradient& y) {
  const double n2 = y.squaredNorm();
  if (!(n2 > 0.0)) throw DomainError("mu of a zero vector");
  return y.transpose() / n2;
}

struct MuBar {
  Eigen::VectorXd value;
  std::vector<bool> active;
};

/// Componentwise reciprocal; entries with |y_j| <= tol are zeroed and
/// marked inactive.
inline MuBar mu_bar(const Gradient& y, double tol) {
  MuBar out{Eigen::VectorXd::Zero(y.size()), std::vector<bool>(static_cast<std::size_t>(y.size()), false)};
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (std::abs(y(j)) > tol) {
      out.value(j) = 1.0 / y(j);
      out.active[static_cast<std::size_t>(j)] = true;
    }
  }
  return out;
}

class Controller {
 public:
  Controller(ControlAffineSystem system, LyapunovBarrier barrier, ControllerGains gains, double tol_g = 1e-9)
      : sys_(std::move(system)), barrier_(std::move(barrier)), gains_(gains), tol_g_(tol_g) {}

  Controller(const ScenarioConfig& cfg, ControlAffineSystem system)
      : Controller(std::move(system), LyapunovBarrier(cfg), cfg.gains) {}

  const ControlAffineSystem& system() const { return sys_; }
  const LyapunovBarrier& barrier() const { return barrier_; }
  const ControllerGains& gains() const { return gains_; }
  double tol_g() const { return tol_g_; }

  InputVector zero_input() const { return InputVector::Zero(static_cast<Eigen::Index>(sys_.m)); }

  InputVector kappa1(std::size_t i, const StateVector& x) const {
    const Gradient gb = barrier_.grad_B(i, x);
    const double bf = gb.dot(sys_.f(x));
    const Gradient bg = gb * sys_.g(x);
    if (bg.norm() <= tol_g_) return zero_input();
    const auto mb = mu_bar(bg, tol_g_);
    const auto& c1 = barrier_.params(i).c1;
    return -mu(bg) * bf - c1.cwiseProduct(mb.value) * LyapunovBarrier::L(x);
  }

  InputVector kappa2(const StateVector& x) const {
    const Gradient gl = LyapunovBarrier::grad_L(x);
    const double lf = gl.dot(sys_.f(x));
    const Gradient lg = gl * sys_.g(x);
    const double n2 = lg.squaredNorm();
    if (std::sqrt(n2) <= tol_g_) return zero_input();
    return -(lf + std::sqrt(lf * lf + gains_.gamma * n2 * n2)) * mu(lg);
  }

  /// Law chosen by κ3 for a band point of obstacle i given the memory.
  LawTag kappa3_law(std::size_t i, const RegionMemory& memory) const {
    switch (memory.prev.kind) {
      case RegionLabel::Kind::Unsafe:
        throw InternalStateError("region memory points inside obstacle " + std::to_string(memory.prev.obstacle + 1));
      case RegionLabel::Kind::R1:
        return memory.prev.obstacle == i ? LawTag::k3_k1(i) : LawTag::k3_k2(i);
      case RegionLabel::Kind::R2:
      case RegionLabel::Kind::R3:
        return LawTag::k3_k2(i);
    }
    return LawTag::k3_k2(i);
  }

  InputVector kappa3(std::size_t i, const StateVector& x, const RegionMemory& memory) const {
    return kappa3_law(i, memory).kind == LawTag::Kind::K3toK1 ? kappa1(i, x) : kappa2(x);
  }

  ControlDecision control(const StateVector& x, const RegionMemory& memory, double eps_band) const {
    const RegionLabel region = barrier_.classify(x, eps_band);
    switch (region.kind) {
      case RegionLabel::Kind::Unsafe:
        throw SafetyViolationError("state inside obstacle " + std::to_string(region.obstacle + 1));
      case RegionLabel::Kind::R1:
        return {kappa1(region.obstacle, x), LawTag::k1(region.obstacle), region};
      case RegionLabel::Kind::R2:
        return {kappa2(x), LawTag::k2(), region};
      case RegionLabel::Kind::R3: {
        const LawTag law = kappa3_law(region.obstacle, memory);
        InputVector u = law.kind == LawTag::Kind::K3toK1 ? kappa1(region.obstacle, x) : kappa2(x);
        return {std::move(u), law, region};
      }
    }
    throw InternalStateError("unreachable region kind");
  }

  /// Input for a given law tag (used when replaying a decision).
  InputVector input_for(const LawTag& law, const StateVector& x) const {
    switch (law.kind) {
      case LawTag::Kind::K1:
      case LawTag::Kind::K3toK1: return kappa1(law.obstacle, x);
      case LawTag::Kind::K2:
      case LawTag::Kind::K3toK2: return kappa2(x);
      case LawTag::Kind::None: return zero_input();
    }
    return zero_input();
  }

 private:
  ControlAffineSystem sys_;
  LyapunovBarrier barrier_;
  ControllerGains gains_;
  double tol_g_;
};

}  // namespace nclbf
