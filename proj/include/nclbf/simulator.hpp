#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nclbf/barrier.hpp"
#include "nclbf/controller.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/scenario_io.hpp"
#include "nclbf/systems.hpp"
#include "nclbf/types.hpp"

namespace nclbf {

/// Classical four-stage Runge-Kutta step with the input held constant.
inline StateVector rk4_step(const ControlAffineSystem& sys, const StateVector& x, const InputVector& u, double dt) {
  const Eigen::VectorXd k1 = sys.dynamics(x, u);
  const Eigen::VectorXd k2 = sys.dynamics(x + 0.5 * dt * k1, u);
  const Eigen::VectorXd k3 = sys.dynamics(x + 0.5 * dt * k2, u);
  const Eigen::VectorXd k4 = sys.dynamics(x + dt * k3, u);
  StateVector out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw NumericBlowupError("non-finite state after integration step");
  return out;
}

enum class SwitchingMode {
  // Input recomputed on substeps, switching instants located on the
  // surface B = L, sliding resolved by the equivalent convex combination.
  Filippov,
  // Input from the region-dispatched controller, held over the whole step.
  Hold,
};

inline std::string to_string(SwitchingMode m) { return m == SwitchingMode::Filippov ? "filippov" : "hold"; }

inline SwitchingMode switching_from_string(const std::string& s) {
  if (s == "filippov") return SwitchingMode::Filippov;
  if (s == "hold") return SwitchingMode::Hold;
  throw ParseError("unknown switching mode '" + s + "'");
}

struct SimOptions {
  SwitchingMode switching = SwitchingMode::Filippov;
  bool allow_inadmissible_init = false;
  // Largest state displacement per substep (Filippov mode).
  double max_displacement = 1e-2;
  std::size_t max_substeps = 200000;
  // Hold mode: redo a step as two half steps when its end point changes
  // region.
  bool refine_on_switch = false;
};

struct StepSample {
  double t = 0.0;
  StateVector x;
  InputVector u;
  double V = 0.0;
  RegionLabel region;
  LawTag law;
  std::vector<double> min_dist;
};

struct Outcome {
  enum class Kind { Converged, Timeout, SafetyViolation, InitRejected, NumericBlowup, Error, Unrecorded };

  Kind kind = Kind::Unrecorded;
  double t = 0.0;
  std::size_t obstacle = 0;
  std::string detail;
};

inline std::string to_string(Outcome::Kind k) {
  switch (k) {
    case Outcome::Kind::Converged: return "Converged";
    case Outcome::Kind::Timeout: return "Timeout";
    case Outcome::Kind::SafetyViolation: return "SafetyViolation";
    case Outcome::Kind::InitRejected: return "InitRejected";
    case Outcome::Kind::NumericBlowup: return "NumericBlowup";
    case Outcome::Kind::Error: return "Error";
    case Outcome::Kind::Unrecorded: return "Unrecorded";
  }
  return "Unrecorded";
}

struct TrajectoryRecord {
  StateVector x0;
  std::vector<StepSample> samples;
  Outcome outcome;
};

class Simulator {
 public:
  Simulator(ScenarioConfig cfg, ControlAffineSystem sys, SimOptions opts = {})
      : cfg_(std::move(cfg)), ctrl_(cfg_, std::move(sys)), opts_(opts) {}

  explicit Simulator(ScenarioConfig cfg, SimOptions opts = {})
      : Simulator(cfg, system_by_id(cfg.system_id), opts) {}

  const ScenarioConfig& config() const { return cfg_; }
  const Controller& controller() const { return ctrl_; }
  const LyapunovBarrier& barrier() const { return ctrl_.barrier(); }
  const SimOptions& options() const { return opts_; }

  TrajectoryRecord simulate(const StateVector& x0) const {
    TrajectoryRecord rec;
    rec.x0 = x0;
    const auto& ig = cfg_.integrator;
    const auto& bar = barrier();

    if (static_cast<std::size_t>(x0.size()) != ctrl_.system().n) {
      throw DimensionError("initial state has length " + std::to_string(x0.size()) + ", expected " +
                           std::to_string(ctrl_.system().n));
    }
    if (!opts_.allow_inadmissible_init && !initial_state_admissible(bar, x0, ig.eps_band)) {
      rec.outcome = {Outcome::Kind::InitRejected, 0.0, 0,
                     "initial state not admissible (region " + to_code(bar.classify(x0, ig.eps_band)) + ")"};
      return rec;
    }

    const auto n_steps = static_cast<std::size_t>(std::ceil(ig.t_max / ig.dt - 1e-9));
    StateVector x = x0;
    RegionMemory memory{bar.classify(x0, ig.eps_band)};
    try {
      for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * ig.dt;
        const RegionLabel region = bar.classify(x, ig.eps_band);
        if (region.is(RegionLabel::Kind::Unsafe)) {
          rec.samples.push_back(unsafe_sample(t, x, region));
          rec.outcome = {Outcome::Kind::SafetyViolation, t, region.obstacle, "entered obstacle"};
          return rec;
        }
        StepDecision d = decide(x, region, memory);
        rec.samples.push_back(make_sample(t, x, d.u, region, d.law));
        // u in a sample is the input applied over [t, t + dt); a decision
        // is only shown for the last sample.
        if (x.norm() <= ig.eps_conv) {
          rec.outcome = {Outcome::Kind::Converged, t, 0, {}};
          return rec;
        }
        if (k >= n_steps) {
          rec.outcome = {Outcome::Kind::Timeout, t, 0, {}};
          return rec;
        }
        const auto step = advance(x, d, region);
        rec.samples.back().u = step.u_applied;
        if (step.violation) {
          const double tv = t + step.elapsed;
          const RegionLabel r = bar.classify(step.x, ig.eps_band);
          rec.samples.push_back(unsafe_sample(tv, step.x, r));
          rec.outcome = {Outcome::Kind::SafetyViolation, tv, r.obstacle, "entered obstacle"};
          return rec;
        }
        x = step.x;
        memory.prev = region;
      }
    } catch (const NumericBlowupError& e) {
      rec.outcome = {Outcome::Kind::NumericBlowup, rec.samples.empty() ? 0.0 : rec.samples.back().t, 0, e.what()};
    }
    return rec;
  }

 private:
  enum class Mode { Law1, Law2, Slide };

  struct StepDecision {
    InputVector u;
    LawTag law;
  };

  struct FilippovChoice {
    Mode mode = Mode::Law2;
    std::size_t obstacle = 0;
    InputVector u;
  };

  struct StepResult {
    StateVector x;
    bool violation = false;
    double elapsed = 0.0;
    // Time average of the inputs applied during the step.
    InputVector u_applied;
  };

  double surface_tol(const StateVector& x) const { return 1e-9 * (1.0 + LyapunovBarrier::L(x)); }

  /// Rate of change of B_i - L along f + g u.
  double gap_rate(std::size_t i, const StateVector& x, const InputVector& u) const {
    const Gradient gh = barrier().grad_B(i, x) - LyapunovBarrier::grad_L(x);
    return gh.dot(ctrl_.system().dynamics(x, u));
  }

  FilippovChoice choose(const StateVector& x) const {
    const auto& bar = barrier();
    if (bar.size() == 0) return {Mode::Law2, 0, ctrl_.kappa2(x)};
    const auto [i, bmax] = bar.max_barrier(x);
    const double h = bmax - LyapunovBarrier::L(x);
    const double z = surface_tol(x);
    if (h > z) return {Mode::Law1, i, ctrl_.kappa1(i, x)};
    if (h < -z) return {Mode::Law2, i, ctrl_.kappa2(x)};
    InputVector u1 = ctrl_.kappa1(i, x);
    InputVector u2 = ctrl_.kappa2(x);
    const double s1 = gap_rate(i, x, u1);
    const double s2 = gap_rate(i, x, u2);
    if (s1 < 0.0 && s2 > 0.0) {
      // Equivalent control keeping the state on the surface, with a weak
      // pull back towards h = 0.
      const double k = 0.5 / cfg_.integrator.dt;
      const double lambda = std::clamp((s2 + k * h) / (s2 - s1), 0.0, 1.0);
      return {Mode::Slide, i, lambda * u1 + (1.0 - lambda) * u2};
    }
    if (s2 <= 0.0) return {Mode::Law2, i, std::move(u2)};
    return {Mode::Law1, i, std::move(u1)};
  }

  static LawTag tag_for(const FilippovChoice& c, const RegionLabel& region) {
    const bool band = region.is(RegionLabel::Kind::R3);
    switch (c.mode) {
      case Mode::Law1: return band ? LawTag::k3_k1(c.obstacle) : LawTag::k1(c.obstacle);
      case Mode::Law2: return band ? LawTag::k3_k2(c.obstacle) : LawTag::k2();
      case Mode::Slide: return LawTag::k3_k2(c.obstacle);
    }
    return LawTag::k2();
  }

  StepDecision decide(const StateVector& x, const RegionLabel& region, const RegionMemory& memory) const {
    if (opts_.switching == SwitchingMode::Hold) {
      auto d = ctrl_.control(x, memory, cfg_.integrator.eps_band);
      return {std::move(d.u), d.law};
    }
    auto c = choose(x);
    const LawTag law = tag_for(c, region);
    return {std::move(c.u), law};
  }

  std::optional<std::size_t> inside_any(const StateVector& x) const {
    for (std::size_t i = 0; i < barrier().size(); ++i) {
      if (barrier().inside_obstacle(i, x)) return i;
    }
    return std::nullopt;
  }

  StepResult advance(const StateVector& x, const StepDecision& d, const RegionLabel& region) const {
    const double dt = cfg_.integrator.dt;
    const auto& sys = ctrl_.system();
    if (opts_.switching == SwitchingMode::Hold) {
      StateVector xn = rk4_step(sys, x, d.u, dt);
      if (opts_.refine_on_switch && !(barrier().classify(xn, cfg_.integrator.eps_band) == region)) {
        const StateVector xm = rk4_step(sys, x, d.u, 0.5 * dt);
        if (inside_any(xm)) return {xm, true, 0.5 * dt, d.u};
        const auto dm = ctrl_.control(xm, RegionMemory{region}, cfg_.integrator.eps_band);
        xn = rk4_step(sys, xm, dm.u, 0.5 * dt);
        return {xn, inside_any(xn).has_value(), dt, 0.5 * (d.u + dm.u)};
      }
      return {xn, inside_any(xn).has_value(), dt, d.u};
    }

    StateVector cur = x;
    double rem = dt;
    std::size_t count = 0;
    InputVector u_sum = InputVector::Zero(d.u.size());
    while (rem > 1e-12 * dt) {
      if (++count > opts_.max_substeps) throw NumericBlowupError("substep limit exceeded");
      const FilippovChoice c = choose(cur);
      double tau = rem;
      const double speed = sys.dynamics(cur, c.u).norm();
      if (speed * tau > opts_.max_displacement) tau = opts_.max_displacement / speed;
      StateVector next = rk4_step(sys, cur, c.u, tau);
      if (c.mode != Mode::Slide && barrier().size() > 0) {
        const double h0 = barrier().switching_gap(cur);
        const double h1 = barrier().switching_gap(next);
        const double z = surface_tol(cur);
        const bool crossed = (c.mode == Mode::Law1 && h0 > z && h1 < 0.0) ||
                             (c.mode == Mode::Law2 && h0 < -z && h1 > 0.0);
        if (crossed) tau = locate_crossing(cur, c.u, tau, h0, next);
      }
      u_sum += tau * c.u;
      if (inside_any(next)) {
        const double elapsed = dt - rem + tau;
        return {next, true, elapsed, u_sum / elapsed};
      }
      cur = std::move(next);
      rem -= tau;
    }
    return {cur, false, dt, u_sum / (dt - rem)};
  }

  /// Bisects for the time at which the gap changes sign; returns the time
  /// and stores the state there in `out`.
  double locate_crossing(const StateVector& x, const InputVector& u, double tau, double h0, StateVector& out) const {
    const auto& sys = ctrl_.system();
    double lo = 0.0;
    double hi = tau;
    StateVector hi_state = out;
    const double tol = 0.25 * surface_tol(x);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      StateVector xm = rk4_step(sys, x, u, mid);
      const double hm = barrier().switching_gap(xm);
      if (std::abs(hm) <= tol) {
        out = std::move(xm);
        return mid;
      }
      if ((hm > 0.0) == (h0 > 0.0)) {
        lo = mid;
      } else {
        hi = mid;
        hi_state = std::move(xm);
      }
      if (hi - lo <= 0.0) break;
    }
    out = std::move(hi_state);
    return hi;
  }

  std::vector<double> clearances(const StateVector& x) const {
    std::vector<double> out(barrier().size());
    for (std::size_t i = 0; i < barrier().size(); ++i) out[i] = barrier().clearance(i, x);
    return out;
  }

  StepSample make_sample(double t, const StateVector& x, const InputVector& u, const RegionLabel& region,
                         const LawTag& law) const {
    return {t, x, u, barrier().V(x), region, law, clearances(x)};
  }

  StepSample unsafe_sample(double t, const StateVector& x, const RegionLabel& region) const {
    InputVector u = InputVector::Constant(static_cast<Eigen::Index>(ctrl_.system().m),
                                          std::numeric_limits<double>::quiet_NaN());
    return make_sample(t, x, u, region, LawTag::none());
  }

  ScenarioConfig cfg_;
  Controller ctrl_;
  SimOptions opts_;
};

// ---------------------------------------------------------------------------
// Batch runs

struct RunSummary {
  std::size_t index = 0;
  StateVector x0;
  Outcome outcome;
  double final_norm = std::numeric_limits<double>::quiet_NaN();
  // Largest V(x_{k+1}) - V(x_k) over steps starting outside the eps_conv
  // ball; -inf when there is no such step.
  double max_V_increase = -std::numeric_limits<double>::infinity();
  double min_clearance = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
};

inline RunSummary summarize(const TrajectoryRecord& rec, std::size_t index, double eps_conv) {
  RunSummary s;
  s.index = index;
  s.x0 = rec.x0;
  s.outcome = rec.outcome;
  s.samples = rec.samples.size();
  if (rec.samples.empty()) return s;
  s.final_norm = rec.samples.back().x.norm();
  for (std::size_t k = 0; k < rec.samples.size(); ++k) {
    const auto& smp = rec.samples[k];
    for (double d : smp.min_dist) s.min_clearance = std::min(s.min_clearance, d);
    if (k + 1 < rec.samples.size() && smp.x.norm() > eps_conv) {
      s.max_V_increase = std::max(s.max_V_increase, rec.samples[k + 1].V - smp.V);
    }
  }
  return s;
}

/// Worker count: NCLBF_THREADS caps it (0 or unset means hardware
/// concurrency).
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NCLBF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) cap = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

struct BatchResult {
  std::vector<TrajectoryRecord> records;
  std::vector<RunSummary> summaries;
};

inline BatchResult run_batch(const Simulator& sim, const std::vector<StateVector>& x0s) {
  BatchResult out;
  out.records.resize(x0s.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t k = next++; k < x0s.size(); k = next++) {
      try {
        out.records[k] = sim.simulate(x0s[k]);
      } catch (const Error& e) {
        out.records[k].x0 = x0s[k];
        out.records[k].outcome = {Outcome::Kind::Error, 0.0, 0, e.what()};
      }
    }
  };
  const std::size_t workers = worker_count(x0s.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t k = 0; k < x0s.size(); ++k) {
    out.summaries.push_back(summarize(out.records[k], k, sim.config().integrator.eps_conv));
  }
  return out;
}

inline BatchResult run_batch(const Simulator& sim) { return run_batch(sim, sim.config().initial_states); }

// ---------------------------------------------------------------------------
// Trajectory CSV

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec, std::size_t n, std::size_t m,
                                 std::size_t n_obs) {
  os << "t";
  for (std::size_t j = 1; j <= n; ++j) os << ",x" << j;
  for (std::size_t j = 1; j <= m; ++j) os << ",u" << j;
  os << ",V,region,law";
  for (std::size_t j = 1; j <= n_obs; ++j) os << ",mindist" << j;
  os << "\n";
  for (const auto& s : rec.samples) {
    os << format_real(s.t);
    for (Eigen::Index j = 0; j < s.x.size(); ++j) os << ',' << format_real(s.x(j));
    for (Eigen::Index j = 0; j < s.u.size(); ++j) os << ',' << format_real(s.u(j));
    os << ',' << format_real(s.V) << ',' << to_code(s.region) << ',' << to_code(s.law);
    for (double d : s.min_dist) os << ',' << format_real(d);
    os << "\n";
  }
}

inline std::string trajectory_csv(const TrajectoryRecord& rec, std::size_t n, std::size_t m, std::size_t n_obs) {
  std::ostringstream os;
  write_trajectory_csv(os, rec, n, m, n_obs);
  return os.str();
}

struct CsvLayout {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t n_obs = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_real(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace detail

inline TrajectoryRecord read_trajectory_csv(std::istream& is, CsvLayout* layout = nullptr) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = detail::split_csv_line(line);
  CsvLayout lay;
  std::size_t col = 0;
  if (head.empty() || head[col++] != "t") throw ParseError("line 1: header must start with 't'");
  while (col < head.size() && head[col] == "x" + std::to_string(lay.n + 1)) ++lay.n, ++col;
  while (col < head.size() && head[col] == "u" + std::to_string(lay.m + 1)) ++lay.m, ++col;
  if (col + 3 > head.size() || head[col] != "V" || head[col + 1] != "region" || head[col + 2] != "law") {
    throw ParseError("line 1: expected V,region,law after state and input columns");
  }
  col += 3;
  while (col < head.size() && head[col] == "mindist" + std::to_string(lay.n_obs + 1)) ++lay.n_obs, ++col;
  if (col != head.size()) throw ParseError("line 1: unexpected column '" + head[col] + "'");
  if (lay.n == 0) throw ParseError("line 1: no state columns");

  TrajectoryRecord rec;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != head.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(head.size()) + " fields, got " +
                       std::to_string(cells.size()));
    }
    StepSample s;
    std::size_t c = 0;
    s.t = detail::parse_real(cells[c++], lineno);
    s.x.resize(static_cast<Eigen::Index>(lay.n));
    for (std::size_t j = 0; j < lay.n; ++j) s.x(static_cast<Eigen::Index>(j)) = detail::parse_real(cells[c++], lineno);
    s.u.resize(static_cast<Eigen::Index>(lay.m));
    for (std::size_t j = 0; j < lay.m; ++j) s.u(static_cast<Eigen::Index>(j)) = detail::parse_real(cells[c++], lineno);
    s.V = detail::parse_real(cells[c++], lineno);
    s.region = region_from_code(cells[c++]);
    s.law = law_from_code(cells[c++]);
    for (std::size_t j = 0; j < lay.n_obs; ++j) s.min_dist.push_back(detail::parse_real(cells[c++], lineno));
    rec.samples.push_back(std::move(s));
  }
  if (!rec.samples.empty()) rec.x0 = rec.samples.front().x;
  if (layout) *layout = lay;
  return rec;
}

inline TrajectoryRecord read_trajectory_csv_file(const std::string& path, CsvLayout* layout = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory '" + path + "'");
  return read_trajectory_csv(in, layout);
}

}  // namespace nclbf
