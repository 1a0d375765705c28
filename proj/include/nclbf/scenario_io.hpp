#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "nclbf/barrier.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/systems.hpp"

namespace nclbf {

struct LoadOptions {
  // Reject configurations whose design inequalities fail.
  bool validate_params = true;
  // Downgrade inadmissible initial states from an error to a warning.
  bool allow_inadmissible_init = false;
  // Accept system ids that are not built in (evaluators supplied by caller).
  bool allow_unknown_system = false;
};

struct LoadResult {
  ScenarioConfig config;
  std::vector<std::string> warnings;
};

/// Initial states must start in R2 (outside every ball, every R1 and every
/// band around a switching surface).
inline bool initial_state_admissible(const LyapunovBarrier& barrier, const StateVector& x, double eps_band) {
  return barrier.classify(x, eps_band).is(RegionLabel::Kind::R2);
}

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError("'" + path + "' must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError("missing field '" + (path.empty() ? key : path + "." + key) + "'");
  return *it;
}

inline double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError("field '" + path + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError("field '" + path + "' must be finite");
  return d;
}

inline Eigen::VectorXd as_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError("field '" + path + "' must be an array");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = as_real(v[k], path + "[" + std::to_string(k) + "]");
  return out;
}

inline json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

}  // namespace detail

inline LoadResult load_scenario_with_warnings(std::string_view text, const LoadOptions& opts = {}) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario parse error: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("scenario must be a JSON object");

  LoadResult result;
  ScenarioConfig& cfg = result.config;

  const auto& sys_v = detail::require(doc, "system", "");
  if (!sys_v.is_string()) throw SchemaError("field 'system' must be a string");
  cfg.system_id = sys_v.get<std::string>();
  std::optional<ControlAffineSystem> sys;
  if (is_builtin_system(cfg.system_id)) {
    sys = system_by_id(cfg.system_id);
  } else if (!opts.allow_unknown_system) {
    throw SchemaError("unknown system '" + cfg.system_id + "'");
  }

  const auto& box = detail::require(doc, "state_box", "");
  if (!box.is_array() || box.empty()) throw SchemaError("field 'state_box' must be a non-empty array of [lo, hi]");
  for (std::size_t k = 0; k < box.size(); ++k) {
    const std::string path = "state_box[" + std::to_string(k) + "]";
    const auto b = detail::as_vector(box[k], path);
    if (b.size() != 2 || !(b(0) < b(1))) throw SchemaError("field '" + path + "' must be [lo, hi] with lo < hi");
    cfg.state_box.bounds.emplace_back(b(0), b(1));
  }
  const std::size_t n = cfg.state_box.dim();
  if (sys && sys->n != n) {
    throw DimensionError("state_box has " + std::to_string(n) + " axes but system '" + cfg.system_id + "' has n = " +
                         std::to_string(sys->n));
  }

  const auto& obs = detail::require(doc, "obstacles", "");
  if (!obs.is_array()) throw SchemaError("field 'obstacles' must be an array");
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const std::string path = "obstacles[" + std::to_string(k) + "]";
    const auto center = detail::as_vector(detail::require(obs[k], "center", path), path + ".center");
    if (static_cast<std::size_t>(center.size()) != n) {
      throw DimensionError("'" + path + ".center' has length " + std::to_string(center.size()) + ", expected " +
                           std::to_string(n));
    }
    ObstacleSpec o;
    if (obs[k].contains("radius")) {
      const double radius = detail::as_real(obs[k]["radius"], path + ".radius");
      if (!(radius > 0.0)) throw SchemaError("field '" + path + ".radius' must be positive");
      o = ObstacleSpec::from_radius(center, radius);
    } else if (obs[k].contains("radius_sq")) {
      const double r = detail::as_real(obs[k]["radius_sq"], path + ".radius_sq");
      if (!(r > 0.0)) throw SchemaError("field '" + path + ".radius_sq' must be positive");
      o = ObstacleSpec::from_radius_sq(center, r);
    } else {
      throw SchemaError("missing field '" + path + ".radius'");
    }
    if (!(o.center_norm_sq() > o.radius_sq)) throw ParameterError(path + ": origin inside unsafe ball");
    cfg.obstacles.push_back(std::move(o));
  }

  const auto& params = detail::require(doc, "params", "");
  if (!params.is_array()) throw SchemaError("field 'params' must be an array");
  if (params.size() != cfg.obstacles.size()) {
    throw DimensionError("'params' has " + std::to_string(params.size()) + " entries for " +
                         std::to_string(cfg.obstacles.size()) + " obstacles");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::string path = "params[" + std::to_string(k) + "]";
    ObstacleParams p;
    p.eta1 = detail::as_real(detail::require(params[k], "eta1", path), path + ".eta1");
    p.c1 = detail::as_vector(detail::require(params[k], "c1", path), path + ".c1");
    if (sys && static_cast<std::size_t>(p.c1.size()) != sys->m) {
      throw DimensionError("'" + path + ".c1' has length " + std::to_string(p.c1.size()) + ", expected m = " +
                           std::to_string(sys->m));
    }
    const bool has_w = params[k].contains("w");
    const bool has_eta2 = params[k].contains("eta2");
    if (has_w) p.w = detail::as_real(params[k]["w"], path + ".w");
    if (has_eta2) {
      p.eta2 = detail::as_real(params[k]["eta2"], path + ".eta2");
      p.eta2_explicit = true;
      if (has_w) {
        const double derived = eta2_lower_bound(p.eta1, cfg.obstacles[k]) + *p.w;
        const double rel = std::abs(derived - p.eta2) / std::max(1.0, std::abs(p.eta2));
        if (rel > 1e-9) {
          std::ostringstream os;
          os << path << ": eta2 = " << p.eta2 << " disagrees with eta1/w (which give " << derived << ")";
          throw ParameterError(os.str());
        }
      }
    } else if (has_w) {
      p.eta2 = derive_eta2(p.eta1, cfg.obstacles[k], *p.w);
      p.eta2_explicit = false;
    } else {
      throw SchemaError("'" + path + "' needs 'eta2' or 'w'");
    }
    cfg.params.push_back(std::move(p));
  }

  cfg.gains.gamma = detail::as_real(detail::require(doc, "gamma", ""), "gamma");

  if (doc.contains("integrator")) {
    const auto& ig = doc["integrator"];
    if (!ig.is_object()) throw SchemaError("field 'integrator' must be an object");
    auto read = [&ig](const char* key, double& dst) {
      if (ig.contains(key)) dst = detail::as_real(ig[key], std::string("integrator.") + key);
    };
    read("dt", cfg.integrator.dt);
    read("t_max", cfg.integrator.t_max);
    read("eps_conv", cfg.integrator.eps_conv);
    read("eps_band", cfg.integrator.eps_band);
  }

  if (doc.contains("initial_states")) {
    const auto& xs = doc["initial_states"];
    if (!xs.is_array()) throw SchemaError("field 'initial_states' must be an array");
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const std::string path = "initial_states[" + std::to_string(k) + "]";
      auto x = detail::as_vector(xs[k], path);
      if (static_cast<std::size_t>(x.size()) != n) {
        throw DimensionError("'" + path + "' has length " + std::to_string(x.size()) + ", expected " + std::to_string(n));
      }
      cfg.initial_states.push_back(std::move(x));
    }
  }

  if (opts.validate_params) {
    const auto rep = validate_params(cfg);
    if (!rep.pass()) {
      std::string msg = "parameter check failed:";
      for (const auto& f : rep.failures()) msg += "\n  " + f;
      throw ParameterError(msg);
    }
  }

  const LyapunovBarrier barrier(cfg);
  for (std::size_t k = 0; k < cfg.initial_states.size(); ++k) {
    const auto& x = cfg.initial_states[k];
    if (!initial_state_admissible(barrier, x, cfg.integrator.eps_band)) {
      const std::string msg = "initial_states[" + std::to_string(k) + "] is not admissible (region " +
                              to_code(barrier.classify(x, cfg.integrator.eps_band)) + ")";
      if (!opts.allow_inadmissible_init) throw ParameterError(msg);
      result.warnings.push_back(msg);
    }
  }
  return result;
}

inline ScenarioConfig load_scenario(std::string_view text, const LoadOptions& opts = {}) {
  return load_scenario_with_warnings(text, opts).config;
}

inline std::string save_scenario(const ScenarioConfig& cfg) {
  using detail::json;
  json doc;
  doc["system"] = cfg.system_id;
  json box = json::array();
  for (const auto& [lo, hi] : cfg.state_box.bounds) box.push_back({lo, hi});
  doc["state_box"] = box;
  json obs = json::array();
  for (const auto& o : cfg.obstacles) {
    json j;
    j["center"] = detail::vector_json(o.center);
    if (o.radius_as_given) {
      j["radius"] = *o.radius_as_given;
    } else {
      j["radius_sq"] = o.radius_sq;
    }
    obs.push_back(j);
  }
  doc["obstacles"] = obs;
  json params = json::array();
  for (const auto& p : cfg.params) {
    json j;
    j["eta1"] = p.eta1;
    if (p.w) j["w"] = *p.w;
    if (p.eta2_explicit || !p.w) j["eta2"] = p.eta2;
    j["c1"] = detail::vector_json(p.c1);
    params.push_back(j);
  }
  doc["params"] = params;
  doc["gamma"] = cfg.gains.gamma;
  doc["integrator"] = {{"dt", cfg.integrator.dt},
                       {"t_max", cfg.integrator.t_max},
                       {"eps_conv", cfg.integrator.eps_conv},
                       {"eps_band", cfg.integrator.eps_band}};
  json xs = json::array();
  for (const auto& x : cfg.initial_states) xs.push_back(detail::vector_json(x));
  doc["initial_states"] = xs;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Built-in fixtures

namespace detail {

inline StateVector vec2(double a, double b) {
  StateVector v(2);
  v << a, b;
  return v;
}

}  // namespace detail

/// Linear system with a single ball at (2,2).
inline ScenarioConfig fixture_linear2d_single() {
  using detail::vec2;
  ScenarioConfig cfg;
  cfg.system_id = "linear2d";
  cfg.state_box.bounds = {{-5.0, 5.0}, {-5.0, 5.0}};
  cfg.obstacles.push_back(ObstacleSpec::from_radius_sq(vec2(2.0, 2.0), 2.0));
  ObstacleParams p;
  p.eta1 = 9.0;
  p.w = 0.9;
  p.eta2 = derive_eta2(p.eta1, cfg.obstacles[0], *p.w);
  p.eta2_explicit = false;
  p.c1 = vec2(10.0, 20.0);
  cfg.params.push_back(p);
  cfg.gains.gamma = 0.1;
  cfg.initial_states = {vec2(5, 5), vec2(4, 4), vec2(3.5, 3.5), vec2(5, 2), vec2(3, 5)};
  return cfg;
}

/// Nonlinear mechanical system with three balls; eta2 given directly.
inline ScenarioConfig fixture_nonlinear_mech_three() {
  using detail::vec2;
  ScenarioConfig cfg;
  cfg.system_id = "nonlinear_mech";
  cfg.state_box.bounds = {{-5.0, 5.0}, {-5.0, 5.0}};
  cfg.obstacles.push_back(ObstacleSpec::from_radius_sq(vec2(2.0, 0.0), 0.7));
  cfg.obstacles.push_back(ObstacleSpec::from_radius_sq(vec2(2.0, 2.0), 0.5));
  cfg.obstacles.push_back(ObstacleSpec::from_radius_sq(vec2(-2.0, 0.0), 1.0));
  auto make = [](double eta1, double eta2, double c) {
    ObstacleParams p;
    p.eta1 = eta1;
    p.eta2 = eta2;
    p.eta2_explicit = true;
    p.c1 = Eigen::VectorXd::Constant(1, c);
    return p;
  };
  cfg.params = {make(11.0, 16.0, 10.0), make(19.0, 22.7, 20.0), make(18.0, 27.2, 20.0)};
  cfg.gains.gamma = 5.0;
  cfg.initial_states = {vec2(-5, 5), vec2(-4, -5), vec2(-5, 0), vec2(5, -5),
                        vec2(5, 0),  vec2(4, 4),   vec2(3, 2),  vec2(2, 5)};
  return cfg;
}

/// Nominal buffer parameters that accompany the eta2 values of the
/// three-obstacle fixture.
inline std::vector<double> fixture_nonlinear_mech_three_nominal_w() { return {0.3, 0.7, 0.2}; }

inline std::vector<std::string> builtin_scenario_names() { return {"linear2d_single", "nonlinear_mech_three"}; }

inline std::optional<ScenarioConfig> builtin_scenario(const std::string& name) {
  if (name == "linear2d_single") return fixture_linear2d_single();
  if (name == "nonlinear_mech_three") return fixture_nonlinear_mech_three();
  return std::nullopt;
}

/// Built-in fixture name or path to a scenario JSON file.
inline LoadResult resolve_scenario(const std::string& name_or_path, const LoadOptions& opts = {}) {
  if (auto cfg = builtin_scenario(name_or_path)) {
    LoadResult r;
    r.config = *cfg;
    return r;
  }
  std::ifstream in(name_or_path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario '" + name_or_path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario_with_warnings(ss.str(), opts);
}

}  // namespace nclbf
