// Command-line front end: simulate, verify, inspect and plot scenarios.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nclbf/nclbf.hpp"

namespace fs = std::filesystem;
using namespace nclbf;

namespace {

struct Common {
  std::string scenario;
  std::string out;
  std::optional<double> dt;
  std::optional<double> t_max;
  bool allow_init = false;
};

// Exit codes: 0 success, 1 validation or invariant failure, 2 usage or
// input error.
constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

ScenarioConfig load(const Common& c, bool validate = true) {
  LoadOptions opts;
  opts.validate_params = validate;
  opts.allow_inadmissible_init = c.allow_init;
  auto res = resolve_scenario(c.scenario, opts);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  if (c.dt) res.config.integrator.dt = *c.dt;
  if (c.t_max) res.config.integrator.t_max = *c.t_max;
  const auto& ig = res.config.integrator;
  if (!(ig.dt > 0.0 && ig.dt < ig.t_max)) throw ParameterError("need 0 < dt < t_max");
  return res.config;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot write '" + path + "'");
  f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

int cmd_simulate(const Common& c, const std::string& switching, bool refine, bool timing) {
  const auto cfg = load(c);
  SimOptions opts;
  opts.switching = switching_from_string(switching);
  opts.refine_on_switch = refine;
  opts.allow_inadmissible_init = c.allow_init;
  const Simulator sim(cfg, opts);
  const auto start = std::chrono::steady_clock::now();
  const auto batch = run_batch(sim);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir = c.out.empty() ? fs::path("runs") : fs::path(c.out);
  fs::create_directories(dir);
  const auto& sys = sim.controller().system();
  Json summary;
  summary["scenario"] = c.scenario;
  summary["system"] = cfg.system_id;
  summary["switching"] = to_string(opts.switching);
  summary["dt"] = cfg.integrator.dt;
  summary["t_max"] = cfg.integrator.t_max;
  Json runs = Json::array();
  bool ok = true;
  for (std::size_t k = 0; k < batch.records.size(); ++k) {
    const auto& rec = batch.records[k];
    char name[32];
    std::snprintf(name, sizeof name, "run_%02zu.csv", k + 1);
    {
      std::ofstream f(dir / name, std::ios::binary);
      write_trajectory_csv(f, rec, sys.n, sys.m, cfg.num_obstacles());
    }
    Json j = to_json(batch.summaries[k]);
    j["csv"] = name;
    if (!rec.samples.empty()) {
      const auto inv = trajectory_invariants(rec, sim.controller(), cfg);
      j["invariants"] = to_json(inv);
      ok = ok && inv.pass();
    }
    ok = ok && rec.outcome.kind == Outcome::Kind::Converged;
    runs.push_back(j);
  }
  summary["runs"] = runs;
  summary["pass"] = ok;
  if (timing) summary["wall_time_s"] = wall;
  emit(dump(summary), (dir / "summary.json").string());
  for (const auto& s : batch.summaries) {
    std::cerr << "run " << s.index + 1 << ": " << to_string(s.outcome.kind) << " t=" << s.outcome.t
              << " |x|=" << s.final_norm << " min clearance=" << s.min_clearance << "\n";
  }
  return ok ? kOk : kFail;
}

int cmd_verify(const Common& c, std::size_t resolution) {
  if (resolution < 11) throw CLI::ValidationError("--resolution", "must be at least 11");
  const auto cfg = load(c);
  const Controller ctrl(cfg, system_by_id(cfg.system_id));
  const auto rep = grid_decrease_check(ctrl, cfg, resolution);
  emit(dump(to_json(rep)), c.out);
  return rep.pass() ? kOk : kFail;
}

int cmd_assumptions(const Common& c, std::size_t resolution) {
  const auto cfg = load(c);
  const auto rep = check_assumptions(system_by_id(cfg.system_id), cfg, resolution);
  emit(dump(to_json(rep)), c.out);
  return rep.pass() ? kOk : kFail;
}

int cmd_check_trajectory(const Common& c, const std::string& csv) {
  CsvLayout lay;
  const auto rec = read_trajectory_csv_file(csv, &lay);
  if (rec.samples.empty()) throw ParseError("trajectory '" + csv + "' has no samples");
  if (!c.scenario.empty()) {
    Common cc = c;
    cc.allow_init = true;
    const auto cfg = load(cc);
    if (cfg.state_dim() != lay.n || cfg.num_obstacles() != lay.n_obs) {
      throw DimensionError("trajectory columns do not match the scenario");
    }
    const Controller ctrl(cfg, system_by_id(cfg.system_id));
    const auto rep = trajectory_invariants(rec, ctrl, cfg);
    emit(dump(to_json(rep)), c.out);
    return rep.pass() ? kOk : kFail;
  }
  // Without a scenario only the recorded columns can be checked.
  InvariantReport rep;
  InvariantCheck safe{"clearance_positive", true, std::numeric_limits<double>::infinity(), {}, 0, "from mindist columns"};
  InvariantCheck mono{"V_nonincreasing", true, -std::numeric_limits<double>::infinity(), {}, 0, "from V column"};
  const double eps_conv = IntegratorSettings{}.eps_conv;
  for (std::size_t k = 0; k < rec.samples.size(); ++k) {
    const auto& s = rec.samples[k];
    for (double d : s.min_dist) {
      safe.value = std::min(safe.value, d);
      if (!(d > 0.0)) {
        safe.pass = false;
        ++safe.failures;
        if (!safe.first_failure_t) safe.first_failure_t = s.t;
      }
    }
    if (k + 1 < rec.samples.size() && s.x.norm() > eps_conv) {
      const double inc = rec.samples[k + 1].V - s.V;
      mono.value = std::max(mono.value, inc);
      if (inc > 1e-6) {
        mono.pass = false;
        ++mono.failures;
        if (!mono.first_failure_t) mono.first_failure_t = rec.samples[k + 1].t;
      }
    }
  }
  rep.checks = {safe, mono};
  Json j = to_json(rep);
  j["skipped"] = {"no_shrunk_band", "finite_difference_consistency"};
  emit(dump(j), c.out);
  return rep.pass() ? kOk : kFail;
}

int cmd_geometry(const Common& c) {
  const auto cfg = load(c);
  emit(dump(geometry_json(LyapunovBarrier(cfg))), c.out);
  return kOk;
}

int cmd_validate(const Common& c) {
  Common cc = c;
  cc.allow_init = true;
  const auto cfg = load(cc, false);
  const auto rep = validate_params(cfg);
  emit(dump(to_json(rep)), c.out);
  return rep.pass() ? kOk : kFail;
}

int cmd_plot(const Common& c, const std::vector<std::string>& csvs, const std::string& kind) {
  Common cc = c;
  cc.allow_init = true;
  const auto cfg = load(cc);
  std::vector<TrajectoryRecord> runs;
  for (const auto& p : csvs) runs.push_back(read_trajectory_csv_file(p));
  std::string svg;
  if (kind == "phase") {
    svg = phase_plot_svg(cfg, runs);
  } else {
    svg = value_plot_svg(runs);
  }
  emit(svg, c.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonsmooth Lyapunov-barrier safe stabilization toolkit"};
  app.require_subcommand(1);

  Common c;
  std::size_t resolution = 201;
  std::string switching = "filippov";
  bool refine = false;
  bool timing = false;
  std::string csv;
  std::vector<std::string> csvs;
  std::string kind = "phase";

  auto add_scenario = [&c](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--scenario", c.scenario, "built-in fixture name or scenario JSON path");
    if (required) opt->required();
  };

  auto* sim = app.add_subcommand("simulate", "simulate every initial state of a scenario");
  add_scenario(sim, true);
  sim->add_option("--out", c.out, "output directory (default: runs)");
  sim->add_option("--dt", c.dt, "integration step override");
  sim->add_option("--t-max", c.t_max, "horizon override");
  sim->add_flag("--allow-inadmissible-init", c.allow_init, "warn instead of rejecting inadmissible initial states");
  sim->add_option("--switching", switching, "filippov or hold")->check(CLI::IsMember({"filippov", "hold"}));
  sim->add_flag("--refine", refine, "hold mode: half-step refinement on region change");
  sim->add_flag("--timing", timing, "record wall time in summary.json");

  auto* ver = app.add_subcommand("verify-derivative", "grid check of the decrease condition");
  add_scenario(ver, true);
  ver->add_option("--resolution", resolution, "grid points per axis");
  ver->add_option("--out", c.out, "output file (default: stdout)");

  std::size_t assumption_res = 101;
  auto* asn = app.add_subcommand("check-assumptions", "sampled check of the input-direction assumptions");
  add_scenario(asn, true);
  asn->add_option("--resolution", assumption_res, "grid points per axis")->check(CLI::Range(2, 100000));
  asn->add_option("--out", c.out, "output file (default: stdout)");

  auto* trj = app.add_subcommand("check-trajectory", "invariant checks on a trajectory CSV");
  trj->add_option("--csv", csv, "trajectory CSV")->required();
  add_scenario(trj, false);
  trj->add_option("--out", c.out, "output file (default: stdout)");

  auto* geo = app.add_subcommand("geometry", "boundary spheres, buffer widths, contact points");
  add_scenario(geo, true);
  geo->add_option("--out", c.out, "output file (default: stdout)");

  auto* val = app.add_subcommand("validate-params", "check the parameter inequalities");
  add_scenario(val, true);
  val->add_option("--out", c.out, "output file (default: stdout)");

  auto* plt = app.add_subcommand("plot", "SVG phase portrait or V(t) plot from trajectory CSVs");
  add_scenario(plt, true);
  plt->add_option("--csv", csvs, "trajectory CSV files");
  plt->add_option("--kind", kind, "phase or value")->check(CLI::IsMember({"phase", "value"}));
  plt->add_option("--out", c.out, "output SVG (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(c, switching, refine, timing);
    if (ver->parsed()) return cmd_verify(c, resolution);
    if (asn->parsed()) return cmd_assumptions(c, assumption_res);
    if (trj->parsed()) return cmd_check_trajectory(c, csv);
    if (geo->parsed()) return cmd_geometry(c);
    if (val->parsed()) return cmd_validate(c);
    if (plt->parsed()) return cmd_plot(c, csvs, kind);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
