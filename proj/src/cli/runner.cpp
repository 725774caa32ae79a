#include "cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "ggflow/dvt.hpp"
#include "ggflow/errors.hpp"
#include "ggflow/evolution.hpp"
#include "ggflow/functionals.hpp"
#include "ggflow/io.hpp"
#include "ggflow/jko.hpp"
#include "ggflow/ldp.hpp"

namespace ggflow::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kScenarios = {"evolve", "dvt", "jko", "ldp", "check", "batch"};

const std::set<std::string> kTopLevelKeys = {
    "scenario", "name",  "system", "dissipation", "entropy",     "initial",     "target", "T",
    "dt",       "rtol",  "atol",   "tau",         "tau_list",    "M",           "seed",   "n_particles",
    "bins",     "runs",  "threads", "psi_samples", "tolerances"};

const std::set<std::string> kToleranceKeys = {"deficit_rel", "mass_rel", "lln_tv", "jko_factor",
                                              "psi",         "edi",      "kkt"};

struct Context {
  fs::path out_dir;
  fs::path base_dir;
};

class Checks {
 public:
  void add(const std::string& name, double value, double threshold, bool passed) {
    list_.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"passed", passed}});
    if (!passed) failed_.push_back(name);
  }
  /// value <= threshold
  void at_most(const std::string& name, double value, double threshold) {
    add(name, value, threshold, value <= threshold);
  }
  /// value >= threshold
  void at_least(const std::string& name, double value, double threshold) {
    add(name, value, threshold, value >= threshold);
  }
  void flag(const std::string& name, bool passed) { add(name, passed ? 1.0 : 0.0, 1.0, passed); }

  const json& list() const { return list_; }
  const std::vector<std::string>& failed() const { return failed_; }

 private:
  json list_ = json::array();
  std::vector<std::string> failed_;
};

double number(const json& cfg, const std::string& key, double fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_number()) throw ConfigError(key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
  return x;
}

double positive(const json& cfg, const std::string& key, double fallback) {
  const double x = number(cfg, key, fallback);
  if (!(x > 0.0)) throw ConfigError(key, "must be positive (got " + io::format_double(x) + ")");
  return x;
}

long long integer(const json& cfg, const std::string& key, long long fallback, long long lo, long long hi) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_number_integer()) throw ConfigError(key, "must be an integer");
  const long long x = v.get<long long>();
  if (x < lo || x > hi)
    throw ConfigError(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

std::uint64_t seed_of(const json& cfg) {
  if (!cfg.contains("seed")) return 0;
  const json& v = cfg.at("seed");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    throw ConfigError("seed", "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

double tolerance(const json& cfg, const std::string& key, double fallback) {
  if (!cfg.contains("tolerances")) return fallback;
  const json& t = cfg.at("tolerances");
  if (!t.contains(key)) return fallback;
  if (!t.at(key).is_number() || !(t.at(key).get<double>() > 0.0))
    throw ConfigError("tolerances." + key, "must be a positive number");
  return t.at(key).get<double>();
}

void validate_keys(const json& cfg) {
  if (!cfg.is_object()) throw ConfigError("config", "must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    if (!kTopLevelKeys.count(key)) throw ConfigError(key, "unknown key");
    (void)value;
  }
  if (cfg.contains("tolerances")) {
    if (!cfg.at("tolerances").is_object()) throw ConfigError("tolerances", "must be an object");
    for (const auto& [key, value] : cfg.at("tolerances").items()) {
      if (!kToleranceKeys.count(key)) throw ConfigError("tolerances." + key, "unknown key");
      (void)value;
    }
  }
}

json read_json_file(const fs::path& path, const std::string& field) {
  if (!fs::exists(path)) throw ConfigError(field, "file not found: " + path.string());
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(field, std::string("invalid JSON: ") + e.what());
  }
}

GraphSystem load_system(const json& cfg, const Context& ctx) {
  if (!cfg.contains("system")) throw ConfigError("system", "missing");
  const json& s = cfg.at("system");
  try {
    if (s.is_object() && s.contains("file")) {
      if (!s.at("file").is_string()) throw ConfigError("system.file", "must be a path string");
      return io::system_from_json(read_json_file(ctx.base_dir / s.at("file").get<std::string>(), "system.file"));
    }
    if (s.is_object() && s.contains("random")) {
      const json& r = s.at("random");
      if (!r.is_object()) throw ConfigError("system.random", "must be an object");
      const auto n = integer(r, "n", 3, 2, 10000);
      const auto sd = r.contains("seed") ? static_cast<std::uint64_t>(integer(r, "seed", 0, 0, LLONG_MAX)) : 0;
      const double density = number(r, "edge_density", 1.0);
      const double scale = number(r, "rate_scale", 1.0);
      return random_detailed_balance_system(n, sd, density, scale);
    }
    return io::system_from_json(s);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("system", e.what());
  }
}

DissipationSpec load_spec(const json& cfg) {
  if (!cfg.contains("dissipation")) return DissipationSpec::cosh();
  try {
    return io::spec_from_json(cfg.at("dissipation"));
  } catch (const std::exception& e) {
    throw ConfigError("dissipation", e.what());
  }
}

EntropySpec load_entropy(const json& cfg) {
  if (!cfg.contains("entropy")) return EntropySpec::boltzmann(1.0);
  try {
    return io::entropy_from_json(cfg.at("entropy"));
  } catch (const std::exception& e) {
    throw ConfigError("entropy", e.what());
  }
}

/// A bare array is a density; objects select {"density"}, {"mass"} or {"uniform": c}.
Measure load_measure(const GraphSystem& sys, const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw ConfigError(key, "missing");
  const json& m = cfg.at(key);
  try {
    if (m.is_array()) return Measure::from_density(sys, io::vector_from_json(m, key));
    if (m.is_object() && m.contains("density"))
      return Measure::from_density(sys, io::vector_from_json(m.at("density"), key + ".density"));
    if (m.is_object() && m.contains("mass"))
      return Measure::from_mass(sys, io::vector_from_json(m.at("mass"), key + ".mass"));
    if (m.is_object() && m.contains("uniform")) return Measure::uniform_density(sys, positive(m, "uniform", 1.0));
  } catch (const ConfigError& e) {
    throw ConfigError(key + "." + e.field(), e.what());
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
  throw ConfigError(key, "expected an array or an object with 'density', 'mass' or 'uniform'");
}

SolveOptions solve_options(const json& cfg) {
  SolveOptions o;
  o.T = positive(cfg, "T", 1.0);
  o.dt = positive(cfg, "dt", 1e-2);
  o.rtol = positive(cfg, "rtol", 1e-8);
  o.atol = positive(cfg, "atol", 1e-12);
  if (o.dt > o.T) throw ConfigError("dt", "must not exceed T");
  return o;
}

void write(const Context& ctx, const std::string& name, const std::string& content) {
  io::write_file_atomic(ctx.out_dir / name, content);
}

json run_evolve(const json& cfg, const Context& ctx, Checks& checks, bool full_check) {
  const GraphSystem sys = load_system(cfg, ctx);
  const DissipationSpec spec = load_spec(cfg);
  const EntropySpec ent = load_entropy(cfg);
  const Measure rho0 = load_measure(sys, cfg, "initial");
  const SolveOptions o = solve_options(cfg);
  const double mass_tol = tolerance(cfg, "mass_rel", 1e-10);

  const Trajectory tr = solve_forward(sys, spec, ent, rho0.u(), o);
  const CurveWithFlux curve = tr.curve();
  const double e0 = energy(ent, sys, rho0);
  const double e1 = energy(ent, sys, tr.states.back());

  json res = {{"steps", tr.steps},
              {"rejections", tr.rejections},
              {"mass_drift", tr.mass_drift},
              {"min_density", tr.min_density},
              {"max_density", tr.max_density},
              {"energy_start", e0},
              {"energy_end", e1},
              {"final_density", io::to_json(tr.states.back().u())}};

  checks.at_most("mass_conservation", tr.mass_drift, mass_tol);
  const double lo = rho0.u().minCoeff(), hi = rho0.u().maxCoeff();
  checks.at_most("density_bounds", std::max({lo - tr.min_density, tr.max_density - hi, 0.0}), o.atol);

  write(ctx, "trajectory.csv", io::states_csv(tr.times, tr.states));
  write(ctx, "flux.csv", io::flux_csv(sys, curve));

  if (full_check) {
    const double deficit_rel = tolerance(cfg, "deficit_rel", 1e-4);
    const EDBReport edb = edb_deficit(spec, ent, sys, curve);
    res["edb"] = io::edb_to_json(edb);
    checks.at_most("edb_deficit", std::abs(edb.deficit), deficit_rel * e0);
    checks.at_most("continuity_equation", edb.ce_residual, 1e-6);
    const StationarityReport st = stationarity_report(sys, spec, ent, tr);
    res["stationarity"] = {{"fisher_final", st.fisher_final},
                           {"tv_distance_to_c_pi", st.tv_distance_to_c_pi},
                           {"worst_energy_increase", st.worst_energy_increase}};
    checks.flag("energy_monotone", st.energy_monotone);
    checks.at_most("chain_rule", chain_rule_residual(ent, sys, curve), 1e-6 * std::max(1.0, e0));
    write(ctx, "edges.csv", io::edge_diagnostics_csv(edge_diagnostics(spec, ent, sys, curve)));
  }
  return res;
}

DVTOptions dvt_options(const json& cfg) {
  DVTOptions d;
  d.M = static_cast<int>(integer(cfg, "M", d.M, 1, 4096));
  d.kkt_tol = tolerance(cfg, "kkt", d.kkt_tol);
  return d;
}

json run_dvt(const json& cfg, const Context& ctx, Checks& checks) {
  const GraphSystem sys = load_system(cfg, ctx);
  const DissipationSpec spec = load_spec(cfg);
  const Measure rho0 = load_measure(sys, cfg, "initial");
  const Measure rho1 = load_measure(sys, cfg, "target");
  const double tau = positive(cfg, "tau", 1.0);
  const DVTOptions d = dvt_options(cfg);

  json res;
  DVTSolution sol = [&] {
    try {
      return dvt_cost(sys, spec, tau, rho0, rho1, d);
    } catch (const Infeasible& e) {
      throw ConfigError("target", e.what());
    }
  }();
  json eps = json::array();
  for (const auto& [e, v] : sol.eps_values) eps.push_back({{"eps", e}, {"value", v}});
  res = {{"value", sol.value},
         {"kkt_residual", sol.kkt_residual},
         {"constraint_residual", sol.constraint_residual},
         {"eps_values", eps},
         {"extrapolated", sol.extrapolated},
         {"iterations", sol.iterations},
         {"M", d.M},
         {"tau", tau}};
  checks.at_most("constraint_residual", sol.constraint_residual, 1e-8);
  checks.at_least("value_nonnegative", sol.value, -d.kkt_tol);

  if ((rho0.u().array() > 0.0).all() && (rho1.u().array() > 0.0).all()) {
    try {
      const FeasibleCurve fc = feasible_curve(sys, spec, rho0, rho1, tau);
      res["feasible_bound"] = fc.action_bound;
      checks.at_least("feasible_bound_dominates", fc.action_bound - sol.value, -100.0 * d.kkt_tol);
    } catch (const SingularLaplacian&) {
      res["feasible_bound"] = nullptr;
    }
  }
  write(ctx, "dvt_curve.csv", io::states_csv(sol.curve.times, sol.curve.states));
  write(ctx, "dvt_flux.csv", io::flux_csv(sys, sol.curve));
  return res;
}

std::vector<double> tau_list_of(const json& cfg) {
  if (!cfg.contains("tau_list")) return {positive(cfg, "tau", 0.1)};
  const json& t = cfg.at("tau_list");
  if (!t.is_array() || t.empty()) throw ConfigError("tau_list", "must be a non-empty array");
  std::vector<double> out;
  for (const auto& v : t) {
    if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("tau_list", "entries must be positive numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

json run_jko(const json& cfg, const Context& ctx, Checks& checks) {
  const GraphSystem sys = load_system(cfg, ctx);
  const DissipationSpec spec = load_spec(cfg);
  const EntropySpec ent = load_entropy(cfg);
  const Measure rho0 = load_measure(sys, cfg, "initial");
  const double T = positive(cfg, "T", 1.0);
  const std::vector<double> taus = tau_list_of(cfg);
  for (double tau : taus)
    if (tau > T) throw ConfigError("tau_list", "entries must not exceed T");
  MMOptions mo;
  mo.M = static_cast<int>(integer(cfg, "M", mo.M, 1, 4096));
  mo.kkt_tol = tolerance(cfg, "kkt", mo.kkt_tol);
  const double edi_tol = tolerance(cfg, "edi", 1e-8);
  const double factor = tolerance(cfg, "jko_factor", 1.5);

  json table = json::array();
  double prev_gap = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double tau = taus[k];
    const MMRun run = mm_solve(sys, spec, ent, rho0, T, tau, mo);
    SolveOptions so;
    so.T = T;
    so.dt = tau;
    const Trajectory tr = solve_forward(sys, spec, ent, rho0.u(), so);
    double gap = 0.0;
    for (std::size_t n = 0; n < run.times.size(); ++n) {
      const auto it = std::min_element(tr.times.begin(), tr.times.end(), [&](double a, double b) {
        return std::abs(a - run.times[n]) < std::abs(b - run.times[n]);
      });
      gap = std::max(gap, tv_distance(run.steps[n], tr.states[static_cast<std::size_t>(it - tr.times.begin())]));
    }
    double worst_slack = 0.0;
    for (const auto& r : run.records) worst_slack = std::min(worst_slack, r.edi_slack);
    json row = {{"tau", tau},
                {"steps", run.records.size()},
                {"sup_tv_gap", gap},
                {"discrete_edi_excess", run.discrete_edi_excess},
                {"energy_nonincreasing", run.energy_nonincreasing}};
    if (k > 0) row["gap_ratio"] = gap > 0.0 ? prev_gap / gap : std::numeric_limits<double>::infinity();
    table.push_back(row);

    const std::string tag = "tau_" + std::to_string(k);
    checks.flag(tag + "_energy_nonincreasing", run.energy_nonincreasing);
    checks.at_least(tag + "_discrete_edi", worst_slack, -edi_tol * static_cast<double>(run.records.size()));
    if (k > 0 && taus[k] < taus[k - 1])
      checks.at_least(tag + "_convergence_ratio", gap > 0.0 ? prev_gap / gap : 1e300, factor);
    prev_gap = gap;
    write(ctx, "mm_" + tag + ".csv", io::mm_csv(run));
    write(ctx, "mm_states_" + tag + ".csv", io::states_csv(run.times, run.steps));
  }
  return {{"T", T}, {"convergence_table", table}};
}

json run_ldp(const json& cfg, const Context& ctx, Checks& checks, std::uint64_t seed) {
  const GraphSystem sys = load_system(cfg, ctx);
  const double T = positive(cfg, "T", 1.0);
  const auto n = static_cast<std::size_t>(integer(cfg, "n_particles", 10000, 1, 100'000'000));
  const auto bins = static_cast<int>(integer(cfg, "bins", 100, 1, 1'000'000));
  const auto threads = static_cast<unsigned>(integer(cfg, "threads", 0, 0, 1024));
  const auto psi_samples = static_cast<int>(integer(cfg, "psi_samples", 1000, 0, 10'000'000));
  const double lln_tol = tolerance(cfg, "lln_tv", 0.05);
  const double psi_tol = tolerance(cfg, "psi", 1e-8);

  Measure rho0 = cfg.contains("initial") ? load_measure(sys, cfg, "initial")
                                         : Measure::from_mass(sys, Vector(sys.pi() / sys.total_pi()));
  if (std::abs(rho0.mass() - 1.0) > 1e-12) rho0 = Measure::from_mass(sys, Vector(rho0.rho() / rho0.mass()));

  const ParticleEnsemble ens = gillespie(sys, n, T, seed, rho0.rho(), threads);
  const EmpiricalPath path = empirical_path(sys, ens, uniform_bins(T, bins));
  const double rate = rate_I(sys, path);

  // The law of large numbers limit solves the linear equation: cosh pair with Boltzmann entropy.
  SolveOptions so;
  so.T = T;
  so.dt = T / bins;
  const Trajectory tr = solve_forward(sys, DissipationSpec::cosh(), EntropySpec::boltzmann(1.0), rho0.u(), so);
  double gap = 0.0;
  for (std::size_t k = 0; k < path.states.size() && k < tr.states.size(); ++k)
    gap = std::max(gap, tv_distance(path.states[k], tr.states[k]));

  double psi_worst = 0.0;
  PhiloxStream rng(seed, 0xC0FFEEull);
  for (int k = 0; k < psi_samples; ++k) {
    const double s = 10.0 * (rng.next_double() - 0.5);
    const double c = std::exp(6.0 * (rng.next_double() - 0.5));
    const double d = std::exp(6.0 * (rng.next_double() - 0.5));
    psi_worst = std::max(psi_worst, std::abs(psi_closed_form(s, c, d) - psi_brute_force(s, c, d)));
  }

  checks.at_most("lln_sup_tv", gap, lln_tol);
  if (psi_samples > 0) checks.at_most("psi_reduction", psi_worst, psi_tol);

  write(ctx, "events.csv", io::events_csv(ens));
  write(ctx, "empirical.csv", io::states_csv(path.times, path.states));
  return {{"n_particles", n},  {"bins", bins},         {"T", T},
          {"events", ens.events.size()}, {"rate_I", rate}, {"lln_sup_tv", gap},
          {"psi_samples", psi_samples},   {"psi_max_difference", psi_worst}};
}

json make_report(const std::string& scenario, std::uint64_t seed, const json& cfg, const Checks& checks,
                 const json& results) {
  json failed = json::array();
  for (const auto& f : checks.failed()) failed.push_back(f);
  return {{"schema", kSchema},    {"version", kVersion},     {"scenario", scenario}, {"seed", seed},
          {"config", cfg},        {"checks", checks.list()}, {"failed_checks", failed},
          {"passed", failed.empty()}, {"results", results}};
}

std::string scenario_of(const json& cfg) {
  if (!cfg.contains("scenario") || !cfg.at("scenario").is_string()) throw ConfigError("scenario", "missing");
  const std::string s = cfg.at("scenario").get<std::string>();
  if (!kScenarios.count(s)) throw ConfigError("scenario", "unknown scenario '" + s + "'");
  return s;
}

RunResult run_batch(const json& cfg, const Context& ctx, std::uint64_t seed) {
  if (!cfg.contains("runs") || !cfg.at("runs").is_array() || cfg.at("runs").empty())
    throw ConfigError("runs", "batch needs a non-empty array 'runs'");
  const json& runs = cfg.at("runs");
  std::vector<json> configs;
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    json child = runs[k];
    if (!child.is_object()) throw ConfigError("runs[" + std::to_string(k) + "]", "must be an object");
    if (child.value("scenario", "") == "batch") throw ConfigError("runs[" + std::to_string(k) + "].scenario", "batches do not nest");
    if (!child.contains("seed")) child["seed"] = seed + k;
    std::string name = child.value("name", "run_" + std::to_string(k));
    if (!seen.insert(name).second) throw ConfigError("runs[" + std::to_string(k) + "].name", "duplicate name");
    try {
      validate_keys(child);
      scenario_of(child);
    } catch (const ConfigError& e) {
      throw ConfigError("runs[" + std::to_string(k) + "]." + e.field(), e.what());
    }
    configs.push_back(std::move(child));
    names.push_back(std::move(name));
  }

  std::vector<RunResult> results(configs.size());
  std::vector<std::string> config_errors(configs.size());
  const auto threads = static_cast<unsigned>(
      integer(cfg, "threads", std::max(1u, std::thread::hardware_concurrency()), 1, 1024));
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= configs.size()) return;
        k = next++;
      }
      try {
        results[k] = run_config(configs[k], ctx.out_dir / names[k], ctx.base_dir);
      } catch (const ConfigError& e) {
        config_errors[k] = "runs[" + std::to_string(k) + "]." + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, configs.size()); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const auto& e : config_errors)
    if (!e.empty()) throw ConfigError(e.substr(0, e.find(':')), e.substr(e.find(':') + 2));

  Checks checks;
  json children = json::object();
  for (std::size_t k = 0; k < configs.size(); ++k) {
    for (const auto& c : results[k].report.at("checks"))
      checks.add(names[k] + "/" + c.at("name").get<std::string>(), c.at("value").is_number() ? c.at("value").get<double>() : NAN,
                 c.at("threshold").get<double>(), c.at("passed").get<bool>());
    children[names[k]] = {{"scenario", results[k].report.at("scenario")},
                          {"passed", results[k].report.at("passed")},
                          {"report", names[k] + "/report.json"}};
  }
  RunResult out;
  out.report = make_report("batch", seed, cfg, checks, {{"runs", children}});
  out.exit_code = checks.failed().empty() ? 0 : 1;
  io::write_file_atomic(ctx.out_dir / "report.json", out.report.dump(2) + "\n");
  return out;
}

}  // namespace

RunResult run_config(const json& config, const fs::path& out_dir, const fs::path& base_dir) {
  validate_keys(config);
  const std::string scenario = scenario_of(config);
  const std::uint64_t seed = seed_of(config);
  const Context ctx{out_dir, base_dir};
  if (scenario == "batch") return run_batch(config, ctx, seed);

  Checks checks;
  json results;
  try {
    if (scenario == "evolve" || scenario == "check") results = run_evolve(config, ctx, checks, scenario == "check");
    else if (scenario == "dvt") results = run_dvt(config, ctx, checks);
    else if (scenario == "jko") results = run_jko(config, ctx, checks);
    else results = run_ldp(config, ctx, checks, seed);
  } catch (const ConfigError&) {
    throw;
  } catch (const SolverStalled& e) {
    checks.add(scenario + "_solver", e.best_value, 0.0, false);
    results["error"] = e.what();
  } catch (const Error& e) {
    checks.add(scenario + "_numerics", NAN, 0.0, false);
    results["error"] = e.what();
  }
  RunResult out;
  out.report = make_report(scenario, seed, config, checks, results);
  out.exit_code = checks.failed().empty() ? 0 : 1;
  io::write_file_atomic(out_dir / "report.json", out.report.dump(2) + "\n");
  return out;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized gradient flows on finite Markov jump systems"};
  std::string positional, scenario_flag, config_path, out_dir = "out";
  std::vector<std::string> overrides;
  long long seed = -1;
  app.add_option("SCENARIO", positional, "evolve | dvt | jko | ldp | check | batch");
  app.add_option("--scenario", scenario_flag, "Scenario (alternative to the positional form)");
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--seed", seed, "Seed overriding the config")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--set", overrides, "Override a top-level key: key=<JSON value>");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const fs::path path(config_path);
    json cfg = read_json_file(path, "config");
    if (!positional.empty() && !scenario_flag.empty() && positional != scenario_flag)
      throw ConfigError("scenario", "positional scenario and --scenario disagree");
    const std::string scenario = !scenario_flag.empty() ? scenario_flag : positional;
    if (!scenario.empty()) cfg["scenario"] = scenario;
    if (seed >= 0) cfg["seed"] = seed;
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected key=value, got '" + o + "'");
      const std::string key = o.substr(0, eq);
      try {
        cfg[key] = json::parse(o.substr(eq + 1));
      } catch (const json::exception&) {
        cfg[key] = o.substr(eq + 1);
      }
    }
    const RunResult r = run_config(cfg, out_dir, path.parent_path());
    for (const auto& name : r.report.at("failed_checks")) err << "check failed: " << name.get<std::string>() << "\n";
    out << (r.exit_code == 0 ? "ok" : "FAILED") << " (" << r.report.at("checks").size() << " checks) -> "
        << (fs::path(out_dir) / "report.json").string() << "\n";
    return r.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ggflow::cli
