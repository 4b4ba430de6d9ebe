#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfluid/qfluid.hpp"

namespace {

using namespace qfluid;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitAudit = 2;
constexpr int kExitSolver = 3;
constexpr int kExitUsage = 4;

int thread_cap() {
  if (const char* env = std::getenv("QFLUID_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return std::numeric_limits<int>::max();
}

void write_diagnostic(const fs::path& dir, const std::string& hash,
                      const std::string& stage, const std::string& detail,
                      int exit_code) {
  fs::create_directories(dir);
  json j = {{"schema_version", kSchemaVersion},
            {"config_hash", hash},
            {"stage", stage},
            {"detail", detail},
            {"exit_code", exit_code}};
  write_json_file(dir / "diagnostic.json", j);
}

int fail_with(const fs::path& out, const std::string& hash,
              const std::string& stage, const std::string& detail,
              int code) {
  std::fprintf(stderr, "qfluid %s: %s\n", stage.c_str(), detail.c_str());
  write_diagnostic(out, hash, stage, detail, code);
  return code;
}

std::vector<double> parse_ladder(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    require(end == tok.c_str() + tok.size() && !tok.empty(),
            Err::validation_error, "bad ladder entry \"" + tok + "\"");
    out.push_back(v);
  }
  require(!out.empty(), Err::validation_error, "empty ladder");
  return out;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

struct SimulateResult {
  Trajectory trajectory;
  std::optional<EnergyReport> report;
};

// Shared by simulate and compare: run, persist trajectory + energy artifacts,
// and classify the outcome. Partial artifacts stay on disk on failure.
int run_and_persist(const ExperimentConfig& cfg, const fs::path& out,
                    const std::optional<std::string>& unchecked_init,
                    SimulateResult& res) {
  const std::string hash = experiment_fingerprint(cfg);
  fs::create_directories(out);
  json cfg_json = experiment_to_json(cfg);
  cfg_json["schema_version"] = kSchemaVersion;
  cfg_json["config_hash"] = hash;
  write_json_file(out / "config.json", cfg_json);

  Trajectory traj;
  try {
    FluidState init;
    if (unchecked_init) {
      init = read_checkpoint(*unchecked_init).state;
      require(init.rho.domain() == cfg.domain, Err::validation_error,
              "unchecked init domain does not match the config domain");
    } else {
      GalerkinBasis basis(cfg.domain, cfg.solver.n_modes);
      init = experiment_initial_state(cfg, basis);
    }
    traj = run_simulation(init, cfg.params, cfg.solver, cfg.t_final,
                          cfg.system);
    traj.meta.config_hash = hash;
    traj.e0 = resolve_e0(cfg, traj.samples.front().state);
  } catch (const Exception& e) {
    return fail_with(out, hash, "solver", e.what(), kExitSolver);
  }

  write_trajectory(out / "trajectory", traj, cfg.params);
  res.trajectory = traj;

  try {
    EnergyReport rep = energy_report(traj, cfg.params);
    std::ostringstream csv;
    write_energy_csv(csv, rep);
    write_text_file(out / "energy.csv", csv.str());
    write_json_file(out / "energy.json", energy_report_json(rep, hash));
    res.report = std::move(rep);
  } catch (const Exception& e) {
    if (traj.status != RunStatus::ok)
      return fail_with(out, hash, "solver", traj.status_detail, kExitSolver);
    return fail_with(out, hash, "audit", e.what(), kExitAudit);
  }

  if (traj.status != RunStatus::ok)
    return fail_with(out, hash, "solver",
                     std::string(to_string(traj.status)) +
                         (traj.status_detail.empty()
                              ? ""
                              : ": " + traj.status_detail),
                     kExitSolver);
  if (!res.report->passed)
    return fail_with(out, hash, "audit",
                     "energy audit failed at t = " +
                         std::to_string(res.report->first_violation_time),
                     kExitAudit);
  return kExitOk;
}

int cmd_simulate(const std::string& cfg_path,
                 const std::optional<std::string>& out_dir,
                 const std::optional<std::string>& unchecked_init) {
  ExperimentConfig cfg = parse_config(cfg_path);
  if (out_dir) cfg.output_dir = *out_dir;
  SimulateResult res;
  int code = run_and_persist(cfg, cfg.output_dir, unchecked_init, res);
  if (code == kExitOk)
    std::printf("simulate: ok, %zu samples, final E = %.17g\n",
                res.trajectory.samples.size(),
                res.trajectory.samples.back().state.energy);
  return code;
}

int cmd_sweep(const std::string& cfg_path, const std::string& param,
              const std::string& ladder_csv,
              const std::optional<std::string>& out_dir, int jobs,
              bool richardson) {
  ExperimentConfig cfg = parse_config(cfg_path);
  const std::string hash = experiment_fingerprint(cfg);
  fs::path out = out_dir ? fs::path(*out_dir) : fs::path(cfg.output_dir);

  SweepConfig sc;
  sc.solver = cfg.solver;
  sc.t_final = cfg.t_final;
  sc.kind = cfg.system;
  sc.jobs = std::max(1, std::min(jobs, thread_cap()));
  sc.richardson = richardson;

  GalerkinBasis basis(cfg.domain, cfg.solver.n_modes);
  FluidState init = experiment_initial_state(cfg, basis);

  SweepResult sw;
  try {
    if (param == "delta") {
      sw = viscosity_sweep(init, cfg.params, parse_ladder(ladder_csv), sc);
    } else if (param == "epsilon") {
      sw = epsilon_sweep(init, cfg.params, parse_ladder(ladder_csv), sc);
    } else if (param == "modes") {
      std::vector<int> modes;
      for (double v : parse_ladder(ladder_csv)) {
        require(v > 0.0 && v == std::floor(v), Err::validation_error,
                "mode ladder entries must be positive integers");
        modes.push_back(static_cast<int>(v));
      }
      sw = mode_sweep(init, cfg.params, modes, sc);
    } else {
      fail(Err::validation_error,
           "unknown sweep parameter \"" + param +
               "\" (expected delta, epsilon, or modes)");
    }
  } catch (const Exception& e) {
    int code = e.code() == Err::validation_error ? kExitUsage : kExitSolver;
    return fail_with(out, hash, "sweep", e.what(), code);
  }

  write_sweep(out, sw, cfg.params, hash);

  for (const SweepEntry& e : sw.entries)
    if (e.failed)
      return fail_with(out, hash, "sweep",
                       "ladder entry " + std::to_string(e.value) +
                           " failed: " + e.detail,
                       kExitSolver);
  for (const SweepEntry& e : sw.entries)
    if (!e.audit_passed)
      return fail_with(out, hash, "audit",
                       "energy audit failed for ladder entry " +
                           std::to_string(e.value),
                       kExitAudit);
  std::printf("sweep: ok, %zu entries, cauchy", sw.entries.size());
  for (double r : sw.cauchy_ratio) std::printf(" %.3g", r);
  std::printf("\n");
  return kExitOk;
}

int cmd_compare(const std::string& cfg_path, const std::string& ref_name,
                const std::optional<double>& rho_bar,
                const std::optional<double>& drift,
                const std::optional<std::string>& out_dir) {
  ExperimentConfig cfg = parse_config(cfg_path);
  if (out_dir) cfg.output_dir = *out_dir;
  const std::string hash = experiment_fingerprint(cfg);
  const fs::path out = cfg.output_dir;

  ManufacturedKind kind;
  if (ref_name == "constant") {
    kind = ManufacturedKind::constant;
  } else if (ref_name == "isothermal-drift") {
    kind = ManufacturedKind::isothermal_drift;
  } else {
    fail(Err::validation_error, "unknown reference \"" + ref_name + "\"");
  }

  SimulateResult res;
  int code = run_and_persist(cfg, out, std::nullopt, res);
  if (code == kExitSolver) return code;  // no trajectory to compare

  try {
    ManufacturedSolution ref = manufactured_strong_solution(
        kind, cfg.domain, rho_bar.value_or(cfg.initial.rho_bar),
        {drift.value_or(0.0), 0.0});
    RelativeEnergyReport rep =
        weak_strong_compare(res.trajectory, ref, cfg.params);
    std::ostringstream csv;
    write_relative_energy_csv(csv, rep);
    write_text_file(out / "rel_energy.csv", csv.str());
    write_json_file(out / "rel_energy.json", relative_energy_json(rep, hash));
    if (!rep.passed)
      return fail_with(out, hash, "compare",
                       "relative-energy envelope violated", kExitAudit);
    std::printf("compare: ok, C = %.6g, L = %.6g\n", rep.gronwall_C,
                rep.gronwall_L);
  } catch (const Exception& e) {
    return fail_with(out, hash, "compare", e.what(), kExitAudit);
  }
  return code;
}

int cmd_select(const std::string& manifest,
               const std::string& functionals_csv, double rate,
               std::optional<double> horizon,
               const std::optional<std::string>& out_dir,
               const std::optional<std::string>& semigroup_csv,
               const std::optional<std::string>& cfg_path) {
  fs::path out = out_dir ? fs::path(*out_dir) : fs::path(manifest) / "selection";

  std::vector<std::string> names;
  std::vector<StoredTrajectory> stored;
  {
    std::vector<std::string> dirs;
    if (fs::is_directory(manifest))
      for (const auto& entry : fs::directory_iterator(manifest))
        if (entry.is_directory() && fs::exists(entry.path() / "traj.json"))
          dirs.push_back(entry.path().string());
    std::sort(dirs.begin(), dirs.end());
    for (const std::string& d : dirs) {
      stored.push_back(read_trajectory(d));
      names.push_back(fs::path(d).filename().string());
    }
  }
  require(!stored.empty(), Err::empty_candidates,
          "no trajectory directories under " + manifest);

  std::vector<Trajectory> cands;
  cands.reserve(stored.size());
  for (const StoredTrajectory& s : stored) cands.push_back(s.trajectory);

  std::vector<SelectionFunctional> fs_list;
  for (const std::string& n : split_csv(functionals_csv)) {
    SelectionFunctional f;
    f.rate = rate;
    f.observable = parse_observable(n);
    fs_list.push_back(f);
  }
  require(!fs_list.empty(), Err::validation_error, "no functionals given");

  double h = std::numeric_limits<double>::infinity();
  for (const Trajectory& t : cands)
    h = std::min(h, t.end_time() - t.start_time());
  if (horizon) h = *horizon;

  SelectionOutcome oc;
  Trajectory winner = select(cands, fs_list, h, &oc);

  std::vector<SemigroupReport> semis;
  if (semigroup_csv) {
    require(static_cast<bool>(cfg_path), Err::validation_error,
            "--semigroup needs --config for the candidate generator");
    std::vector<double> ts = parse_ladder(*semigroup_csv);
    require(ts.size() == 2, Err::validation_error,
            "--semigroup expects t1,t2");
    ExperimentConfig cfg = parse_config(*cfg_path);
    auto gen = [&cfg](const FluidState& st) {
      return std::vector<Trajectory>{run_simulation(
          st, cfg.params, cfg.solver, cfg.t_final, cfg.system)};
    };
    semis.push_back(check_semigroup(winner.samples.front().state, ts[0],
                                    ts[1], gen, fs_list,
                                    std::min(h, cfg.t_final)));
  }

  fs::create_directories(out);
  json report = selection_report_json(fs_list, oc, winner.meta.config_hash,
                                      semis);
  report["candidates"] = names;
  report["winner_name"] = names[oc.winner];
  write_json_file(out / "selection.json", report);
  write_trajectory(out / "winner", winner, stored[oc.winner].params);

  for (const SemigroupReport& r : semis)
    if (!r.passed)
      return fail_with(out, winner.meta.config_hash, "select",
                       "semigroup consistency distance " +
                           std::to_string(r.distance) + " above tolerance",
                       kExitAudit);
  std::printf("select: winner %s\n", names[oc.winner].c_str());
  return kExitOk;
}

struct IdentityRow {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool upper_bound = true;  // pass when value <= tol (else value >= tol)
  bool passed = false;
};

// Operator-identity suite on analytic profiles: constitutive consistency,
// the capillary divergence identity at two resolutions, the integral
// log-Hessian identity, and the viscous-stress trace structure.
std::vector<IdentityRow> identity_suite(int resolution) {
  std::vector<IdentityRow> rows;
  auto push = [&](const std::string& name, double value, double tol,
                  bool upper = true) {
    IdentityRow r{name, value, tol, upper, false};
    r.passed = upper ? value <= tol : value >= tol;
    rows.push_back(r);
  };

  {  // rho*P'(rho) - P(rho) = p(rho) pointwise
    Domain d = make_domain(1, {2.0 * M_PI}, {resolution}, Bc::periodic);
    for (double gamma : {2.0, 1.4}) {
      FluidParams p;
      p.a = 1.3;
      p.gamma = gamma;
      ScalarField rho = ScalarField::from_function(
          d, [](double x, double) { return 1.0 + 0.4 * std::sin(x); });
      double worst = 0.0;
      for (std::size_t i = 0; i < rho.size(); ++i) {
        double r = rho[i];
        double res = r * pressure_potential_prime(r, p) -
                     pressure_potential_value(r, p) - pressure_value(r, p);
        worst = std::max(worst, std::abs(res));
      }
      char name[64];
      std::snprintf(name, sizeof name, "pressure-identity-gamma-%.1f", gamma);
      push(name, worst, 1e-12);
    }
  }

  {  // div K = rho grad Q, with refinement gain
    FluidParams p;
    p.hbar = 0.9;
    double coarse = 0.0, fine = 0.0;
    for (int n : {resolution / 2, resolution}) {
      Domain d = make_domain(1, {2.0 * M_PI}, {n}, Bc::periodic);
      ScalarField rho = ScalarField::from_function(d, [](double x, double) {
        return 1.0 + 0.8 * std::exp(100.0 * (std::cos(x) - 1.0));
      });
      TensorField K = korteweg_tensor(rho, p);
      VectorField divK = divergence(K);
      ScalarField q = bohm_potential(rho, p, 1.0);
      VectorField gq = gradient(q);
      double err = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < rho.size(); ++i) {
        double want = rho[i] * gq.comp(0)[i];
        err = std::max(err, std::abs(divK.comp(0)[i] - want));
        scale = std::max(scale, std::abs(want));
      }
      (n == resolution ? fine : coarse) = err / scale;
    }
    push("korteweg-divergence", fine, 1e-5);
    push("korteweg-refinement-gain", coarse / fine, 10.0, false);
  }

  {  // two Korteweg assemblies coincide on smooth data
    Domain d = make_domain(1, {2.0 * M_PI}, {resolution}, Bc::periodic);
    FluidParams p;
    p.hbar = 1.3;
    ScalarField rho = ScalarField::from_function(
        d, [](double x, double) { return std::exp(0.5 * std::cos(x)); });
    TensorField K1 = korteweg_tensor(rho, p);
    TensorField K2 = korteweg_tensor_drift_form(rho, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i)
      worst = std::max(worst, std::abs(K1.entry(0, 0)[i] - K2.entry(0, 0)[i]));
    push("korteweg-forms-agree", worst, 1e-10);
  }

  {  // integral log-Hessian identity
    Domain d = make_domain(1, {2.0 * M_PI}, {resolution}, Bc::periodic);
    ScalarField rho = ScalarField::from_function(d, [](double x, double) {
      return 1.0 + 0.8 * std::exp(100.0 * (std::cos(x) - 1.0));
    });
    push("log-hessian-identity", log_hessian_identity_residual(rho), 1e-6);
  }

  {  // viscous stress trace structure in two dimensions
    Domain d = make_domain(2, {2.0 * M_PI, 2.0 * M_PI}, {64, 64},
                           Bc::periodic);
    VectorField u(d);
    for (int i = 0; i < d.points(0); ++i)
      for (int j = 0; j < d.points(1); ++j) {
        double x = d.coord(0, i), y = d.coord(1, j);
        u.comp(0)[d.index(i, j)] = std::sin(x) * std::cos(y);
        u.comp(1)[d.index(i, j)] = std::cos(2.0 * x) * std::sin(y);
      }
    TensorField G = grad_vec(u);
    FluidParams shear;
    shear.dim = 2;
    shear.mu = 0.8;
    FluidParams bulk;
    bulk.dim = 2;
    bulk.lambda_bulk = 0.6;
    TensorField Ss = viscous_stress(G, shear);
    TensorField Sb = viscous_stress(G, bulk);
    double tr_shear = 0.0, tr_bulk = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double div = G.entry(0, 0)[i] + G.entry(1, 1)[i];
      tr_shear = std::max(tr_shear,
                          std::abs(Ss.entry(0, 0)[i] + Ss.entry(1, 1)[i]));
      tr_bulk = std::max(tr_bulk,
                         std::abs(Sb.entry(0, 0)[i] + Sb.entry(1, 1)[i] -
                                  2.0 * 0.6 * div));
    }
    push("shear-traceless", tr_shear, 1e-12);
    push("bulk-trace", tr_bulk, 1e-12);
  }

  {  // one-dimensional longitudinal stress
    Domain d = make_domain(1, {2.0 * M_PI}, {64}, Bc::periodic);
    FluidParams p;
    p.mu = 0.3;
    p.lambda_bulk = 0.2;
    VectorField u(d);
    for (int i = 0; i < d.points(0); ++i)
      u.comp(0)[i] = std::sin(2.0 * d.coord(0, i));
    TensorField S = viscous_stress(grad_vec(u), p);
    double worst = 0.0;
    for (int i = 0; i < d.points(0); ++i) {
      double want = (2.0 * 0.3 + 0.2) * 2.0 * std::cos(2.0 * d.coord(0, i));
      worst = std::max(worst, std::abs(S.entry(0, 0)[i] - want));
    }
    push("longitudinal-stress", worst, 1e-12);
  }

  return rows;
}

int cmd_verify(const std::string& suite, int resolution,
               const std::optional<std::string>& out_dir) {
  require(suite == "identities", Err::validation_error,
          "unknown suite \"" + suite + "\" (expected identities)");
  require(resolution >= 64, Err::validation_error,
          "resolution must be at least 64");

  std::vector<IdentityRow> rows = identity_suite(resolution);
  bool all = true;
  std::printf("%-32s %-12s %-10s %s\n", "check", "value", "bound", "result");
  for (const IdentityRow& r : rows) {
    std::printf("%-32s %-12.3e %s %-8.0e %s\n", r.name.c_str(), r.value,
                r.upper_bound ? "<=" : ">=", r.tol,
                r.passed ? "PASS" : "FAIL");
    all = all && r.passed;
  }

  if (out_dir) {
    json checks = json::array();
    for (const IdentityRow& r : rows)
      checks.push_back({{"name", r.name},
                        {"value", r.value},
                        {"bound", r.tol},
                        {"direction", r.upper_bound ? "<=" : ">="},
                        {"passed", r.passed}});
    json j = {{"schema_version", kSchemaVersion},
              {"config_hash",
               config_fingerprint({{"suite", suite},
                                   {"resolution", resolution}})},
              {"suite", suite},
              {"resolution", resolution},
              {"passed", all},
              {"checks", checks}};
    fs::create_directories(*out_dir);
    write_json_file(fs::path(*out_dir) / "verify.json", j);
  }
  return all ? kExitOk : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum Navier-Stokes Galerkin experiment runner"};
  app.require_subcommand(1);

  std::string cfg_path, out, ladder, param, ref_name = "constant";
  std::string manifest, functionals = "energy", suite = "identities";
  std::string unchecked, semigroup;
  double rate = 1.0;
  std::optional<double> rho_bar, drift, horizon;
  int jobs = 1, resolution = 256;
  bool richardson = false;

  CLI::App* sim = app.add_subcommand("simulate", "run one experiment");
  sim->add_option("-c,--config", cfg_path, "config file (.toml or .json)")
      ->required();
  sim->add_option("-o,--output", out, "output directory");
  sim->add_option("--unchecked-init", unchecked,
                  "checkpoint stem to load as the raw initial state");

  CLI::App* swp = app.add_subcommand("sweep", "run a parameter ladder");
  swp->add_option("-c,--config", cfg_path)->required();
  swp->add_option("--param", param, "delta, epsilon, or modes")->required();
  swp->add_option("--ladder", ladder, "comma-separated ladder")->required();
  swp->add_option("-o,--output", out);
  swp->add_option("--jobs", jobs, "parallel workers");
  swp->add_flag("--richardson", richardson, "extrapolate the terminal state");

  CLI::App* cmp = app.add_subcommand("compare",
                                     "compare a run against a strong solution");
  cmp->add_option("-c,--config", cfg_path)->required();
  cmp->add_option("--ref", ref_name, "constant or isothermal-drift");
  cmp->add_option("--rho-bar", rho_bar, "reference density");
  cmp->add_option("--drift", drift, "reference drift velocity");
  cmp->add_option("-o,--output", out);

  CLI::App* sel = app.add_subcommand("select",
                                     "select among candidate trajectories");
  sel->add_option("--manifest", manifest, "directory of trajectory dirs")
      ->required();
  sel->add_option("--functionals", functionals,
                  "comma-separated observables");
  sel->add_option("--rate", rate, "discount rate");
  sel->add_option("--horizon", horizon, "integration horizon");
  sel->add_option("-o,--output", out);
  sel->add_option("--semigroup", semigroup, "t1,t2 consistency probe");
  sel->add_option("-c,--config", cfg_path, "config for the semigroup probe");

  CLI::App* ver = app.add_subcommand("verify", "run an identity suite");
  ver->add_option("--suite", suite);
  ver->add_option("--resolution", resolution);
  ver->add_option("-o,--output", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  auto opt = [](const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
  };

  try {
    if (sim->parsed())
      return cmd_simulate(cfg_path, opt(out), opt(unchecked));
    if (swp->parsed())
      return cmd_sweep(cfg_path, param, ladder, opt(out), jobs, richardson);
    if (cmp->parsed())
      return cmd_compare(cfg_path, ref_name, rho_bar, drift, opt(out));
    if (sel->parsed())
      return cmd_select(manifest, functionals, rate, horizon, opt(out),
                        opt(semigroup), opt(cfg_path));
    if (ver->parsed()) return cmd_verify(suite, resolution, opt(out));
  } catch (const Exception& e) {
    std::fprintf(stderr, "qfluid: %s\n", e.what());
    switch (e.code()) {
      case Err::parse_error:
      case Err::validation_error:
      case Err::io_error:
      case Err::empty_candidates:
      case Err::mixed_initial_data:
        return kExitUsage;
      case Err::audit_failed:
        return kExitAudit;
      default:
        return kExitSolver;
    }
  }
  return kExitUsage;
}
