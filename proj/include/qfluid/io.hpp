#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qfluid/relative_energy.hpp"
#include "qfluid/semiflow.hpp"

namespace qfluid {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Canonical serialization: nlohmann keeps object keys sorted and emits
// shortest round-trip floats, so dump() is a stable fingerprint input.
inline std::string canonical_dump(const json& j) { return j.dump(); }

inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_fingerprint(const json& j) {
  return fnv1a_hex(canonical_dump(j));
}

namespace detail {

template <typename T>
T field_as(const json& j, const char* key) {
  require(j.is_object() && j.contains(key), Err::parse_error,
          std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Err::parse_error,
         std::string("field \"") + key + "\": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// struct <-> json

inline json domain_to_json(const Domain& d) {
  std::vector<double> lengths(d.lengths.begin(), d.lengths.begin() + d.dim);
  std::vector<int> resolution(d.resolution.begin(),
                              d.resolution.begin() + d.dim);
  return {{"dim", d.dim},
          {"lengths", lengths},
          {"resolution", resolution},
          {"bc", to_string(d.bc)}};
}

inline Bc parse_bc(const std::string& s) {
  if (s == "periodic") return Bc::periodic;
  if (s == "wall") return Bc::wall;
  fail(Err::parse_error, "unknown boundary condition \"" + s + "\"");
}

inline SystemKind parse_system_kind(const std::string& s) {
  if (s == "navier_stokes" || s == "navier-stokes")
    return SystemKind::navier_stokes;
  if (s == "euler") return SystemKind::euler;
  fail(Err::parse_error, "unknown system kind \"" + s + "\"");
}

inline ContinuityScheme parse_continuity_scheme(const std::string& s) {
  if (s == "semi-implicit") return ContinuityScheme::semi_implicit;
  if (s == "implicit") return ContinuityScheme::implicit;
  fail(Err::parse_error, "unknown continuity scheme \"" + s + "\"");
}

inline TimeQuadrature parse_time_quadrature(const std::string& s) {
  if (s == "right-endpoint") return TimeQuadrature::right_endpoint;
  if (s == "trapezoid") return TimeQuadrature::trapezoid;
  fail(Err::parse_error, "unknown time quadrature \"" + s + "\"");
}

inline RunStatus parse_run_status(const std::string& s) {
  if (s == "ok") return RunStatus::ok;
  if (s == "positivity_lost") return RunStatus::positivity_lost;
  if (s == "fixed_point_diverged") return RunStatus::fixed_point_diverged;
  if (s == "cfl_violation") return RunStatus::cfl_violation;
  fail(Err::parse_error, "unknown run status \"" + s + "\"");
}

inline Domain domain_from_json(const json& j) {
  return make_domain(detail::field_as<int>(j, "dim"),
                     detail::field_as<std::vector<double>>(j, "lengths"),
                     detail::field_as<std::vector<int>>(j, "resolution"),
                     parse_bc(detail::field_as<std::string>(j, "bc")));
}

inline json params_to_json(const FluidParams& p) {
  return {{"dim", p.dim},         {"a", p.a},
          {"gamma", p.gamma},     {"mu", p.mu},
          {"lambda_bulk", p.lambda_bulk}, {"hbar", p.hbar}};
}

inline FluidParams params_from_json(const json& j) {
  FluidParams p;
  p.dim = detail::field_as<int>(j, "dim");
  p.a = detail::field_as<double>(j, "a");
  p.gamma = detail::field_as<double>(j, "gamma");
  p.mu = detail::field_as<double>(j, "mu");
  p.lambda_bulk = detail::field_as<double>(j, "lambda_bulk");
  p.hbar = detail::field_as<double>(j, "hbar");
  validate_params(p);
  return p;
}

inline json solver_to_json(const SolverConfig& c) {
  return {{"dt", c.dt},
          {"epsilon", c.epsilon},
          {"n_modes", c.n_modes},
          {"fixed_point_tol", c.fixed_point_tol},
          {"fixed_point_max_iter", c.fixed_point_max_iter},
          {"continuity_scheme", to_string(c.continuity_scheme)},
          {"time_quadrature", to_string(c.time_quadrature)},
          {"rho_floor", c.rho_floor},
          {"courant", c.courant},
          {"snapshot_every", c.snapshot_every}};
}

inline SolverConfig solver_from_json(const json& j) {
  SolverConfig c;
  c.dt = detail::field_as<double>(j, "dt");
  c.epsilon = detail::field_as<double>(j, "epsilon");
  c.n_modes = detail::field_as<int>(j, "n_modes");
  c.fixed_point_tol = detail::field_as<double>(j, "fixed_point_tol");
  c.fixed_point_max_iter = detail::field_as<int>(j, "fixed_point_max_iter");
  c.continuity_scheme = parse_continuity_scheme(
      detail::field_as<std::string>(j, "continuity_scheme"));
  c.time_quadrature = parse_time_quadrature(
      detail::field_as<std::string>(j, "time_quadrature"));
  c.rho_floor = detail::field_as<double>(j, "rho_floor");
  c.courant = detail::field_as<double>(j, "courant");
  c.snapshot_every = detail::field_as<int>(j, "snapshot_every");
  return c;
}

// Canonical identity of a run; its fingerprint stamps every artifact the run
// produces.
inline json run_fingerprint(const Domain& d, const FluidParams& p,
                            const SolverConfig& c, SystemKind kind) {
  return {{"domain", domain_to_json(d)},
          {"params", params_to_json(p)},
          {"solver", solver_to_json(c)},
          {"system", to_string(kind)}};
}

// ---------------------------------------------------------------------------
// field snapshots: one JSON header line, then the raw values as little-endian
// 64-bit floats in row-major order (vector components in sequence)

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "field payloads are written little-endian");

inline json field_header(const Domain& d, const char* kind) {
  json h = domain_to_json(d);
  h["version"] = kSchemaVersion;
  h["field-kind"] = kind;
  return h;
}

inline void write_snapshot(std::ostream& os, const Domain& d,
                           const char* kind, const std::vector<double>& v) {
  os << field_header(d, kind).dump() << '\n';
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
  require(os.good(), Err::io_error, "field snapshot write failed");
}

inline json read_snapshot_header(std::istream& is, const char* kind) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), Err::parse_error,
          "missing field snapshot header");
  json h = json::parse(line, nullptr, false);
  require(!h.is_discarded(), Err::parse_error,
          "field snapshot header is not valid JSON");
  require(field_as<int>(h, "version") == kSchemaVersion, Err::parse_error,
          "unsupported field snapshot version");
  require(field_as<std::string>(h, "field-kind") == kind, Err::parse_error,
          std::string("expected a ") + kind + " field snapshot");
  return h;
}

inline void read_payload(std::istream& is, std::vector<double>& v) {
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  require(static_cast<std::size_t>(is.gcount()) == v.size() * sizeof(double),
          Err::parse_error, "truncated field snapshot payload");
}

}  // namespace detail

inline void write_field(std::ostream& os, const ScalarField& f) {
  detail::write_snapshot(os, f.domain(), "scalar", f.raw());
}

inline void write_field(std::ostream& os, const VectorField& f) {
  detail::write_snapshot(os, f.domain(), "vector", f.raw());
}

inline ScalarField read_scalar_field(std::istream& is) {
  json h = detail::read_snapshot_header(is, "scalar");
  ScalarField f(domain_from_json(h));
  detail::read_payload(is, f.raw());
  return f;
}

inline VectorField read_vector_field(std::istream& is) {
  json h = detail::read_snapshot_header(is, "vector");
  VectorField f(domain_from_json(h));
  detail::read_payload(is, f.raw());
  return f;
}

// ---------------------------------------------------------------------------
// file helpers

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view text) {
  std::ofstream os(path, std::ios::binary);
  require(os.is_open(), Err::io_error, "cannot write " + path.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  require(os.good(), Err::io_error, "write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), Err::io_error, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return text;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  json j = json::parse(read_text_file(path), nullptr, false);
  require(!j.is_discarded(), Err::parse_error,
          path.string() + " is not valid JSON");
  return j;
}

// ---------------------------------------------------------------------------
// checkpoints: <stem>.fields holds the density and momentum snapshots,
// <stem>.json the sidecar. Velocity coefficients ride along in the sidecar
// (JSON doubles round-trip exactly) so a replay restarts from the precise
// solver state.

struct Checkpoint {
  FluidState state;
  FluidParams params;
  std::string config_hash;
};

inline void write_checkpoint(const std::filesystem::path& stem,
                             const FluidState& state, const FluidParams& p,
                             const std::string& config_hash) {
  if (stem.has_parent_path())
    std::filesystem::create_directories(stem.parent_path());
  std::filesystem::path fields = stem;
  fields += ".fields";
  std::ofstream os(fields, std::ios::binary);
  require(os.is_open(), Err::io_error, "cannot write " + fields.string());
  write_field(os, state.rho);
  write_field(os, state.momentum);

  json side = {{"schema_version", kSchemaVersion},
               {"config_hash", config_hash},
               {"time", state.time},
               {"energy", state.energy},
               {"params", params_to_json(p)}};
  if (state.velocity_coeffs)
    side["velocity_coeffs"] = *state.velocity_coeffs;
  else
    side["velocity_coeffs"] = nullptr;
  std::filesystem::path sidecar = stem;
  sidecar += ".json";
  write_json_file(sidecar, side);
}

inline Checkpoint read_checkpoint(const std::filesystem::path& stem) {
  std::filesystem::path fields = stem;
  fields += ".fields";
  std::ifstream is(fields, std::ios::binary);
  require(is.is_open(), Err::io_error, "cannot open " + fields.string());

  Checkpoint ck;
  ck.state.rho = read_scalar_field(is);
  ck.state.momentum = read_vector_field(is);
  require_same_domain(ck.state.rho.domain(), ck.state.momentum.domain(),
                      "read_checkpoint");

  std::filesystem::path sidecar = stem;
  sidecar += ".json";
  json side = read_json_file(sidecar);
  require(detail::field_as<int>(side, "schema_version") == kSchemaVersion,
          Err::parse_error, "unsupported checkpoint schema");
  ck.state.time = detail::field_as<double>(side, "time");
  ck.state.energy = detail::field_as<double>(side, "energy");
  ck.config_hash = detail::field_as<std::string>(side, "config_hash");
  ck.params = params_from_json(detail::field_as<json>(side, "params"));
  if (side.contains("velocity_coeffs") && !side["velocity_coeffs"].is_null())
    ck.state.velocity_coeffs =
        detail::field_as<std::vector<double>>(side, "velocity_coeffs");
  return ck;
}

// ---------------------------------------------------------------------------
// trajectory directories: a checkpoint series plus a manifest

inline std::string checkpoint_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06zu", i);
  return buf;
}

inline void write_trajectory(const std::filesystem::path& dir,
                             const Trajectory& traj, const FluidParams& p) {
  require(!traj.empty(), Err::validation_error,
          "write_trajectory: empty trajectory");
  std::filesystem::create_directories(dir);

  json samples = json::array();
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const TrajectorySample& s = traj.samples[i];
    const std::string stem = checkpoint_stem(i);
    write_checkpoint(dir / stem, s.state, p, traj.meta.config_hash);
    samples.push_back({{"file", stem},
                       {"time", s.state.time},
                       {"diss_cum", s.diss_cum},
                       {"eps_diss_pressure_cum", s.eps_diss_pressure_cum},
                       {"eps_diss_quantum_cum", s.eps_diss_quantum_cum}});
  }

  json manifest = {
      {"schema_version", kSchemaVersion},
      {"config_hash", traj.meta.config_hash},
      {"e0", traj.e0},
      {"status", to_string(traj.status)},
      {"status_detail", traj.status_detail},
      {"meta",
       {{"system", traj.meta.system},
        {"dt", traj.meta.dt},
        {"epsilon", traj.meta.epsilon},
        {"n_modes", traj.meta.n_modes},
        {"mu", traj.meta.mu},
        {"lambda_bulk", traj.meta.lambda_bulk},
        {"has_dissipation_cums", traj.meta.has_dissipation_cums}}},
      {"params", params_to_json(p)},
      {"samples", samples}};
  write_json_file(dir / "traj.json", manifest);
}

struct StoredTrajectory {
  Trajectory trajectory;
  FluidParams params;
};

inline StoredTrajectory read_trajectory(const std::filesystem::path& dir) {
  json manifest = read_json_file(dir / "traj.json");
  require(detail::field_as<int>(manifest, "schema_version") == kSchemaVersion,
          Err::parse_error, "unsupported trajectory schema");

  StoredTrajectory out;
  out.params = params_from_json(detail::field_as<json>(manifest, "params"));
  Trajectory& traj = out.trajectory;
  traj.e0 = detail::field_as<double>(manifest, "e0");
  traj.status =
      parse_run_status(detail::field_as<std::string>(manifest, "status"));
  traj.status_detail =
      detail::field_as<std::string>(manifest, "status_detail");
  traj.meta.config_hash =
      detail::field_as<std::string>(manifest, "config_hash");

  const json meta = detail::field_as<json>(manifest, "meta");
  traj.meta.system = detail::field_as<std::string>(meta, "system");
  traj.meta.dt = detail::field_as<double>(meta, "dt");
  traj.meta.epsilon = detail::field_as<double>(meta, "epsilon");
  traj.meta.n_modes = detail::field_as<int>(meta, "n_modes");
  traj.meta.mu = detail::field_as<double>(meta, "mu");
  traj.meta.lambda_bulk = detail::field_as<double>(meta, "lambda_bulk");
  traj.meta.has_dissipation_cums =
      detail::field_as<bool>(meta, "has_dissipation_cums");

  const json samples = detail::field_as<json>(manifest, "samples");
  require(samples.is_array() && !samples.empty(), Err::parse_error,
          "trajectory manifest without samples");
  for (const json& entry : samples) {
    Checkpoint ck =
        read_checkpoint(dir / detail::field_as<std::string>(entry, "file"));
    TrajectorySample s;
    s.state = std::move(ck.state);
    s.state.time = detail::field_as<double>(entry, "time");
    s.diss_cum = detail::field_as<double>(entry, "diss_cum");
    s.eps_diss_pressure_cum =
        detail::field_as<double>(entry, "eps_diss_pressure_cum");
    s.eps_diss_quantum_cum =
        detail::field_as<double>(entry, "eps_diss_quantum_cum");
    traj.samples.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// report serialization

inline void write_energy_csv(std::ostream& os, const EnergyReport& r) {
  os << "t,E,E_kin,E_pot,E_quantum,diss_cum,eps_diss_cum,slack,defect_proxy\n";
  char line[256];
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::snprintf(line, sizeof line,
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.times[i], r.energy[i], r.kinetic[i], r.potential[i],
                  r.quantum[i], r.diss_cum[i], r.eps_diss_cum[i], r.slack[i],
                  r.defect_proxy[i]);
    os << line;
  }
}

inline json energy_report_json(const EnergyReport& r,
                               const std::string& config_hash) {
  // NaN marks "no violation"; make that an explicit JSON null instead of
  // relying on the serializer's NaN fallback.
  json violation = nullptr;
  if (!std::isnan(r.first_violation_time))
    violation = r.first_violation_time;
  return {{"schema_version", kSchemaVersion},
          {"config_hash", config_hash},
          {"passed", r.passed},
          {"e0", r.e0},
          {"dt", r.dt},
          {"c_tol", r.c_tol},
          {"lambda_defect", r.lambda_defect},
          {"first_violation_time", violation},
          {"samples", r.times.size()},
          {"final",
           {{"t", r.times.back()},
            {"E", r.energy.back()},
            {"diss_cum", r.diss_cum.back()},
            {"eps_diss_cum", r.eps_diss_cum.back()},
            {"slack", r.slack.back()},
            {"defect_proxy", r.defect_proxy.back()},
            {"tol_budget", r.tol_budget.back()}}}};
}

inline void write_relative_energy_csv(std::ostream& os,
                                      const RelativeEnergyReport& r) {
  os << "t,rel_energy,kinetic_gap,pressure_gap,quantum_gap\n";
  char line[160];
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.times[i], r.rel_energy[i], r.kinetic_gap[i],
                  r.pressure_gap[i], r.quantum_gap[i]);
    os << line;
  }
}

inline json relative_energy_json(const RelativeEnergyReport& r,
                                 const std::string& config_hash) {
  return {{"schema_version", kSchemaVersion},
          {"config_hash", config_hash},
          {"C", r.gronwall_C},
          {"L", r.gronwall_L},
          {"passed", r.passed},
          {"samples", r.times.size()},
          {"final_rel_energy", r.rel_energy.back()}};
}

// Sweep directory: one checkpoint series (a trajectory directory) per
// successful ladder entry, plus the manifest. Failed entries keep their
// diagnostics in the manifest and write no series. NaN distances for failed
// entries serialize as JSON null.
inline void write_sweep(const std::filesystem::path& dir,
                        const SweepResult& sw, const FluidParams& base_params,
                        const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  json entries = json::array();
  for (std::size_t i = 0; i < sw.entries.size(); ++i) {
    const SweepEntry& e = sw.entries[i];
    char name[32];
    std::snprintf(name, sizeof name, "entry_%02zu", i);
    json record = {{"value", e.value},
                   {"failed", e.failed},
                   {"detail", e.detail},
                   {"audit_passed", e.audit_passed},
                   {"viscous_work", e.viscous_work},
                   {"eps_diss_pressure", e.eps_diss_pressure},
                   {"eps_diss_quantum", e.eps_diss_quantum},
                   {"dir", nullptr}};
    if (!e.failed) {
      FluidParams p = base_params;
      p.mu = e.trajectory.meta.mu;
      p.lambda_bulk = e.trajectory.meta.lambda_bulk;
      write_trajectory(dir / name, e.trajectory, p);
      record["dir"] = name;
    }
    entries.push_back(std::move(record));
  }
  json manifest = {{"schema_version", kSchemaVersion},
                   {"config_hash", config_hash},
                   {"parameter", sw.parameter},
                   {"ladder", sw.ladder},
                   {"distances", sw.pairwise_distances},
                   {"ratios", sw.cauchy_ratio},
                   {"monotone_quantity", sw.monotone_quantity},
                   {"entries", entries}};
  write_json_file(dir / "sweep.json", manifest);
}

inline json selection_report_json(
    const std::vector<SelectionFunctional>& functionals,
    const SelectionOutcome& outcome, const std::string& config_hash,
    const std::vector<SemigroupReport>& semigroup = {}) {
  json fs = json::array();
  for (const SelectionFunctional& f : functionals)
    fs.push_back({{"rate", f.rate}, {"observable", to_string(f.observable)}});
  json semis = json::array();
  for (const SemigroupReport& r : semigroup)
    semis.push_back({{"t1", r.t1},
                     {"t2", r.t2},
                     {"distance", r.distance},
                     {"tolerance", r.tolerance},
                     {"passed", r.passed}});
  return {{"schema_version", kSchemaVersion},
          {"config_hash", config_hash},
          {"functionals", fs},
          {"survivors_per_round", outcome.survivors},
          {"round_minima", outcome.round_minima},
          {"winner", outcome.winner},
          {"semigroup_distances", semis}};
}

}  // namespace qfluid
