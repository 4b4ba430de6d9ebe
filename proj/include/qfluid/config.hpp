#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qfluid/io.hpp"

namespace qfluid {

enum class InitialFamily { constant, sine_perturbation, gaussian_bump };

inline const char* to_string(InitialFamily f) {
  switch (f) {
    case InitialFamily::constant: return "constant";
    case InitialFamily::sine_perturbation: return "sine-perturbation";
    case InitialFamily::gaussian_bump: return "gaussian-bump";
  }
  return "?";
}

inline InitialFamily parse_initial_family(const std::string& s) {
  if (s == "constant") return InitialFamily::constant;
  if (s == "sine-perturbation") return InitialFamily::sine_perturbation;
  if (s == "gaussian-bump") return InitialFamily::gaussian_bump;
  fail(Err::parse_error, "unknown initial family \"" + s + "\"");
}

// Named initial-condition families keep the energy-compatibility of the
// datum checkable; arbitrary fields enter only through the unchecked loader.
struct InitialSpec {
  InitialFamily family = InitialFamily::constant;
  double rho_bar = 1.0;
  double amplitude = 0.0;              // relative for sine, absolute for bump
  double width = 0.5;                  // bump standard deviation
  std::array<double, 2> drift{0.0, 0.0};
};

struct ExperimentConfig {
  SystemKind system = SystemKind::navier_stokes;
  Domain domain = make_domain(1, {2.0 * M_PI}, {64}, Bc::periodic);
  FluidParams params;
  SolverConfig solver;
  InitialSpec initial;
  double t_final = 0.1;
  std::string output_dir = "out";
  bool reproducible = true;
  // Energy budget E0; defaults to the exact energy of the discrete datum.
  double e0 = std::numeric_limits<double>::quiet_NaN();
};

inline ScalarField initial_density(const ExperimentConfig& cfg) {
  const Domain& d = cfg.domain;
  const InitialSpec& ic = cfg.initial;
  switch (ic.family) {
    case InitialFamily::constant:
      return ScalarField::from_function(
          d, [&](double, double) { return ic.rho_bar; });
    case InitialFamily::sine_perturbation:
      return ScalarField::from_function(d, [&](double x, double y) {
        double s = std::sin(2.0 * M_PI * x / d.lengths[0]);
        if (d.dim == 2) s *= std::sin(2.0 * M_PI * y / d.lengths[1]);
        return ic.rho_bar * (1.0 + ic.amplitude * s);
      });
    case InitialFamily::gaussian_bump:
      return ScalarField::from_function(d, [&](double x, double y) {
        double r2 = (x - 0.5 * d.lengths[0]) * (x - 0.5 * d.lengths[0]);
        if (d.dim == 2)
          r2 += (y - 0.5 * d.lengths[1]) * (y - 0.5 * d.lengths[1]);
        return ic.rho_bar +
               ic.amplitude * std::exp(-r2 / (2.0 * ic.width * ic.width));
      });
  }
  fail(Err::validation_error, "unhandled initial family");
}

inline VectorField initial_velocity(const ExperimentConfig& cfg) {
  VectorField u(cfg.domain);
  for (int c = 0; c < cfg.domain.dim; ++c) {
    auto span = u.comp(c);
    for (std::size_t i = 0; i < u.npoints(); ++i)
      span[i] = cfg.initial.drift[static_cast<std::size_t>(c)];
  }
  return u;
}

// Collects every violated invariant rather than stopping at the first.
inline void validate_experiment(const ExperimentConfig& cfg) {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };

  check(cfg.params.gamma > 1.0, "gamma must exceed 1, got " +
                                    std::to_string(cfg.params.gamma));
  check(cfg.params.a > 0.0, "pressure coefficient a must be positive");
  check(cfg.params.hbar > 0.0, "hbar must be positive");
  check(cfg.params.mu >= 0.0 && cfg.params.lambda_bulk >= 0.0,
        "viscosities must be nonnegative");
  if (cfg.system == SystemKind::euler)
    check(cfg.params.mu == 0.0 && cfg.params.lambda_bulk == 0.0,
          "euler system requires mu = 0 and lambda_bulk = 0");
  check(cfg.params.dim == cfg.domain.dim,
        "params.dim must match the domain dimension");

  check(cfg.solver.dt > 0.0, "dt must be positive");
  check(cfg.solver.n_modes >= 1, "n_modes must be at least 1");
  check(cfg.solver.epsilon >= 0.0, "epsilon must be nonnegative");
  check(cfg.solver.snapshot_every >= 1, "snapshot cadence must be >= 1");
  check(cfg.t_final >= 0.0, "t_final must be nonnegative");

  check(cfg.initial.rho_bar > 0.0, "initial rho_bar must be positive");
  if (cfg.initial.family == InitialFamily::gaussian_bump)
    check(cfg.initial.width > 0.0, "bump width must be positive");
  if (cfg.domain.bc == Bc::wall)
    check(cfg.initial.drift[0] == 0.0 && cfg.initial.drift[1] == 0.0,
          "drift must vanish on wall domains");

  if (cfg.initial.rho_bar > 0.0 &&
      (cfg.initial.family != InitialFamily::gaussian_bump ||
       cfg.initial.width > 0.0)) {
    ScalarField rho = initial_density(cfg);
    check(rho.min() > 0.0, "initial density family is not strictly positive "
                           "for the given parameters (min " +
                               std::to_string(rho.min()) + ")");
  }

  if (!bad.empty()) {
    std::string msg = "invalid experiment config:";
    for (const std::string& m : bad) msg += "\n  - " + m;
    fail(Err::validation_error, msg);
  }
}

// Discrete initial datum: density and drift projected through the solver's
// own entry point so the stored energy is the exact discrete integral.
inline FluidState experiment_initial_state(const ExperimentConfig& cfg,
                                           const GalerkinBasis& basis) {
  return make_initial_state(initial_density(cfg), initial_velocity(cfg),
                            cfg.params, basis);
}

// The configured budget must dominate the energy of the discrete datum.
inline double resolve_e0(const ExperimentConfig& cfg,
                         const FluidState& init) {
  if (std::isnan(cfg.e0)) return init.energy;
  require(cfg.e0 >= init.energy - 1e-12 * std::abs(init.energy),
          Err::validation_error,
          "configured e0 = " + std::to_string(cfg.e0) +
              " is below the initial energy " + std::to_string(init.energy));
  return cfg.e0;
}

inline json experiment_to_json(const ExperimentConfig& cfg) {
  json initial = {{"family", to_string(cfg.initial.family)},
                  {"rho_bar", cfg.initial.rho_bar},
                  {"amplitude", cfg.initial.amplitude},
                  {"width", cfg.initial.width},
                  {"drift", std::vector<double>{cfg.initial.drift[0],
                                                cfg.initial.drift[1]}}};
  json j = {{"system", to_string(cfg.system)},
            {"domain", domain_to_json(cfg.domain)},
            {"params", params_to_json(cfg.params)},
            {"solver", solver_to_json(cfg.solver)},
            {"initial", initial},
            {"t_final", cfg.t_final},
            {"output", {{"directory", cfg.output_dir}}},
            {"reproducible", cfg.reproducible}};
  if (!std::isnan(cfg.e0)) j["e0"] = cfg.e0;
  return j;
}

// Stable identity of the physics-relevant part of a config (output paths do
// not change what is computed).
inline std::string experiment_fingerprint(const ExperimentConfig& cfg) {
  json j = experiment_to_json(cfg);
  j.erase("output");
  return config_fingerprint(j);
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return field_as<T>(j, key);
}

inline void reject_unknown_keys(const json& j, const char* section,
                                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) return;
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    require(known, Err::parse_error,
            std::string("unknown field \"") + item.key() + "\" in " +
                section);
  }
}

// Minimal TOML reader covering the config surface: [section] headers,
// key = value lines with strings, booleans, numbers, and flat arrays,
// and # comments. Reported errors carry the line number.
inline json toml_subset_to_json(const std::string& text) {
  json root = json::object();
  json* section = &root;
  std::size_t pos = 0;
  int lineno = 0;

  auto parse_fail = [&](const std::string& what) -> void {
    fail(Err::parse_error,
         "line " + std::to_string(lineno) + ": " + what);
  };

  auto strip = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };

  auto drop_comment = [](const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  };

  auto scalar = [&](const std::string& tok) -> json {
    if (tok.empty()) parse_fail("empty value");
    if (tok.front() == '"') {
      if (tok.size() < 2 || tok.back() != '"')
        parse_fail("unterminated string " + tok);
      return tok.substr(1, tok.size() - 2);
    }
    if (tok == "true") return true;
    if (tok == "false") return false;
    char* end = nullptr;
    if (tok.find_first_of(".eE") == std::string::npos ||
        tok.find("0x") == 0) {
      long long v = std::strtoll(tok.c_str(), &end, 10);
      if (end == tok.c_str() + tok.size()) return v;
    }
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size())
      parse_fail("cannot parse value \"" + tok + "\"");
    return v;
  };

  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;

    line = strip(drop_comment(line));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') parse_fail("unterminated section header");
      std::string name = strip(line.substr(1, line.size() - 2));
      if (name.empty()) parse_fail("empty section name");
      section = &root[name];
      if (section->is_null()) *section = json::object();
      continue;
    }

    std::size_t eq = std::string::npos;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '=' && !quoted) {
        eq = i;
        break;
      }
    }
    if (eq == std::string::npos) parse_fail("expected key = value");
    std::string key = strip(line.substr(0, eq));
    std::string val = strip(line.substr(eq + 1));
    if (key.empty()) parse_fail("empty key");
    if (val.empty()) parse_fail("missing value for \"" + key + "\"");

    if (val.front() == '[') {
      if (val.back() != ']') parse_fail("unterminated array for \"" + key + "\"");
      json arr = json::array();
      std::string body = val.substr(1, val.size() - 2);
      std::size_t start = 0;
      bool in_str = false;
      for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i < body.size() && body[i] == '"') in_str = !in_str;
        if (i == body.size() || (body[i] == ',' && !in_str)) {
          std::string item = strip(body.substr(start, i - start));
          if (!item.empty()) arr.push_back(scalar(item));
          start = i + 1;
        }
      }
      (*section)[key] = std::move(arr);
    } else {
      (*section)[key] = scalar(val);
    }
  }
  return root;
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const json& j) {
  require(j.is_object(), Err::parse_error, "config root must be an object");
  detail::reject_unknown_keys(j, "config",
                              {"system", "domain", "params", "solver",
                               "initial", "output", "t_final", "e0",
                               "reproducible"});
  ExperimentConfig cfg;
  cfg.system = parse_system_kind(
      detail::get_or<std::string>(j, "system", "navier_stokes"));

  if (j.contains("domain")) {
    const json d = detail::field_as<json>(j, "domain");
    detail::reject_unknown_keys(d, "domain",
                                {"dim", "lengths", "resolution", "bc"});
    int dim = detail::get_or<int>(d, "dim", 1);
    std::vector<double> lengths = detail::get_or<std::vector<double>>(
        d, "lengths", std::vector<double>(static_cast<std::size_t>(dim),
                                          2.0 * M_PI));
    std::vector<int> res = detail::get_or<std::vector<int>>(
        d, "resolution", std::vector<int>(static_cast<std::size_t>(dim), 64));
    Bc bc = parse_bc(detail::get_or<std::string>(d, "bc", "periodic"));
    cfg.domain = make_domain(dim, lengths, res, bc);
  }
  cfg.params.dim = cfg.domain.dim;

  if (j.contains("params")) {
    const json p = detail::field_as<json>(j, "params");
    detail::reject_unknown_keys(
        p, "params", {"dim", "a", "gamma", "mu", "lambda_bulk", "hbar"});
    cfg.params.dim = detail::get_or<int>(p, "dim", cfg.params.dim);
    cfg.params.a = detail::get_or<double>(p, "a", cfg.params.a);
    cfg.params.gamma = detail::get_or<double>(p, "gamma", cfg.params.gamma);
    cfg.params.mu = detail::get_or<double>(p, "mu", cfg.params.mu);
    cfg.params.lambda_bulk =
        detail::get_or<double>(p, "lambda_bulk", cfg.params.lambda_bulk);
    cfg.params.hbar = detail::get_or<double>(p, "hbar", cfg.params.hbar);
  }

  if (j.contains("solver")) {
    const json s = detail::field_as<json>(j, "solver");
    detail::reject_unknown_keys(
        s, "solver",
        {"dt", "epsilon", "n_modes", "fixed_point_tol",
         "fixed_point_max_iter", "continuity_scheme", "time_quadrature",
         "rho_floor", "courant", "snapshot_every"});
    SolverConfig& c = cfg.solver;
    c.dt = detail::get_or<double>(s, "dt", c.dt);
    c.epsilon = detail::get_or<double>(s, "epsilon", c.epsilon);
    c.n_modes = detail::get_or<int>(s, "n_modes", c.n_modes);
    c.fixed_point_tol =
        detail::get_or<double>(s, "fixed_point_tol", c.fixed_point_tol);
    c.fixed_point_max_iter = detail::get_or<int>(s, "fixed_point_max_iter",
                                                 c.fixed_point_max_iter);
    if (s.contains("continuity_scheme"))
      c.continuity_scheme = parse_continuity_scheme(
          detail::field_as<std::string>(s, "continuity_scheme"));
    if (s.contains("time_quadrature"))
      c.time_quadrature = parse_time_quadrature(
          detail::field_as<std::string>(s, "time_quadrature"));
    c.rho_floor = detail::get_or<double>(s, "rho_floor", c.rho_floor);
    c.courant = detail::get_or<double>(s, "courant", c.courant);
    c.snapshot_every =
        detail::get_or<int>(s, "snapshot_every", c.snapshot_every);
  }

  if (j.contains("initial")) {
    const json ic = detail::field_as<json>(j, "initial");
    detail::reject_unknown_keys(
        ic, "initial", {"family", "rho_bar", "amplitude", "width", "drift"});
    cfg.initial.family = parse_initial_family(
        detail::get_or<std::string>(ic, "family", "constant"));
    cfg.initial.rho_bar =
        detail::get_or<double>(ic, "rho_bar", cfg.initial.rho_bar);
    cfg.initial.amplitude =
        detail::get_or<double>(ic, "amplitude", cfg.initial.amplitude);
    cfg.initial.width =
        detail::get_or<double>(ic, "width", cfg.initial.width);
    if (ic.contains("drift")) {
      std::vector<double> dr =
          detail::field_as<std::vector<double>>(ic, "drift");
      require(dr.size() >= 1 && dr.size() <= 2, Err::parse_error,
              "drift must have one entry per dimension");
      cfg.initial.drift = {dr[0], dr.size() > 1 ? dr[1] : 0.0};
    }
  }

  if (j.contains("output")) {
    const json o = detail::field_as<json>(j, "output");
    detail::reject_unknown_keys(o, "output", {"directory", "cadence"});
    cfg.output_dir =
        detail::get_or<std::string>(o, "directory", cfg.output_dir);
    cfg.solver.snapshot_every =
        detail::get_or<int>(o, "cadence", cfg.solver.snapshot_every);
  }

  cfg.t_final = detail::get_or<double>(j, "t_final", cfg.t_final);
  cfg.reproducible = detail::get_or<bool>(j, "reproducible", cfg.reproducible);
  if (j.contains("e0")) cfg.e0 = detail::field_as<double>(j, "e0");

  validate_experiment(cfg);
  return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  const std::string text = read_text_file(path);
  if (ext == ".json") {
    json j = json::parse(text, nullptr, false);
    require(!j.is_discarded(), Err::parse_error,
            path.string() + ": invalid JSON");
    return experiment_from_json(j);
  }
  if (ext == ".toml")
    return experiment_from_json(detail::toml_subset_to_json(text));
  fail(Err::parse_error,
       path.string() + ": config must be a .toml or .json file");
}

}  // namespace qfluid
