#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "qfluid/qfluid.hpp"

// End-to-end tests against the installed binary: exit codes, artifact layout,
// byte-level reproducibility, and the diagnostic trail on failures.

namespace fs = std::filesystem;
using qfluid::json;

namespace {

const std::string kCli = QFLUID_CLI_PATH;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "qfluid_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  std::string cmd = kCli + " " + args + " > /dev/null 2> /dev/null";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
  REQUIRE(os.good());
}

std::string base_toml(const std::string& out_dir, const std::string& extra) {
  return "system = \"navier_stokes\"\n"
         "t_final = 0.0625\n"
         "[domain]\n"
         "resolution = [64]\n"
         "[params]\n"
         "gamma = 2.0\n"
         "a = 1.0\n"
         "hbar = 0.5\n"
         "mu = 1.0\n"
         "lambda_bulk = 0.1\n"
         "[solver]\n"
         "dt = 0.0009765625\n"
         "n_modes = 8\n"
         "time_quadrature = \"trapezoid\"\n"
         "[output]\n"
         "directory = \"" + out_dir + "\"\n"
         "cadence = 8\n"
         "[initial]\n"
         "family = \"sine-perturbation\"\n"
         "rho_bar = 1.0\n"
         "amplitude = 0.3\n" + extra;
}

std::map<std::string, std::string> dir_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream is(e.path(), std::ios::binary);
    std::string body((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    out[fs::relative(e.path(), root).string()] = body;
  }
  return out;
}

}  // namespace

TEST_CASE("identity suite passes and writes a report") {
  fs::path dir = scratch("verify");
  int code = run_cli("verify --suite identities --resolution 256 -o " +
                     (dir / "vout").string());
  CHECK(code == 0);

  json j = qfluid::read_json_file(dir / "vout" / "verify.json");
  CHECK(j.at("passed").get<bool>());
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("resolution").get<int>() == 256);
  CHECK(j.at("config_hash").get<std::string>().size() == 16);
  const json& checks = j.at("checks");
  CHECK(checks.size() >= 8);
  for (const json& c : checks) CHECK(c.at("passed").get<bool>());

  CHECK(run_cli("verify --suite bogus") == 4);
}

TEST_CASE("simulate writes certified artifacts and is byte reproducible") {
  fs::path dir = scratch("simulate");
  fs::path out = dir / "out";
  write_file(dir / "cfg.toml", base_toml(out.string(), ""));

  int code = run_cli("simulate -c " + (dir / "cfg.toml").string());
  REQUIRE(code == 0);
  REQUIRE(fs::exists(out / "config.json"));
  REQUIRE(fs::exists(out / "energy.csv"));
  REQUIRE(fs::exists(out / "energy.json"));
  REQUIRE(fs::exists(out / "trajectory" / "traj.json"));
  CHECK_FALSE(fs::exists(out / "diagnostic.json"));

  json cfg = qfluid::read_json_file(out / "config.json");
  json energy = qfluid::read_json_file(out / "energy.json");
  CHECK(energy.at("passed").get<bool>());
  CHECK(energy.at("config_hash") == cfg.at("config_hash"));
  json manifest = qfluid::read_json_file(out / "trajectory" / "traj.json");
  CHECK(manifest.at("config_hash") == cfg.at("config_hash"));
  CHECK(manifest.at("status").get<std::string>() == "ok");

  auto first = dir_bytes(out);
  REQUIRE(run_cli("simulate -c " + (dir / "cfg.toml").string()) == 0);
  CHECK(dir_bytes(out) == first);
}

TEST_CASE("unchecked init restarts from a checkpoint bitwise") {
  fs::path dir = scratch("restart");
  fs::path out = dir / "out";
  write_file(dir / "cfg.toml", base_toml(out.string(), ""));
  REQUIRE(run_cli("simulate -c " + (dir / "cfg.toml").string()) == 0);

  fs::path stem = out / "trajectory" / "ckpt_000004";
  REQUIRE(fs::exists(stem.string() + ".fields"));
  int code = run_cli("simulate -c " + (dir / "cfg.toml").string() + " -o " +
                     (dir / "tail").string() + " --unchecked-init " +
                     stem.string());
  REQUIRE(code == 0);

  json whole = qfluid::read_json_file(out / "trajectory" / "traj.json");
  json tail =
      qfluid::read_json_file(dir / "tail" / "trajectory" / "traj.json");
  const json& wsamp = whole.at("samples");
  const json& tsamp = tail.at("samples");
  REQUIRE(tsamp.size() == wsamp.size() - 4);
  CHECK(tsamp.front().at("time").get<double>() ==
        wsamp.at(4).at("time").get<double>());

  // the restarted tail reproduces the original run's terminal state exactly
  qfluid::Checkpoint a = qfluid::read_checkpoint(
      (out / "trajectory" / "ckpt_000008").string());
  qfluid::Checkpoint b = qfluid::read_checkpoint(
      (dir / "tail" / "trajectory" /
       ("ckpt_00000" + std::to_string(tsamp.size() - 1)))
          .string());
  CHECK(a.state.rho == b.state.rho);
  CHECK(a.state.momentum == b.state.momentum);
  CHECK(a.state.energy == b.state.energy);
}

TEST_CASE("audit failure exits 2 and leaves the diagnostic trail") {
  fs::path dir = scratch("audit_fail");
  fs::path out = dir / "out";
  write_file(dir / "cfg.toml",
             base_toml(out.string(), "").replace(
                 base_toml(out.string(), "").find("cadence = 8"), 11,
                 "cadence = 16"));

  int code = run_cli("simulate -c " + (dir / "cfg.toml").string());
  CHECK(code == 2);
  REQUIRE(fs::exists(out / "diagnostic.json"));
  json d = qfluid::read_json_file(out / "diagnostic.json");
  CHECK(d.at("stage").get<std::string>() == "audit");
  CHECK(d.at("exit_code").get<int>() == 2);
  // partial artifacts are retained for inspection
  CHECK(fs::exists(out / "trajectory" / "traj.json"));
}

TEST_CASE("under-resolved sharp feature fails loudly") {
  fs::path dir = scratch("solver_fail");
  fs::path out = dir / "out";
  write_file(dir / "cfg.toml",
             "system = \"navier_stokes\"\n"
             "t_final = 0.05\n"
             "[domain]\n"
             "resolution = [8]\n"
             "[params]\n"
             "gamma = 2.0\n"
             "a = 1.0\n"
             "hbar = 0.5\n"
             "[solver]\n"
             "dt = 0.005\n"
             "n_modes = 4\n"
             "[output]\n"
             "directory = \"" + out.string() + "\"\n"
             "[initial]\n"
             "family = \"gaussian-bump\"\n"
             "rho_bar = 0.05\n"
             "amplitude = 1.0\n"
             "width = 0.05\n");

  int code = run_cli("simulate -c " + (dir / "cfg.toml").string());
  CHECK((code == 2 || code == 3));
  REQUIRE(fs::exists(out / "diagnostic.json"));
  json d = qfluid::read_json_file(out / "diagnostic.json");
  CHECK(d.at("exit_code").get<int>() == code);
  CHECK_FALSE(d.at("detail").get<std::string>().empty());
}

TEST_CASE("usage errors exit 4") {
  fs::path dir = scratch("usage");
  CHECK(run_cli("simulate -c " + (dir / "missing.toml").string()) == 4);
  CHECK(run_cli("--bogus-flag") == 4);
  CHECK(run_cli("--help") == 0);

  write_file(dir / "unknown.toml", base_toml((dir / "o").string(),
                                             "n_mods = 3\n"));
  CHECK(run_cli("simulate -c " + (dir / "unknown.toml").string()) == 4);

  write_file(dir / "invalid.toml",
             "system = \"euler\"\n[params]\ngamma = 0.5\nmu = 1.0\n");
  CHECK(run_cli("simulate -c " + (dir / "invalid.toml").string()) == 4);

  write_file(dir / "ok.toml", base_toml((dir / "o").string(), ""));
  CHECK(run_cli("sweep -c " + (dir / "ok.toml").string() +
                " --param banana --ladder 1,2") == 4);
  CHECK(run_cli("select --manifest " + (dir / "nothing").string()) == 4);
}

TEST_CASE("sweep writes the ladder artifacts") {
  fs::path dir = scratch("sweep");
  write_file(dir / "cfg.toml", base_toml((dir / "unused").string(), ""));

  int code = run_cli("sweep -c " + (dir / "cfg.toml").string() +
                     " --param epsilon --ladder 1e-2,1e-3 --jobs 2 -o " +
                     (dir / "sw").string());
  REQUIRE(code == 0);
  json j = qfluid::read_json_file(dir / "sw" / "sweep.json");
  CHECK(j.at("parameter").get<std::string>() == "epsilon");
  REQUIRE(j.at("entries").size() == 2);
  CHECK(j.at("entries").at(0).at("dir").get<std::string>() == "entry_00");
  CHECK(fs::exists(dir / "sw" / "entry_00" / "traj.json"));
  CHECK(fs::exists(dir / "sw" / "entry_01" / "traj.json"));
  CHECK(j.at("distances").size() == 2);
}

TEST_CASE("compare certifies an equilibrium run against its reference") {
  fs::path dir = scratch("compare");
  fs::path out = dir / "out";
  std::string toml = base_toml(out.string(), "");
  auto at = toml.find("family = \"sine-perturbation\"");
  toml.replace(at, std::string("family = \"sine-perturbation\"").size(),
               "family = \"constant\"");
  write_file(dir / "cfg.toml", toml);

  int code = run_cli("compare -c " + (dir / "cfg.toml").string() +
                     " --ref constant");
  REQUIRE(code == 0);
  json j = qfluid::read_json_file(out / "rel_energy.json");
  CHECK(j.at("passed").get<bool>());
  CHECK(j.at("final_rel_energy").get<double>() <= 1e-8);
  REQUIRE(fs::exists(out / "rel_energy.csv"));
  std::ifstream is(out / "rel_energy.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,rel_energy,kinetic_gap,pressure_gap,quantum_gap");
}

TEST_CASE("select picks the singleton and honors the semigroup probe") {
  fs::path dir = scratch("select");
  fs::path out = dir / "out";
  write_file(dir / "cfg.toml", base_toml(out.string(), ""));
  REQUIRE(run_cli("simulate -c " + (dir / "cfg.toml").string()) == 0);

  fs::create_directories(dir / "manifest");
  fs::copy(out / "trajectory", dir / "manifest" / "only_run",
           fs::copy_options::recursive);

  int code = run_cli(
      "select --manifest " + (dir / "manifest").string() +
      " --functionals energy,mass-weighted-energy,momentum-norm" +
      " --rate 1.0 --semigroup 0.015625,0.03125 -c " +
      (dir / "cfg.toml").string() + " -o " + (dir / "sel").string());
  REQUIRE(code == 0);

  json j = qfluid::read_json_file(dir / "sel" / "selection.json");
  CHECK(j.at("winner_name").get<std::string>() == "only_run");
  CHECK(j.at("winner").get<std::size_t>() == 0);
  REQUIRE(j.at("functionals").size() == 3);
  CHECK(j.at("functionals").at(1).at("observable").get<std::string>() ==
        "mass-weighted-energy");
  REQUIRE(j.at("semigroup_distances").size() == 1);
  CHECK(j.at("semigroup_distances").at(0).at("passed").get<bool>());
  CHECK(j.at("semigroup_distances").at(0).at("distance").get<double>() ==
        0.0);
  CHECK(fs::exists(dir / "sel" / "winner" / "traj.json"));
}
