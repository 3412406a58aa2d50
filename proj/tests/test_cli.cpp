#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ringsim/cli/app.hpp"
#include "ringsim/cli/scenario_file.hpp"

using namespace ringsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Outcome o;
  o.code = run_cli(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ringsim_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void spit(const std::string& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* small_ring =
    "seed = 4\n"
    "[cloud]\nplacement = ring\natoms = 80\nsigma_long = 1 mm\nsigma_trans = 10 um\nT_long = 3.4 uK\n"
    "mean_speed = 0.8857 m/s\n"
    "[losses]\ntau_background = 180 ms\n"
    "[ramps]\nt_end = 330 ms\n";

}  // namespace

TEST_CASE("exit codes follow the error category") {
  CHECK(exit_code(ErrorCategory::invalid_input) == 1);
  CHECK(exit_code(ErrorCategory::parse) == 1);
  CHECK(exit_code(ErrorCategory::schedule) == 1);
  CHECK(exit_code(ErrorCategory::io) == 1);
  CHECK(exit_code(ErrorCategory::geometry) == 1);
  CHECK(exit_code(ErrorCategory::numeric) == 2);
  CHECK(exit_code(ErrorCategory::singularity) == 2);
  CHECK(exit_code(ErrorCategory::accuracy) == 2);
  CHECK(exit_code(ErrorCategory::statistics) == 2);
}

TEST_CASE("characterize reports the guide gradient") {
  TempDir d("char");
  const Outcome o = run({"characterize", "--out", d.path.string()});
  REQUIRE(o.code == 0);
  CHECK(o.err.empty());
  CHECK(o.out.find("1814.1 G/cm") != std::string::npos);
  CHECK(o.out.find("2.559 mK") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(d / "characterize.json"));
  CHECK(j["guide"]["gradient_G_cm"].get<double>() == doctest::Approx(1814.0589579).epsilon(1e-6));
  CHECK(j["tool_version"] == std::string(tool_version));
  CHECK(j["scenario_hash"] == scenario_hash(ScenarioConfig{}));
  CHECK(fs::exists(d / "characterize.txt"));
  CHECK(fs::exists(d / "characterize.csv"));
}

TEST_CASE("field-map writes one row per grid point plus a header") {
  TempDir d("map");
  for (const std::string stage : {"guide", "ring"}) {
    const Outcome o = run({"field-map", "--stage", stage, "--grid", "7x5", "--out", d.path.string()});
    REQUIRE(o.code == 0);
    std::istringstream is(slurp(d / ("field_map_" + stage + ".csv")));
    std::string line, first;
    int rows = 0;
    while (std::getline(is, line)) {
      if (line.empty() || line.front() == '#') continue;
      if (first.empty()) first = line;
      ++rows;
    }
    CHECK(rows == 7 * 5 + 1);
    CHECK(first == "x_m,y_m,z_m,Bx_T,By_T,Bz_T,Bnorm_T");
  }
  const Outcome j = run({"field-map", "--grid", "3x4", "--format", "json", "--out", d.path.string()});
  REQUIRE(j.code == 0);
  CHECK(nlohmann::json::parse(slurp(d / "field_map_guide.json"))["rows"].size() == 12);
}

TEST_CASE("validation errors exit 1 with a category prefix") {
  TempDir d("errors");
  Outcome o = run({"simulate", "--out", d.path.string()});
  CHECK(o.code == 1);
  CHECK(o.err == "ERROR:invalid_input:seed required\n");

  spit(d / "bad.txt", "seed = 1\n[guide]\ncurrent = 8 G\n");
  o = run({"characterize", "--scenario", d / "bad.txt", "--out", d.path.string()});
  CHECK(o.code == 1);
  CHECK(o.err.rfind("ERROR:parse:", 0) == 0);
  CHECK(o.err.find("guide.current") != std::string::npos);

  o = run({"fly"});
  CHECK(o.code == 1);
  CHECK(o.err.rfind("ERROR:parse:", 0) == 0);
  o = run({"characterize", "--format", "xml"});
  CHECK(o.code == 1);
  o = run({"field-map", "--grid", "4by4", "--out", d.path.string()});
  CHECK(o.code == 1);
  CHECK(o.err.rfind("ERROR:invalid_input:", 0) == 0);
  o = run({"report", "--out", d.path.string()});
  CHECK(o.code == 1);
  CHECK(o.err.rfind("ERROR:io:", 0) == 0);

  o = run({"--help"});
  CHECK(o.code == 0);
  CHECK(o.out.find("simulate") != std::string::npos);
}

TEST_CASE("a trace without peaks is a numeric failure") {
  TempDir d("flat");
  ScenarioConfig cfg;
  cfg.seed = 1;
  std::string csv = "# scenario_hash=" + scenario_hash(cfg) + "\ndelay_s,signal\n";
  for (int i = 0; i < 200; ++i) csv += std::to_string(0.001 * i) + ",0\n";
  spit(d / "trace.csv", csv);
  const Outcome o = run({"fit", "--seed", "1", "--out", d.path.string()});
  CHECK(o.code == 2);
  CHECK(o.err.rfind("ERROR:statistics:", 0) == 0);

  const Outcome other = run({"fit", "--seed", "2", "--out", d.path.string()});
  CHECK(other.code == 1);
  CHECK(other.err.find("was produced by scenario") != std::string::npos);
}

TEST_CASE("output directory defaults to the environment variable") {
  TempDir d("env");
  ::setenv(output_dir_env, d.path.string().c_str(), 1);
  const Outcome o = run({"characterize"});
  ::unsetenv(output_dir_env);
  REQUIRE(o.code == 0);
  CHECK(fs::exists(d / "characterize.json"));
}

TEST_CASE("simulate then fit is byte-identical for the same seed, whatever the worker count") {
  TempDir a("det_a"), b("det_b");
  spit(a / "s.txt", small_ring);
  for (const auto& [dir, workers] : {std::pair{&a, "1"}, std::pair{&b, "0"}}) {
    const std::string out = dir->path.string();
    REQUIRE(run({"simulate", "--scenario", a / "s.txt", "--out", out, "--workers", workers}).code == 0);
    const Outcome f = run({"fit", "--scenario", a / "s.txt", "--out", out});
    INFO(f.err);
    REQUIRE(f.code == 0);
  }
  for (const char* f : {"trace.csv", "summary.json", "fit.json", "fit.csv"}) {
    INFO(f);
    const std::string x = slurp(a / f);
    CHECK(!x.empty());
    CHECK(x == slurp(b / f));
  }
  const auto fit = nlohmann::json::parse(slurp(a / "fit.json"));
  CHECK(fit["scenario_hash"] == nlohmann::json::parse(slurp(a / "summary.json"))["scenario_hash"]);
  CHECK(fit["trace_hash"] == fnv1a_hex(slurp(a / "trace.csv")));

  SUBCASE("report combines matching files and refuses mismatched ones") {
    REQUIRE(run({"characterize", "--scenario", a / "s.txt", "--out", a.path.string()}).code == 0);
    const Outcome r = run({"report", "--out", a.path.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("1/e lifetime") != std::string::npos);
    CHECK(fs::exists(a / "report.txt"));

    REQUIRE(run({"characterize", "--out", a.path.string()}).code == 0);
    const Outcome bad = run({"report", "--out", a.path.string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.rfind("ERROR:invalid_input:scenario hash mismatch", 0) == 0);
  }
  SUBCASE("seed override changes the run") {
    REQUIRE(run({"simulate", "--scenario", a / "s.txt", "--seed", "5", "--out", b.path.string()}).code == 0);
    CHECK(slurp(a / "trace.csv") != slurp(b / "trace.csv"));
  }
}
