#include "ringsim/cli/app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ringsim/analysis/peak_train.hpp"
#include "ringsim/analysis/stats.hpp"
#include "ringsim/cli/scenario_file.hpp"
#include "ringsim/core/units.hpp"
#include "ringsim/ensemble/scenario.hpp"
#include "ringsim/ensemble/shaping.hpp"
#include "ringsim/magnetics/fieldmap.hpp"
#include "ringsim/magnetics/trap.hpp"

namespace ringsim {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::numeric:
    case ErrorCategory::singularity:
    case ErrorCategory::accuracy:
    case ErrorCategory::statistics:
      return 2;
    default:
      return 1;
  }
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double two_pi = 2.0 * codata::pi;
constexpr int metric_revolutions = 7;

struct Common {
  std::string scenario;
  std::string out;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string format = "csv";
  bool has_seed = false;
  bool has_workers = false;
};

struct FieldMapOptions {
  std::string stage = "guide";
  std::string grid = "41x41";
  double half_width_um = 600.0;
};

struct FitCliOptions {
  std::string trace;
};

struct ShapeCliOptions {
  std::string mode = "keep";
  double fraction = 0.4;
  double orbits = 2.0;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

ScenarioConfig load(const Common& c) {
  std::optional<std::uint64_t> seed;
  if (c.has_seed) seed = c.seed;
  ScenarioConfig cfg;
  if (!c.scenario.empty()) {
    cfg = parse_scenario(c.scenario, seed);
  } else if (seed) {
    cfg.seed = seed;
  }
  if (c.has_workers) {
    require(c.workers >= 0, ErrorCategory::invalid_input, "--workers must be non-negative");
    cfg.workers = c.workers;
  }
  return cfg;
}

fs::path out_dir(const Common& c) {
  std::string d = c.out;
  if (d.empty()) {
    if (const char* e = std::getenv(output_dir_env); e != nullptr && *e != '\0') d = e;
  }
  if (d.empty()) d = ".";
  std::error_code ec;
  fs::create_directories(d, ec);
  require(!ec, ErrorCategory::io, "cannot create output directory '" + d + "': " + ec.message());
  return d;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  require(static_cast<bool>(f), ErrorCategory::io, "cannot open '" + p.string() + "' for writing");
  f << content;
  f.close();
  require(!f.fail(), ErrorCategory::io, "write to '" + p.string() + "' failed");
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  require(static_cast<bool>(f), ErrorCategory::io, "cannot read '" + p.string() + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, p.string() + ": " + e.what());
  }
}

json stamp(const ScenarioConfig& cfg) {
  json j;
  j["scenario_hash"] = scenario_hash(cfg);
  j["tool_version"] = std::string(tool_version);
  if (cfg.seed) j["seed"] = *cfg.seed;
  return j;
}

std::vector<std::string> stamp_lines(const ScenarioConfig& cfg) {
  std::vector<std::string> l{"scenario_hash=" + scenario_hash(cfg), "tool_version=" + std::string(tool_version)};
  if (cfg.seed) l.push_back("seed=" + std::to_string(*cfg.seed));
  return l;
}

std::string dump(json j, const json& s) {
  for (auto it = s.begin(); it != s.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

double circumference(const ScenarioConfig& cfg) {
  return two_pi * loop_pair_zero_radius(cfg.ring.radius, cfg.ring.separation);
}

// ---- field-map

int axis_index(const Vec3& u) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(std::abs(u[i]) - 1.0) < 1e-12) return i;
  }
  fail(ErrorCategory::geometry, "field-map needs cross-section axes aligned with x, y or z");
}

int field_map_cmd(const Common& c, const FieldMapOptions& o, std::ostream& out) {
  const ScenarioConfig cfg = load(c);
  int n = 0, m = 0;
  char tail = 0;
  require(std::sscanf(o.grid.c_str(), "%dx%d%c", &n, &m, &tail) == 2 && n >= 1 && m >= 1,
          ErrorCategory::invalid_input, "--grid must look like NxM with N, M >= 1, got '" + o.grid + "'");
  require(o.half_width_um > 0.0 && std::isfinite(o.half_width_um), ErrorCategory::invalid_input,
          "--half-width-um must be positive");

  std::unique_ptr<FieldSource> src;
  Vec3 center, u, v;
  if (o.stage == "guide") {
    cfg.guide.validate();
    src = std::make_unique<GuideField>(cfg.guide);
    center = cfg.guide.origin;
    u = cfg.guide.bisector_axis();
    v = cfg.guide.separation_axis;
  } else {
    cfg.ring.validate();
    auto ring = std::make_unique<RingField>(cfg.ring);
    center = cfg.ring.center + cfg.ring.reference * ring->zero_radius();
    u = cfg.ring.reference;
    v = cfg.ring.axis;
    src = std::move(ring);
  }
  const double hw = o.half_width_um * units::um;
  GridSpec grid;
  const int iu = axis_index(u), iv = axis_index(v);
  grid.lower = center;
  grid.upper = center;
  grid.lower[iu] -= hw;
  grid.upper[iu] += hw;
  grid.lower[iv] -= hw;
  grid.upper[iv] += hw;
  grid.count = {1, 1, 1};
  grid.count[static_cast<std::size_t>(iu)] = n;
  grid.count[static_cast<std::size_t>(iv)] = m;
  const auto rows = field_map(grid, *src, 0.0, cfg.workers);

  const fs::path dir = out_dir(c);
  fs::path path;
  if (c.format == "json") {
    json pts = json::array();
    for (const auto& r : rows) {
      pts.push_back({r.position.x, r.position.y, r.position.z, r.B.x, r.B.y, r.B.z, norm(r.B)});
    }
    json j{{"stage", o.stage},
           {"columns", {"x_m", "y_m", "z_m", "Bx_T", "By_T", "Bz_T", "Bnorm_T"}},
           {"rows", pts}};
    path = dir / ("field_map_" + o.stage + ".json");
    write_file(path, dump(j, stamp(cfg)));
  } else {
    std::ostringstream os;
    auto meta = stamp_lines(cfg);
    meta.push_back("stage=" + o.stage);
    write_field_map_csv(os, rows, meta);
    path = dir / ("field_map_" + o.stage + ".csv");
    write_file(path, os.str());
  }
  out << "wrote " << path.string() << " (" << rows.size() << " points)\n";
  return 0;
}

// ---- characterize

json characterize_json(const ScenarioConfig& cfg) {
  const PhysicalConstants& k = cfg.constants;
  TrapOptions opts;
  opts.thermal_energy = k.kB() * cfg.cloud.T_trans;
  // straight wires at the local spacing; the taper only matters away from the origin
  GuideGeometry guide = cfg.guide;
  guide.taper.reset();
  const TrapCharacterization g = characterize_trap(guide, k, opts);
  const TrapCharacterization full = characterize_trap(guide, k.with_moment(codata::muB), opts);
  const TrapCharacterization half = characterize_trap(guide, k.with_moment(0.5 * codata::muB), opts);
  const TrapCharacterization r = characterize_trap(cfg.ring, k, opts);
  const double C = circumference(cfg);
  const double g_acc = cfg.gravity ? k.g_grav() : 0.0;
  const double v0 = cfg.cloud.mean_speed;
  const double v_entry = cfg.cloud.placement == CloudPlacement::ring
                             ? std::abs(v0)
                             : std::sqrt(v0 * v0 + 2.0 * g_acc * std::max(cfg.cloud.height, 0.0));
  const InterferometerMetrics single = interferometer_metrics(metric_revolutions, cfg.ring.radius,
                                                              AreaConvention::single_path);
  const InterferometerMetrics pair = interferometer_metrics(metric_revolutions, cfg.ring.radius);

  json j;
  j["guide"] = {{"gradient_T_m", g.gradient_center},
                {"gradient_G_cm", units::to_gauss_per_cm(g.gradient_center)},
                {"saddle_field_T", g.saddle_field},
                {"ideal_saddle_field_T", g.ideal_saddle_field},
                {"saddle_relative_error", g.saddle_field / g.ideal_saddle_field - 1.0},
                {"mu_m_J_T", g.mu_m},
                {"depth_K", g.depth_kelvin},
                {"depth_bohr_K", full.depth_kelvin},
                {"depth_half_bohr_K", half.depth_kelvin},
                {"effective_frequency_Hz", g.effective_frequency},
                {"loss_radius_m", g.loss_radius}};
  j["ring"] = {{"radius_m", cfg.ring.radius},
               {"gradient_G_cm", units::to_gauss_per_cm(r.gradient_center)},
               {"depth_K", r.depth_kelvin},
               {"zero_radius_m", C / two_pi},
               {"circumference_m", C}};
  j["orbit"] = {{"entry_speed_m_s", v_entry}, {"period_s", v_entry > 0.0 ? C / v_entry : 0.0}};
  j["metrics"] = {{"revolutions", metric_revolutions},
                  {"path_m", pair.path},
                  {"single_area_m2", single.area},
                  {"sagnac_pair_area_m2", pair.area}};
  return j;
}

std::string characterize_text(const json& j) {
  const json& g = j["guide"];
  const json& r = j["ring"];
  std::string s;
  s += "guide cross-section\n";
  s += fmt("  gradient            %.1f G/cm\n", g["gradient_G_cm"].get<double>());
  s += fmt("  saddle field        %.2f G (ideal %.2f G, rel. error %.2e)\n",
           units::to_gauss(g["saddle_field_T"].get<double>()), units::to_gauss(g["ideal_saddle_field_T"].get<double>()),
           g["saddle_relative_error"].get<double>());
  s += fmt("  depth               %.3f mK (configured moment)\n", g["depth_K"].get<double>() / units::mK);
  s += fmt("  depth, mu_m = muB   %.3f mK\n", g["depth_bohr_K"].get<double>() / units::mK);
  s += fmt("  depth, mu_m = muB/2 %.3f mK\n", g["depth_half_bohr_K"].get<double>() / units::mK);
  s += "  (mu_m = |gF mF| muB; the F=1, mF=-1 state has muB/2)\n";
  s += fmt("  effective frequency %.1f Hz (linear well at the transverse thermal energy)\n",
           g["effective_frequency_Hz"].get<double>());
  s += fmt("  loss radius b0      %.3f um\n", g["loss_radius_m"].get<double>() / units::um);
  s += "ring cross-section\n";
  s += fmt("  gradient            %.1f G/cm\n", r["gradient_G_cm"].get<double>());
  s += fmt("  depth               %.3f mK\n", r["depth_K"].get<double>() / units::mK);
  s += fmt("  zero radius         %.4f mm (circumference %.2f mm)\n", r["zero_radius_m"].get<double>() / units::mm,
           r["circumference_m"].get<double>() / units::mm);
  s += fmt("orbit: entry speed %.4f m/s, period %.2f ms\n", j["orbit"]["entry_speed_m_s"].get<double>(),
           j["orbit"]["period_s"].get<double>() / units::ms);
  s += fmt("metrics (%d revolutions): path %.3f m, sagnac-pair area %.0f mm^2\n", metric_revolutions,
           j["metrics"]["path_m"].get<double>(), j["metrics"]["sagnac_pair_area_m2"].get<double>() / 1e-6);
  return s;
}

int characterize_cmd(const Common& c, std::ostream& out) {
  const ScenarioConfig cfg = load(c);
  const json j = characterize_json(cfg);
  const fs::path dir = out_dir(c);
  const std::string text = characterize_text(j);
  write_file(dir / "characterize.json", dump(j, stamp(cfg)));
  std::string head;
  for (const auto& l : stamp_lines(cfg)) head += "# " + l + "\n";
  write_file(dir / "characterize.txt", head + text);
  if (c.format == "csv") {
    std::string csv = head + "quantity,value,unit\n";
    auto row = [&](const char* q, double v, const char* u) { csv += fmt("%s,%.17g,%s\n", q, v, u); };
    row("guide_gradient", j["guide"]["gradient_G_cm"], "G/cm");
    row("guide_saddle_field", units::to_gauss(j["guide"]["saddle_field_T"]), "G");
    row("guide_depth", j["guide"]["depth_K"].get<double>() / units::mK, "mK");
    row("guide_depth_bohr", j["guide"]["depth_bohr_K"].get<double>() / units::mK, "mK");
    row("guide_depth_half_bohr", j["guide"]["depth_half_bohr_K"].get<double>() / units::mK, "mK");
    row("effective_frequency", j["guide"]["effective_frequency_Hz"], "Hz");
    row("loss_radius", j["guide"]["loss_radius_m"].get<double>() / units::um, "um");
    row("ring_gradient", j["ring"]["gradient_G_cm"], "G/cm");
    row("ring_depth", j["ring"]["depth_K"].get<double>() / units::mK, "mK");
    row("circumference", j["ring"]["circumference_m"], "m");
    row("entry_speed", j["orbit"]["entry_speed_m_s"], "m/s");
    row("period", j["orbit"]["period_s"], "s");
    row("path", j["metrics"]["path_m"], "m");
    row("sagnac_pair_area", j["metrics"]["sagnac_pair_area_m2"], "m^2");
    write_file(dir / "characterize.csv", csv);
  }
  out << text;
  return 0;
}

// ---- simulate / shape

struct Run {
  ScenarioResult result;
  ProbeTrace trace;
};

Run simulate(const ScenarioConfig& cfg) {
  cfg.require_seed();
  Run run;
  run.result = run_scenario(cfg);
  const ScenarioResult& r = run.result;
  ProbeConfig p = cfg.probe;
  if (p.delays.empty()) {
    const double ref = p.auto_reference ? r.reference.first_pass - 0.5 * p.duration : p.reference;
    const double first = 0.5 * r.reference.period;
    const double last = cfg.t_end - ref - p.duration;
    require(last > first, ErrorCategory::schedule, "t_end leaves no room for probe delays");
    p.delays = delay_grid(first, last, 5e-4);
  }
  run.trace = probe_trace(r, p);
  return run;
}

std::string trace_text(const Run& run, const ScenarioConfig& cfg, const std::string& format) {
  const ProbeTrace& t = run.trace;
  if (format == "json") {
    json j{{"atoms", t.atoms}, {"reference_s", t.reference}, {"delay_s", t.delay}, {"signal", t.signal}};
    return dump(j, stamp(cfg));
  }
  auto meta = stamp_lines(cfg);
  meta.push_back("atoms=" + std::to_string(t.atoms));
  meta.push_back(fmt("reference_s=%.17g", t.reference));
  std::ostringstream os;
  write_probe_csv(os, t, meta);
  return os.str();
}

std::string summary_text(const Run& run, const ScenarioConfig& cfg) {
  std::ostringstream os;
  write_summary_json(os, run.result);
  return dump(json::parse(os.str()), stamp(cfg));
}

int simulate_cmd(const Common& c, std::ostream& out) {
  const ScenarioConfig cfg = load(c);
  const Run run = simulate(cfg);
  const fs::path dir = out_dir(c);
  const fs::path trace = dir / ("trace." + c.format);
  write_file(trace, trace_text(run, cfg, c.format));
  write_file(dir / "summary.json", summary_text(run, cfg));
  const ReferenceOrbit& o = run.result.reference;
  out << fmt("simulated %zu atoms (%zu failures); reference period %.3f ms, mean speed %.4f m/s\n",
             run.result.atoms.size(), run.result.failures, o.period / units::ms, o.mean_speed);
  out << "wrote " << trace.string() << " and " << (dir / "summary.json").string() << '\n';
  return 0;
}

std::vector<double> ring_speeds(const Snapshot& s) {
  std::vector<double> v;
  for (const auto& a : s.atoms) {
    if (a.failed || a.cause != LossCause::none || !a.released || a.stage != Stage::ring) continue;
    v.push_back(a.v_equivalent);
  }
  return v;
}

json speed_json(const std::vector<double>& v, const PhysicalConstants& k) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(std::max<std::size_t>(v.size(), 1));
  const DistributionStats s = distribution_stats(v, mean, k);
  return {{"atoms", v.size()},
          {"mean_m_s", s.mean},
          {"sigma_m_s", s.sigma_v},
          {"temperature_K", s.temperature},
          {"speed_ratio", s.speed_ratio}};
}

json azimuth_histogram(const Snapshot& s, int bins) {
  std::vector<double> phi;
  for (const auto& a : s.atoms) {
    if (!a.failed && a.cause == LossCause::none && a.released && a.stage == Stage::ring) phi.push_back(a.phi);
  }
  require(phi.size() >= 2, ErrorCategory::statistics, "too few atoms left for an azimuth histogram");
  const double c = median(phi);
  const double w = 2.5 * robust_sigma(phi);
  std::vector<int> h(static_cast<std::size_t>(bins), 0);
  for (double p : phi) {
    const int b = static_cast<int>(std::floor((p - c + w) / (2.0 * w) * bins));
    if (b >= 0 && b < bins) ++h[static_cast<std::size_t>(b)];
  }
  return {{"center_rad", c}, {"half_width_rad", w}, {"counts", h}};
}

int shape_cmd(const Common& c, const ShapeCliOptions& o, std::ostream& out) {
  const ScenarioConfig base = load(c);
  base.require_seed();
  ScenarioConfig cfg = base;
  const ReferenceOrbit ref = reference_orbit(cfg);
  if (cfg.shaping.empty()) {
    ShapingPulse p;
    p.t = ref.first_pass + o.orbits * ref.period;
    p.fraction = o.fraction;
    p.mode = o.mode == "remove" ? ShapeMode::remove : ShapeMode::keep;
    require(p.t < cfg.t_end, ErrorCategory::schedule, "shaping pulse falls after t_end");
    cfg.shaping.push_back(p);
  }
  const ShapingPulse pulse = cfg.shaping.front();
  const double before = std::max(pulse.t - 1e-4, 0.0);
  const double after = std::min(pulse.t + ref.period, cfg.t_end);
  cfg.snapshots.push_back(before);
  cfg.snapshots.push_back(after);
  std::sort(cfg.snapshots.begin(), cfg.snapshots.end());
  cfg.snapshots.erase(std::unique(cfg.snapshots.begin(), cfg.snapshots.end()), cfg.snapshots.end());

  const Run run = simulate(cfg);
  const auto snap_at = [&](double t) -> const Snapshot& {
    for (const auto& s : run.result.snapshots) {
      if (s.t == t) return s;
    }
    fail(ErrorCategory::numeric, "missing snapshot");
  };
  const Snapshot& s0 = snap_at(before);
  const Snapshot& s1 = snap_at(after);
  std::size_t removed = 0;
  for (const auto& a : run.result.atoms) removed += a.state.cause == LossCause::removed_by_shaping ? 1 : 0;

  json j;
  j["pulse"] = {{"t_s", pulse.t},
                {"fraction", pulse.fraction},
                {"mode", pulse.mode == ShapeMode::keep ? "keep" : "remove"}};
  j["shaped_scenario_hash"] = scenario_hash(cfg);
  j["removed"] = removed;
  j["before"] = speed_json(ring_speeds(s0), cfg.constants);
  j["before"]["t_s"] = before;
  j["after"] = speed_json(ring_speeds(s1), cfg.constants);
  j["after"]["t_s"] = after;
  j["after"]["azimuth_histogram"] = azimuth_histogram(s1, 15);

  const fs::path dir = out_dir(c);
  write_file(dir / "shape.json", dump(j, stamp(base)));
  write_file(dir / ("trace_shaped." + c.format), trace_text(run, cfg, c.format));
  write_file(dir / "summary_shaped.json", summary_text(run, cfg));
  out << fmt("shaping at %.2f ms removed %zu atoms; speed ratio %.1f -> %.1f\n", pulse.t / units::ms, removed,
             j["before"]["speed_ratio"].get<double>(), j["after"]["speed_ratio"].get<double>());
  return 0;
}

// ---- fit

ProbeTrace read_trace(const fs::path& p, std::string& bytes) {
  bytes = read_file(p);
  if (p.extension() == ".json") {
    ProbeTrace t;
    try {
      const json j = json::parse(bytes);
      t.delay = j.at("delay_s").get<std::vector<double>>();
      t.signal = j.at("signal").get<std::vector<double>>();
      t.scenario_hash = j.value("scenario_hash", "");
      t.seed = j.value("seed", std::uint64_t{0});
      t.atoms = j.value("atoms", std::size_t{0});
      t.reference = j.value("reference_s", 0.0);
    } catch (const json::exception& e) {
      fail(ErrorCategory::parse, p.string() + ": " + e.what());
    }
    require(t.delay.size() == t.signal.size(), ErrorCategory::parse, p.string() + ": delay and signal lengths differ");
    return t;
  }
  std::istringstream is(bytes);
  return read_probe_csv(is).trace;
}

int fit_cmd(const Common& c, const FitCliOptions& o, std::ostream& out) {
  const ScenarioConfig cfg = load(c);
  const fs::path dir = out_dir(c);
  const fs::path path = o.trace.empty() ? dir / ("trace." + c.format) : fs::path(o.trace);
  std::string bytes;
  const ProbeTrace trace = read_trace(path, bytes);
  const std::string hash = scenario_hash(cfg);
  require(trace.scenario_hash == hash, ErrorCategory::invalid_input,
          "trace " + path.string() + " was produced by scenario " +
              (trace.scenario_hash.empty() ? std::string("<unknown>") : trace.scenario_hash) + ", not " + hash);

  const double C = circumference(cfg);
  const PeakAnalysis pa = analyze_peaks(trace);
  PeakTrainParams fixed;
  fixed.v_bar = C / pa.period;
  fixed.probe_width = std::hypot(cfg.probe.duration, cfg.probe.window / fixed.v_bar) / std::sqrt(12.0);
  FitOptions fo;
  fo.circumference = C;
  const FitResult f = fit_peak_train(trace, {}, fo, fixed);

  std::ostringstream os;
  write_fit_json(os, f, fnv1a_hex(bytes), cfg.constants.mass());
  json j = json::parse(os.str());
  j["circumference_m"] = C;
  j["trace_file"] = path.filename().string();
  write_file(dir / "fit.json", dump(j, stamp(cfg)));
  if (c.format == "csv") {
    std::string csv;
    for (const auto& l : stamp_lines(cfg)) csv += "# " + l + "\n";
    csv += "parameter,value,sigma\n";
    const PeakTrainParams& p = f.params;
    const std::map<std::string, double> value{{"N0", p.N0},         {"T_orb", p.T_orb}, {"sigma0", p.sigma0},
                                              {"sigma_v", p.sigma_v}, {"v_bar", p.v_bar}, {"tau", p.tau},
                                              {"beta", p.beta},       {"tau_fill", p.tau_fill}};
    for (std::size_t i = 0; i < f.names.size(); ++i) {
      const auto it = value.find(f.names[i]);
      csv += fmt("%s,%.17g,%.17g\n", f.names[i].c_str(), it == value.end() ? std::nan("") : it->second, f.sigma[i]);
    }
    csv += fmt("azimuthal_temperature_K,%.17g,\n", j["azimuthal_temperature_K"].get<double>());
    write_file(dir / "fit.csv", csv);
  }
  const PeakTrainParams& p = f.params;
  out << fmt("fit %s after %d iterations: T_orb %.3f ms, tau %.1f ms, T_az %.2f uK, residual %.4g\n",
             f.converged ? "converged" : "did not converge", f.iterations, p.T_orb / units::ms, p.tau / units::ms,
             azimuthal_temperature(p.sigma_v, cfg.constants.mass()) / units::uK, f.residual_norm);
  require(f.converged, ErrorCategory::accuracy, "fit did not converge: " + f.message);
  return 0;
}

// ---- report

struct Row {
  std::string quantity;
  std::string unit;
  std::optional<double> value;
  double reference;
};

int report_cmd(const Common& c, std::ostream& out) {
  const fs::path dir = out_dir(c);
  std::vector<std::pair<std::string, json>> files;
  for (const char* name : {"characterize.json", "summary.json", "fit.json", "shape.json"}) {
    if (fs::exists(dir / name)) files.emplace_back(name, read_json(dir / name));
  }
  require(!files.empty(), ErrorCategory::io, "no outputs to report in '" + dir.string() + "'");
  std::string hash = files.front().second.value("scenario_hash", "");
  std::string version = files.front().second.value("tool_version", "");
  if (!c.scenario.empty() || c.has_seed) {
    const std::string expected = scenario_hash(load(c));
    require(hash == expected, ErrorCategory::invalid_input,
            "scenario hash mismatch: " + files.front().first + " has " + hash + ", scenario has " + expected);
  }
  for (const auto& [name, j] : files) {
    const std::string h = j.value("scenario_hash", "");
    require(h == hash, ErrorCategory::invalid_input,
            "scenario hash mismatch: " + files.front().first + " has " + hash + ", " + name + " has " + h);
    const std::string v = j.value("tool_version", "");
    require(v == version, ErrorCategory::invalid_input,
            "tool version mismatch: " + files.front().first + " has " + version + ", " + name + " has " + v);
  }
  auto find = [&](const std::string& n) -> const json* {
    for (const auto& [name, j] : files) {
      if (name == n) return &j;
    }
    return nullptr;
  };

  std::vector<Row> rows{{"guide gradient", "G/cm", {}, 1800.0},
                        {"trap depth (mu_m = muB)", "mK", {}, 2.5},
                        {"orbital period", "ms", {}, 81.0},
                        {"mean orbital speed", "cm/s", {}, 85.0},
                        {"1/e lifetime", "ms", {}, 180.0},
                        {"azimuthal temperature", "uK", {}, 3.4},
                        {"speed ratio after shaping", "", {}, 125.0},
                        {"path length, 7 revolutions", "m", {}, 0.5},
                        {"sagnac-pair area, 7 revolutions", "mm^2", {}, 4400.0}};
  if (const json* j = find("characterize.json")) {
    rows[0].value = (*j)["guide"]["gradient_G_cm"].get<double>();
    rows[1].value = (*j)["guide"]["depth_bohr_K"].get<double>() / units::mK;
    rows[7].value = (*j)["metrics"]["path_m"].get<double>();
    rows[8].value = (*j)["metrics"]["sagnac_pair_area_m2"].get<double>() / 1e-6;
  }
  if (const json* j = find("summary.json")) {
    rows[2].value = (*j)["reference_orbit"]["period_s"].get<double>() / units::ms;
    rows[3].value = (*j)["reference_orbit"]["mean_speed_m_s"].get<double>() * 100.0;
  }
  if (const json* j = find("fit.json")) {
    rows[4].value = (*j)["params"]["tau_s"].get<double>() / units::ms;
    rows[5].value = (*j)["azimuthal_temperature_K"].get<double>() / units::uK;
  }
  if (const json* j = find("shape.json")) rows[6].value = (*j)["after"]["speed_ratio"].get<double>();

  std::string text = "scenario " + hash + ", " + version + "\nsources:";
  for (const auto& f : files) text += " " + f.first;
  text += "\n\n";
  text += fmt("%-34s %12s %12s %8s  %s\n", "quantity", "this run", "reference", "ratio", "unit");
  for (const auto& r : rows) {
    if (r.value) {
      text += fmt("%-34s %12.4g %12.4g %8.3f  %s\n", r.quantity.c_str(), *r.value, r.reference,
                  *r.value / r.reference, r.unit.c_str());
    } else {
      text += fmt("%-34s %12s %12.4g %8s  %s\n", r.quantity.c_str(), "-", r.reference, "-", r.unit.c_str());
    }
  }
  if (const json* j = find("fit.json")) {
    text += fmt("\nfit: %s, %d iterations, residual %.4g\n", (*j)["converged"].get<bool>() ? "converged" : "NOT converged",
                (*j)["iterations"].get<int>(), (*j)["residual_norm"].get<double>());
  }
  if (const json* j = find("summary.json")) {
    text += "losses:";
    for (auto it = (*j)["counts"].begin(); it != (*j)["counts"].end(); ++it) {
      text += " " + it.key() + "=" + std::to_string(it.value().get<long>());
    }
    text += "\n";
  }
  write_file(dir / "report.txt", text);
  if (c.format == "json") {
    json j = json::array();
    for (const auto& r : rows) {
      j.push_back({{"quantity", r.quantity}, {"unit", r.unit}, {"reference", r.reference},
                   {"value", r.value ? json(*r.value) : json(nullptr)}});
    }
    write_file(dir / "report.json", json{{"scenario_hash", hash}, {"tool_version", version}, {"rows", j}}.dump(2) + "\n");
  }
  out << text;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neutral-atom magnetic storage ring simulator", "ringsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version));
  Common c;
  FieldMapOptions fm;
  FitCliOptions fo;
  ShapeCliOptions so;

  auto common = [&](CLI::App* s) {
    s->add_option("--scenario", c.scenario, "scenario file")->check(CLI::ExistingFile);
    s->add_option("--out", c.out, std::string("output directory (default: $") + output_dir_env + " or .)");
    s->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) {
      c.seed = v;
      c.has_seed = true;
    },
                                          "seed override");
    s->add_option_function<int>("--workers", [&](const int& v) {
      c.workers = v;
      c.has_workers = true;
    },
                                "worker threads (0: all); never changes results");
    s->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };
  CLI::App* s_map = app.add_subcommand("field-map", "field on a cross-section grid");
  common(s_map);
  s_map->add_option("--stage", fm.stage, "guide or ring")->check(CLI::IsMember({"guide", "ring"}));
  s_map->add_option("--grid", fm.grid, "NxM points");
  s_map->add_option("--half-width-um", fm.half_width_um, "half width of the grid in um");
  CLI::App* s_char = app.add_subcommand("characterize", "gradient, saddle, depth and loss radius");
  common(s_char);
  CLI::App* s_sim = app.add_subcommand("simulate", "ensemble run, probe trace and summary");
  common(s_sim);
  CLI::App* s_fit = app.add_subcommand("fit", "peak-train fit of a probe trace");
  common(s_fit);
  s_fit->add_option("--trace", fo.trace, "trace file (default: <out>/trace.<format>)");
  CLI::App* s_shape = app.add_subcommand("shape", "simulate with a velocity-selection pulse");
  common(s_shape);
  s_shape->add_option("--mode", so.mode, "keep or remove")->check(CLI::IsMember({"keep", "remove"}));
  s_shape->add_option("--fraction", so.fraction, "window as a fraction of the FWHM")->check(CLI::Range(0.0, 10.0));
  s_shape->add_option("--orbits", so.orbits, "pulse time in orbits after the first probe pass")
      ->check(CLI::NonNegativeNumber);
  CLI::App* s_report = app.add_subcommand("report", "combined summary of the files in the output directory");
  common(s_report);

  std::vector<const char*> argv{"ringsim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "ERROR:parse:" << e.what() << '\n';
    return 1;
  }

  try {
    if (s_map->parsed()) return field_map_cmd(c, fm, out);
    if (s_char->parsed()) return characterize_cmd(c, out);
    if (s_sim->parsed()) return simulate_cmd(c, out);
    if (s_fit->parsed()) return fit_cmd(c, fo, out);
    if (s_shape->parsed()) return shape_cmd(c, so, out);
    return report_cmd(c, out);
  } catch (const Error& e) {
    err << "ERROR:" << to_string(e.category()) << ':' << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "ERROR:numeric:" << e.what() << '\n';
    return 2;
  }
}

}  // namespace ringsim
