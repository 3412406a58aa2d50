#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "ringsim/cli/scenario_file.hpp"
#include "ringsim/core/error.hpp"
#include "ringsim/core/rng.hpp"
#include "ringsim/dynamics/majorana.hpp"
#include "ringsim/ensemble/scenario.hpp"

using namespace ringsim;

namespace {

ScenarioConfig ring_start(std::size_t atoms, double t_end, std::uint64_t seed = 1) {
  ScenarioConfig c;
  c.seed = seed;
  c.cloud.placement = CloudPlacement::ring;
  c.cloud.atoms = atoms;
  c.cloud.sigma_long = 1e-3;
  c.cloud.T_long = 3.4e-6;
  c.cloud.mean_speed = 0.8857;
  c.cloud.sigma_trans = 10e-6;
  c.t_end = t_end;
  return c;
}

ScenarioConfig lossless(ScenarioConfig c) {
  c.losses.tau_background = 0.0;
  c.losses.majorana = MajoranaModel::off;
  c.losses.junction = false;
  return c;
}

std::string summary(const ScenarioResult& r) {
  std::ostringstream os;
  write_summary_json(os, r);
  return os.str();
}

double energy(const ScenarioModel& m, const AtomState& s) {
  Propagator p(m.field(s.stage), m.config().constants, m.gravity(), m.config().integrator);
  p.prime(s);
  return p.energy(s);
}

}  // namespace

TEST_CASE("cloud sampling") {
  const PhysicalConstants c = PhysicalConstants::rubidium87();
  CloudSpec spec;
  spec.atoms = 20000;
  spec.T_long = 0.0;
  spec.T_trans = 0.0;
  spec.mean_speed = 0.5;
  CloudFrame frame;
  auto atoms = sample_cloud(spec, frame, c, 3);
  for (const auto& a : atoms) {
    CHECK(a.velocity.x == 0.0);
    CHECK(a.velocity.y == 0.0);
    CHECK(a.velocity.z == -0.5);
  }
  spec.T_long = 3.4e-6;
  atoms = sample_cloud(spec, frame, c, 3);
  double s1 = 0, s2 = 0;
  for (const auto& a : atoms) {
    const double v = -a.velocity.z - 0.5;
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(atoms.size());
  const double sv = std::sqrt(s2 / n - (s1 / n) * (s1 / n));
  CHECK(sv == doctest::Approx(std::sqrt(c.kB() * 3.4e-6 / c.mass())).epsilon(3.0 / std::sqrt(n)));
  // atom i depends only on (seed, i)
  spec.atoms = 10;
  const auto few = sample_cloud(spec, frame, c, 3);
  for (std::size_t i = 0; i < few.size(); ++i) CHECK(few[i].position == atoms[i].position);
}

TEST_CASE("ring clouds carry a common height-zero speed") {
  ScenarioConfig cfg = ring_start(200, 0.1);
  cfg.cloud.T_long = 0.0;
  cfg.cloud.sigma_long = 3e-3;
  const ScenarioModel m(cfg);
  const double g = cfg.constants.g_grav();
  for (const auto& s : m.sample(0)) {
    const double v = dot(s.velocity, m.azimuthal_direction(s.position));
    CHECK(v * v + 2.0 * g * m.gravity().height(s.position) == doctest::Approx(0.8857 * 0.8857).epsilon(1e-12));
    CHECK(s.stage == Stage::ring);
  }
}

TEST_CASE("entry speed and orbital period of the reference atom") {
  ScenarioConfig cfg;
  cfg.seed = 1;
  const ReferenceOrbit o = reference_orbit(cfg);
  CHECK(std::abs(o.entry_speed - std::sqrt(2.0 * cfg.constants.g_grav() * 0.04)) < 1e-4);
  CHECK(std::abs(o.entry_speed - 0.8857) < 1e-4);
  CHECK(o.period == doctest::Approx(o.circumference / o.mean_speed).epsilon(0.02));
  CHECK(o.circumference == doctest::Approx(2.0 * std::numbers::pi * ScenarioModel(cfg).ring_zero_radius()));
}

TEST_CASE("without losses the count is constant and energy is conserved over 7 orbits") {
  ScenarioConfig cfg = lossless(ring_start(40, 0.5));
  cfg.snapshots = {0.1, 0.3};
  const ScenarioModel m(cfg);
  const auto initial = m.sample(0);
  const ScenarioResult r = run_scenario(cfg);
  REQUIRE(r.atoms.size() == initial.size());
  CHECK(r.failures == 0);
  for (const auto& snap : r.snapshots) {
    for (const auto& a : snap.atoms) CHECK(a.cause == LossCause::none);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    REQUIRE(r.atoms[i].state.alive());
    const double e0 = energy(m, initial[i]);
    const double e1 = energy(m, r.atoms[i].state);
    worst = std::max(worst, std::abs(e1 - e0) / std::abs(e0));
  }
  CHECK(worst < 1e-4);
  CHECK(r.atoms[0].crossings.size() >= 6);
}

TEST_CASE("serial and parallel kernels agree bitwise for any worker count") {
  ScenarioConfig cfg = ring_start(48, 0.2, 9);
  cfg.losses.tau_background = 0.1;
  cfg.snapshots = {0.05, 0.15};
  cfg.shaping = {{0.1, 0.4, ShapeMode::keep}};
  cfg.workers = 1;
  const std::string a = summary(run_scenario(cfg, Kernel::serial));
  cfg.workers = 3;
  const std::string b = summary(run_scenario(cfg, Kernel::parallel));
  cfg.workers = 0;
  const std::string c = summary(run_scenario(cfg, Kernel::parallel));
  CHECK(a == b);
  CHECK(a == c);
  cfg.seed = 10;
  CHECK(summary(run_scenario(cfg)) != a);
}

TEST_CASE("loss bookkeeping conserves atoms") {
  ScenarioConfig cfg = ring_start(100, 0.3, 4);
  cfg.losses.tau_background = 0.15;
  cfg.cloud.T_trans = 400e-6;  // hot enough for some barrier losses
  cfg.snapshots = {0.1, 0.2};
  cfg.shaping = {{0.15, 0.5, ShapeMode::remove}};
  const ScenarioResult r = run_scenario(cfg);
  const auto j = nlohmann::json::parse(summary(r));
  std::size_t total = 0;
  for (const auto& [k, v] : j["counts"].items()) total += v.get<std::size_t>();
  CHECK(total + r.failures == cfg.cloud.atoms);
  CHECK(j["counts"]["background_gas"].get<std::size_t>() > 0);
  CHECK(j["counts"]["removed_by_shaping"].get<std::size_t>() > 0);
  for (const auto& s : r.snapshots) CHECK(s.atoms.size() == cfg.cloud.atoms);
  const auto& surv = j["survival"]["fraction"];
  CHECK(surv.size() == 101);
  for (std::size_t k = 1; k < surv.size(); ++k) CHECK(surv[k].get<double>() <= surv[k - 1].get<double>());
}

TEST_CASE("background loss lifetime is recovered from the survival curve") {
  ScenarioConfig cfg = lossless(ring_start(3000, 0.36, 5));
  cfg.losses.tau_background = 0.18;
  const ScenarioResult r = run_scenario(cfg);
  std::vector<double> t, s;
  std::size_t events = 0;
  for (const auto& a : r.atoms) events += a.state.cause == LossCause::background_gas ? 1 : 0;
  for (int k = 0; k <= 36; ++k) {
    const double tk = 0.01 * k;
    std::size_t alive = 0;
    for (const auto& a : r.atoms) alive += (a.state.alive() || a.state.t > tk) ? 1 : 0;
    t.push_back(tk);
    s.push_back(static_cast<double>(alive) / static_cast<double>(r.atoms.size()));
  }
  const auto [tau, sigma] = fit_survival_lifetime(t, s, r.atoms.size(), events, 0.05);
  CHECK(tau == doctest::Approx(0.18).epsilon(0.05));
  CHECK(sigma > 0.0);
  for (const auto& a : r.atoms) {
    if (a.state.cause == LossCause::background_gas) CHECK(a.state.t == doctest::Approx(a.background_time));
  }
}

TEST_CASE("shaping windows") {
  std::vector<double> x;
  for (int i = 0; i < 2001; ++i) x.push_back(std::erf((i - 1000) / 1000.0 * 2.0) * 0.01);
  SUBCASE("keep and remove partition the input") {
    const auto keep = shape_velocity(x, 0.4, ShapeMode::keep);
    const auto remove = shape_velocity(x, 0.4, ShapeMode::remove);
    REQUIRE(keep.survives.size() == x.size());
    std::size_t kept = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(keep.survives[i] != remove.survives[i]);
      kept += keep.survives[i] ? 1 : 0;
    }
    CHECK(kept + keep.removed == x.size());
    CHECK(keep.removed == x.size() - remove.removed);
    CHECK(keep.half_window == doctest::Approx(0.2 * keep.fwhm));
  }
  SUBCASE("a window wider than the cloud keeps everyone") {
    const auto all = shape_velocity(x, 100.0, ShapeMode::keep);
    CHECK(all.removed == 0);
  }
  SUBCASE("robust spread of a Gaussian sample") {
    auto rng = substream(8, 0);
    std::vector<double> g(50000);
    for (double& v : g) v = 2.0 + 0.5 * normal(rng);
    CHECK(robust_sigma(g) == doctest::Approx(0.5).epsilon(0.02));
    CHECK(median(g) == doctest::Approx(2.0).epsilon(0.01));
  }
}

TEST_CASE("removing the cloud center leaves a double-peaked distribution") {
  ScenarioConfig cfg = lossless(ring_start(600, 0.2, 6));
  const double T = 0.072;
  cfg.shaping = {{T, 0.4, ShapeMode::remove}};
  cfg.snapshots = {2.0 * T};
  const ScenarioResult r = run_scenario(cfg);
  std::vector<double> phi;
  for (const auto& a : r.snapshots.front().atoms) {
    if (a.cause == LossCause::none && !a.failed) phi.push_back(a.phi);
  }
  REQUIRE(phi.size() > 300);
  const double c = median(phi);
  const double s = robust_sigma(phi);
  // histogram over +-2.5 sigma
  const int bins = 15;
  std::vector<int> h(bins, 0);
  for (double p : phi) {
    const int b = static_cast<int>(std::floor((p - c + 2.5 * s) / (5.0 * s) * bins));
    if (b >= 0 && b < bins) ++h[b];
  }
  const int center = h[bins / 2];
  const int left = *std::max_element(h.begin(), h.begin() + bins / 2);
  const int right = *std::max_element(h.begin() + bins / 2 + 1, h.end());
  CHECK(left > center);
  CHECK(right > center);
}

TEST_CASE("multi-load schedule") {
  ScenarioConfig cfg;
  cfg.seed = 1;
  const double t_a = fall_time(cfg);
  const ScenarioConfig ml = schedule_multi_load(cfg, 0.3);
  REQUIRE(ml.multiload);
  const RampSchedule s = scenario_schedule(ml);
  int releases = 0;
  for (const auto& e : s.events()) {
    if (e.kind == EventKind::release) {
      ++releases;
      CHECK((e.t == 0.0 || e.t == doctest::Approx(0.3)));
    }
    if (e.kind == EventKind::second_load_arrival) CHECK(e.t == doctest::Approx(0.3 + t_a));
  }
  CHECK(releases == 2);
  double lowest = 1e9;
  for (double t = 0.3; t < 0.3 + t_a + 0.03; t += 1e-4) lowest = std::min(lowest, s.at(t).ring);
  CHECK(lowest == doctest::Approx(2.0));
  CHECK(cfg.ring.current / lowest == doctest::Approx(4.0));  // depth is linear in the current
  CHECK(s.at(0.3 + t_a + 0.1).ring == doctest::Approx(8.0));

  try {
    schedule_multi_load(cfg, 0.1);
    FAIL("expected a schedule conflict");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::schedule);
  }
  CHECK_THROWS_AS(schedule_multi_load(cfg, 0.01), Error);
}

TEST_CASE("probe sees a single atom once per revolution") {
  ScenarioConfig cfg = lossless(ring_start(1, 0.45, 2));
  cfg.cloud.sigma_long = 0.0;
  cfg.cloud.T_long = 0.0;
  cfg.cloud.sigma_trans = 0.0;
  cfg.cloud.T_trans = 0.0;
  const ScenarioResult r = run_scenario(cfg);
  const double T = r.reference.period;
  ProbeConfig pc = cfg.probe;
  pc.delays = delay_grid(0.5 * T, 5.5 * T, 2.5e-4);
  const ProbeTrace tr = probe_trace(r, pc);
  std::vector<int> hits(6, 0);
  for (std::size_t i = 0; i < tr.delay.size(); ++i) {
    CHECK((tr.signal[i] == 0.0 || tr.signal[i] == 1.0));
    if (tr.signal[i] == 0.0) continue;
    const double n = std::round(tr.delay[i] / T);
    CHECK(std::abs(tr.delay[i] - n * T) < 2.5e-3);
    ++hits[static_cast<int>(n)];
  }
  for (int n = 1; n <= 5; ++n) CHECK(hits[n] >= 3);

  pc.destructive = true;
  const ProbeTrace d = probe_trace(r, pc);
  double total = 0.0;
  for (double v : d.signal) total += v;
  CHECK(total == 1.0);
  const auto first = std::find(d.signal.begin(), d.signal.end(), 1.0) - d.signal.begin();
  CHECK(d.delay[first] == tr.delay[std::find(tr.signal.begin(), tr.signal.end(), 1.0) - tr.signal.begin()]);

  ProbeConfig late = pc;
  late.delays = {0.5 * T, 10.0 * T};
  CHECK_THROWS_AS(probe_trace(r, late), Error);
}

TEST_CASE("probe signal is linear in atom number") {
  auto trace_sum = [](std::size_t atoms, std::uint64_t seed) {
    ScenarioConfig cfg = lossless(ring_start(atoms, 0.2, seed));
    const ScenarioResult r = run_scenario(cfg);
    ProbeConfig pc = cfg.probe;
    pc.delays = delay_grid(0.5 * r.reference.period, 1.5 * r.reference.period, 2.5e-4);
    double s = 0.0;
    for (double v : probe_trace(r, pc).signal) s += v;
    return s;
  };
  const double a = trace_sum(200, 21);
  const double b = trace_sum(400, 22);
  // counts are sums over ~10 correlated samples per atom; allow 4 sigma
  CHECK(std::abs(b / a - 2.0) < 4.0 * 2.0 * std::sqrt(10.0 / a + 10.0 / b));
}

TEST_CASE("the junction transfers azimuthal energy into transverse motion") {
  // same seed, same atoms: compare each atom with itself. The mean gain is
  // second order in the per-pass kick, hence the large cloud.
  auto etrans = [](bool junction) {
    ScenarioConfig cfg = lossless(ring_start(2400, 0.145, 3));
    cfg.losses.junction = junction;
    cfg.snapshots = {0.144};
    const ScenarioResult r = run_scenario(cfg);
    return r.snapshots.front().atoms;
  };
  const auto on = etrans(true);
  const auto off = etrans(false);
  REQUIRE(on.size() == off.size());
  std::vector<double> d;
  for (std::size_t i = 0; i < on.size(); ++i) {
    if (on[i].cause != LossCause::none || off[i].cause != LossCause::none || on[i].failed || off[i].failed) continue;
    d.push_back(on[i].e_trans - off[i].e_trans);
  }
  REQUIRE(d.size() > 2000);
  double m = 0, s2 = 0;
  for (double x : d) m += x;
  m /= static_cast<double>(d.size());
  for (double x : d) s2 += (x - m) * (x - m);
  const double err = std::sqrt(s2 / static_cast<double>(d.size() * (d.size() - 1)));
  CHECK(m > 3.0 * err);
}

TEST_CASE("summary export") {
  ScenarioConfig cfg = ring_start(20, 0.1, 12);
  cfg.snapshots = {0.05};
  const ScenarioResult r = run_scenario(cfg);
  const auto j = nlohmann::json::parse(summary(r));
  CHECK(j["scenario_hash"] == scenario_hash(cfg));
  CHECK(j["seed"] == 12);
  CHECK(j["snapshots"].size() == 2);  // requested plus final
  CHECK(j["e_trans_histogram"]["counts"].size() == 40);
  CHECK(j["reference_orbit"]["period_s"].get<double>() > 0.0);
}

TEST_CASE("scenario files") {
  const std::string minimal = "seed = 5\n";
  SUBCASE("defaults") {
    const ScenarioConfig c = parse_scenario_text(minimal);
    CHECK(c.guide.separation == doctest::Approx(840e-6));
    CHECK(c.guide.current == 8.0);
    CHECK(c.ring.radius == doctest::Approx(0.01));
    CHECK(*c.seed == 5);
  }
  SUBCASE("units are normalized") {
    const ScenarioConfig c = parse_scenario_text(
        "seed = 1\n[guide]\nseparation = 840 um\n[cloud]\nT_long = 3.4 uK\nsigma_long = 1 mm\n[ramps]\nt_end = 250 ms\n");
    CHECK(c.guide.separation == doctest::Approx(840e-6));
    CHECK(c.cloud.T_long == doctest::Approx(3.4e-6));
    CHECK(c.cloud.sigma_long == doctest::Approx(1e-3));
    CHECK(c.t_end == doctest::Approx(0.25));
  }
  SUBCASE("wrong unit names the key") {
    try {
      parse_scenario_text("seed = 1\n[guide]\ncurrent = 8 G\n");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::parse);
      CHECK(std::string(e.what()).find("guide.current") != std::string::npos);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("seed is required unless overridden") {
    try {
      parse_scenario_text("[guide]\ncurrent = 8 A\n");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::parse);
      CHECK(std::string(e.what()).find("seed required") != std::string::npos);
    }
    CHECK(*parse_scenario_text("[guide]\ncurrent = 8 A\n", 42).seed == 42);
    CHECK(*parse_scenario_text(minimal, 42).seed == 42);
  }
  SUBCASE("unknown keys, missing units and bad sections are rejected") {
    CHECK_THROWS_AS(parse_scenario_text("seed = 1\n[guide]\ncolour = 3 A\n"), Error);
    CHECK_THROWS_AS(parse_scenario_text("seed = 1\n[guide]\ncurrent = 8\n"), Error);
    CHECK_THROWS_AS(parse_scenario_text("seed = 1\n[nowhere]\n"), Error);
    CHECK_THROWS_AS(parse_scenario_text("seed = 1\n[probe]\ndelays = 0.2 0.1 s\n"), Error);
    CHECK_THROWS_AS(parse_scenario("/nonexistent/scenario.txt"), Error);
  }
  SUBCASE("round trip") {
    ScenarioConfig c = ring_start(123, 0.4, 77);
    c.shaping = {{0.1, 0.4, ShapeMode::keep}, {0.2, 0.3, ShapeMode::remove}};
    c.snapshots = {0.05, 0.15};
    c.probe.delays = {0.01, 0.02, 0.035};
    c.probe.destructive = true;
    c.losses.majorana = MajoranaModel::loss_disk;
    c.cloud.T_long = 1.0 / 3.0 * 1e-5;
    c.cloud.placement = CloudPlacement::guide;
    c = schedule_multi_load(c, 0.3);
    const std::string text = write_scenario(c);
    const ScenarioConfig back = parse_scenario_text(text);
    CHECK(back == c);
    CHECK(write_scenario(back) == text);
  }
  SUBCASE("hash ignores the worker count and tracks physics") {
    ScenarioConfig c = parse_scenario_text(minimal);
    const std::string h = scenario_hash(c);
    c.workers = 4;
    CHECK(scenario_hash(c) == h);
    c.ring.current = 7.0;
    CHECK(scenario_hash(c) != h);
    CHECK(h.size() == 16);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
  }
}
