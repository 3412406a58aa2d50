#include "ringsim/ensemble/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "ringsim/cli/scenario_file.hpp"
#include "ringsim/core/parallel.hpp"
#include "ringsim/core/rng.hpp"
#include "ringsim/dynamics/spin.hpp"

namespace ringsim {

namespace {

constexpr double pi = codata::pi;
constexpr double two_pi = 2.0 * codata::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

double wrap(double a) { return a - two_pi * std::floor((a + pi) / two_pi); }

double release_height(const ScenarioConfig& cfg) { return cfg.cloud.height; }

}  // namespace

GuideGeometry ScenarioConfig::default_guide() {
  GuideGeometry g;
  g.taper = Taper{4e-3, 0.04};
  return g;
}

RingGeometry ScenarioConfig::default_ring() {
  RingGeometry r;
  r.junction = JunctionModel{};
  return r;
}

IntegratorConfig ScenarioConfig::default_integrator() {
  IntegratorConfig c;
  c.dt = 2e-5;
  c.refine_eta = 0.1;
  c.max_refine = 16;
  return c;
}

void ScenarioConfig::validate() const {
  require(seed.has_value(), ErrorCategory::invalid_input, "seed required");
  guide.validate();
  ring.validate();
  require(overlap_offset > 0.0 && overlap_offset < 0.5 * ring.radius, ErrorCategory::invalid_input,
          "overlap offset must lie in (0, R/2)");
  require(escape_factor > 0.0 && escape_factor < 1.0, ErrorCategory::invalid_input,
          "escape factor must lie in (0, 1)");
  require(transfer_time > 0.0, ErrorCategory::invalid_input, "transfer time must be positive");
  require(t_end > 0.0 && std::isfinite(t_end), ErrorCategory::invalid_input, "t_end must be positive");
  require(workers >= 0, ErrorCategory::invalid_input, "workers must be >= 0");
  cloud.validate();
  if (cloud.placement == CloudPlacement::guide) {
    require(cloud.height > 0.0, ErrorCategory::invalid_input, "guide-loaded cloud needs a positive release height");
    require((gravity && constants.g_grav() > 0.0) || cloud.mean_speed > 0.0, ErrorCategory::invalid_input,
            "guide-loaded cloud never reaches the ring without gravity or a downward mean speed");
  }
  probe.validate();
  require(losses.tau_background >= 0.0, ErrorCategory::invalid_input, "background lifetime must be >= 0");
  require(losses.loss_radius >= 0.0, ErrorCategory::invalid_input, "loss radius must be >= 0");
  require(losses.reload_removal_fraction >= 0.0 && losses.reload_removal_fraction <= 1.0,
          ErrorCategory::invalid_input, "reload removal fraction must lie in [0, 1]");
  for (const auto& p : shaping) {
    require(p.t >= 0.0 && p.t <= t_end, ErrorCategory::schedule, "shaping pulse outside [0, t_end]");
    require(p.fraction > 0.0, ErrorCategory::invalid_input, "shaping fraction must be positive");
  }
  for (double t : snapshots) require(t >= 0.0 && t <= t_end, ErrorCategory::schedule, "snapshot outside [0, t_end]");
  if (multiload) {
    require(cloud.placement == CloudPlacement::guide, ErrorCategory::invalid_input,
            "multi-load needs guide-loaded clouds");
    require(multiload->reload_delay > 0.0, ErrorCategory::invalid_input, "reload delay must be positive");
    require(multiload->guide_ramp_on > 0.0, ErrorCategory::invalid_input, "guide ramp-on time must be positive");
    require(multiload->reload_delay <= t_end, ErrorCategory::schedule, "second release after t_end");
  }
  integrator.validate();
  scenario_schedule(*this).validate();
}

std::uint64_t ScenarioConfig::require_seed() const {
  require(seed.has_value(), ErrorCategory::invalid_input, "seed required");
  return *seed;
}

double fall_time(const ScenarioConfig& cfg) {
  if (cfg.cloud.placement == CloudPlacement::ring) return 0.0;
  const double h = release_height(cfg);
  const double v0 = cfg.cloud.mean_speed;
  const double g = cfg.gravity ? cfg.constants.g_grav() : 0.0;
  if (g == 0.0) return h / v0;
  return (std::sqrt(v0 * v0 + 2.0 * g * h) - v0) / g;
}

RampSchedule scenario_schedule(const ScenarioConfig& cfg) {
  const double ig = cfg.guide.current;
  const double ir = cfg.ring.current;
  if (cfg.cloud.placement == CloudPlacement::ring) return RampSchedule::constant(0.0, ir);

  const double t_a = fall_time(cfg);
  RampSchedule s = RampSchedule({{0.0, ig, 0.0}}, {{0.0, EventKind::release}})
                       .then(build_transfer_ramp(cfg.guide, cfg.ring, cfg.transfer_time, TransferMode::load)
                                 .shifted(t_a));
  if (!cfg.multiload) return s;

  const MultiLoadConfig& ml = *cfg.multiload;
  const double t_rel = ml.reload_delay;
  const double t_a2 = t_rel + t_a;
  const double reload_start = t_a2 - ml.reload.ramp_down - ml.reload.plateau;
  require(reload_start > t_rel, ErrorCategory::schedule, "reload ring dip would start before the second release");
  RampSchedule on({{t_rel - ml.guide_ramp_on, 0.0, ir}, {t_rel, ig, ir}}, {{t_rel, EventKind::release}});
  RampSchedule reload = build_transfer_ramp(cfg.guide, cfg.ring, cfg.transfer_time, TransferMode::reload, ml.reload)
                            .shifted(reload_start);
  if (!(on.start() > s.end())) {
    fail(ErrorCategory::schedule, "second-load guide ramp overlaps the first transfer (reload delay too short)");
  }
  RampSchedule out = s.then(on).then(reload);
  out.add_event({t_a2, EventKind::second_load_arrival});
  return out;
}

ScenarioConfig schedule_multi_load(const ScenarioConfig& cfg, double reload_delay) {
  require(reload_delay > cfg.transfer_time, ErrorCategory::invalid_input,
          "reload delay must exceed the transfer duration");
  ScenarioConfig out = cfg;
  MultiLoadConfig ml = cfg.multiload.value_or(MultiLoadConfig{});
  ml.reload_delay = reload_delay;
  out.multiload = ml;
  scenario_schedule(out);
  return out;
}

struct ScenarioModel::Impl {
  RampSchedule schedule;
  GuideField guide_unit;
  RingField ring_unit;
  RingField overlap_unit;
  std::optional<JunctionModifier> junction;
  ScheduledField guide_field;
  ScheduledField ring_field;

  Impl(const ScenarioConfig& cfg, const GuideGeometry& guide, const RingGeometry& ring_unit_geom,
       const RingGeometry& overlap_geom, const RingGeometry& ring)
      : schedule(scenario_schedule(cfg)),
        guide_unit(guide),
        ring_unit(ring_unit_geom),
        overlap_unit(overlap_geom),
        junction(cfg.losses.junction && ring.junction ? std::optional<JunctionModifier>(
                                                            JunctionModifier(ring, *ring.junction))
                                                      : std::nullopt),
        guide_field(schedule, {{&guide_unit, ScheduledField::Channel::guide}}),
        ring_field(schedule,
                   {{&overlap_unit, ScheduledField::Channel::guide}, {&ring_unit, ScheduledField::Channel::ring}},
                   junction ? &*junction : nullptr) {}
};

namespace {

RingGeometry unit_loops(const RingGeometry& ring, double radius) {
  RingGeometry r = ring;
  r.radius = radius;
  r.current = 1.0;
  r.junction.reset();
  return r;
}

}  // namespace

ScenarioModel::ScenarioModel(const ScenarioConfig& cfg) : cfg_(cfg), ring_(cfg.ring) {
  cfg.validate();
  const RingGeometry ring_unit = unit_loops(ring_, ring_.radius);
  const RingGeometry overlap = unit_loops(ring_, ring_.radius + cfg.overlap_offset);
  ring_zero_ = loop_pair_zero_radius(ring_unit.radius, ring_unit.separation);
  overlap_zero_ = loop_pair_zero_radius(overlap.radius, overlap.separation);

  const Vec3 e_down = ring_.in_plane_second();
  tangent_ = ring_.center + ring_.reference * overlap_zero_;
  guide_ = cfg.guide;
  guide_.origin = tangent_;
  guide_.axis = -e_down;
  guide_.separation_axis = ring_.axis;
  guide_.current = -1.0;  // current runs down, continuing the overlap wires

  gravity_.up = -e_down;
  gravity_.origin = cfg.cloud.placement == CloudPlacement::guide ? tangent_ : ring_.center + ring_.reference * ring_zero_;
  gravity_.enabled = cfg.gravity;
  fall_time_ = ringsim::fall_time(cfg);
  impl_ = std::make_unique<Impl>(cfg, guide_, ring_unit, overlap, ring_);
}

ScenarioModel::~ScenarioModel() = default;

const RampSchedule& ScenarioModel::schedule() const { return impl_->schedule; }
const FieldSource& ScenarioModel::guide_field() const { return impl_->guide_field; }
const FieldSource& ScenarioModel::ring_field() const { return impl_->ring_field; }

double ScenarioModel::release_time(int cloud_index) const {
  return cloud_index == 0 ? 0.0 : cfg_.multiload.value().reload_delay;
}

Vec3 ScenarioModel::azimuthal_direction(const Vec3& p) const {
  const double phi = azimuth(p);
  return ring_.in_plane_second() * std::cos(phi) - ring_.reference * std::sin(phi);
}

double ScenarioModel::transverse_offset(const AtomState& s) const {
  if (s.stage == Stage::guide) {
    const Vec3 r = s.position - tangent_;
    return norm(r - guide_.axis * dot(r, guide_.axis));
  }
  const Vec3 r = s.position - ring_.center;
  const double y = dot(r, ring_.axis);
  const double rho = norm(r - ring_.axis * y);
  double d = std::hypot(rho - ring_zero_, y);
  if (impl_->schedule.at(s.t).guide > 0.0) d = std::min(d, std::hypot(rho - overlap_zero_, y));
  return d;
}

bool ScenarioModel::escaped(const AtomState& s) const {
  const double limit = s.stage == Stage::guide ? guide_.separation_at(guide_coordinate(s.position))
                                               : ring_.separation;
  return transverse_offset(s) > cfg_.escape_factor * limit;
}

std::vector<AtomState> ScenarioModel::sample(int cloud_index) const {
  const std::uint64_t seed = cfg_.require_seed();
  const double t0 = release_time(cloud_index);
  if (cfg_.cloud.placement == CloudPlacement::ring) {
    return sample_ring_cloud(cfg_.cloud, ring_, ring_zero_, cfg_.constants, seed, cloud_index, &ring_field(), t0, &gravity_);
  }
  CloudFrame frame;
  frame.center = tangent_ + guide_.axis * release_height(cfg_);
  frame.e_long = -guide_.axis;
  frame.e_t1 = ring_.reference;
  frame.e_t2 = ring_.axis;
  return sample_cloud(cfg_.cloud, frame, cfg_.constants, seed, cloud_index, &guide_field(), t0);
}

namespace {

constexpr std::uint64_t background_stream = 16;
constexpr std::uint64_t removal_stream = 32;

struct Simulation {
  const ScenarioModel& model;
  const ScenarioConfig& cfg;
  std::vector<AtomRecord> atoms;
  std::vector<std::optional<SpinTracker>> spins;
  double probe_phi;
  double probe_half;

  Simulation(const ScenarioModel& m, const ScenarioConfig& c)
      : model(m), cfg(c), probe_phi(c.probe.azimuth), probe_half(0.5 * c.probe.window) {
    const int clouds = c.multiload ? 2 : 1;
    const std::uint64_t seed = c.require_seed();
    for (int k = 0; k < clouds; ++k) {
      const auto states = m.sample(k);
      for (std::size_t i = 0; i < states.size(); ++i) {
        AtomRecord r;
        r.state = states[i];
        r.cloud = k;
        r.release = m.release_time(k);
        r.background_time = inf;
        if (c.losses.tau_background > 0.0) {
          auto rng = substream(seed, i, background_stream + k);
          r.background_time = r.release + exponential(rng, c.losses.tau_background);
        }
        if (r.state.stage == Stage::ring) enter_ring(r);
        atoms.push_back(std::move(r));
      }
    }
    spins.resize(atoms.size());
    if (c.losses.majorana == MajoranaModel::spin_oracle) {
      SpinOptions so;
      so.adiabatic_cutoff = 1e-3;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        spins[i].emplace(m.field(atoms[i].state.stage), c.constants, so);
        spins[i]->reset(atoms[i].state);
      }
    }
  }

  double window_margin(double phi) const {
    return probe_half - std::abs(wrap(phi - probe_phi)) * model.ring_zero_radius();
  }

  // Entry time and speed are referred back to the tangent-point height with
  // the local free-fall kinematics, removing the overshoot of the last step.
  void enter_ring(AtomRecord& r) const {
    r.state.stage = Stage::ring;
    const double h = model.gravity().height(r.state.position);
    const double v_up = dot(r.state.velocity, model.gravity().up);
    const double g = model.gravity().enabled ? cfg.constants.g_grav() : 0.0;
    r.ring_entry = v_up < 0.0 && h < 0.0 ? r.state.t - h / v_up : r.state.t;
    r.entry_speed = std::sqrt(std::max(norm2(r.state.velocity) + 2.0 * g * h, 0.0));
    r.phi = model.azimuth(r.state.position);
    r.in_window = window_margin(r.phi) > 0.0;
    if (r.in_window) r.passes.push_back(r.state.t);
  }

  void close_window(AtomRecord& r) const {
    if (r.in_window) {
      r.passes.push_back(r.state.t);
      r.in_window = false;
    }
  }

  // Ring-stage bookkeeping for one substep; phi is unwrapped continuously.
  void track_ring(AtomRecord& r, const AtomState& before, const AtomState& after) const {
    const double phi0 = r.phi;
    const double phi1 = phi0 + wrap(model.azimuth(after.position) - phi0);
    const double path0 = r.ring_path;
    const double step = norm(after.position - before.position);
    const double dt = after.t - before.t;
    r.phi = phi1;
    r.ring_path += step;
    r.ring_time += dt;
    const double k0 = std::floor((phi0 - probe_phi) / two_pi);
    const double k1 = std::floor((phi1 - probe_phi) / two_pi);
    if (k1 > k0) {
      const double target = probe_phi + two_pi * k1;
      const double f = (target - phi0) / (phi1 - phi0);
      r.crossings.push_back(before.t + f * dt);
      r.crossing_path.push_back(path0 + f * step);
    }
    const double m0 = window_margin(phi0);
    const double m1 = window_margin(phi1);
    const bool inside = m1 > 0.0;
    if (inside != r.in_window) {
      const double f = m0 == m1 ? 1.0 : m0 / (m0 - m1);
      r.passes.push_back(before.t + std::clamp(f, 0.0, 1.0) * dt);
      r.in_window = inside;
    }
  }

  bool inside_loss_disk(const FieldSample& fs) const {
    if (cfg.losses.majorana != MajoranaModel::loss_disk || cfg.losses.loss_radius <= 0.0) return false;
    double j2 = 0.0;
    for (double v : fs.J.a) j2 += v * v;
    if (j2 == 0.0) return false;
    return norm(fs.B) * std::sqrt(2.0 / j2) < cfg.losses.loss_radius;
  }

  void advance(std::size_t i, double t_sync) {
    AtomRecord& r = atoms[i];
    AtomState& s = r.state;
    if (r.failed || !s.alive() || r.release > t_sync || s.t >= t_sync) return;
    std::optional<SpinTracker>& spin = spins[i];
    const double t_stop = std::min(t_sync, r.background_time);
    try {
      Propagator prop(model.field(s.stage), cfg.constants, model.gravity(), cfg.integrator);
      prop.prime(s);
      if (spin) spin->set_field(model.field(s.stage));
      while (s.t < t_stop && s.alive()) {
        bool switched = false;
        auto obs = [&](const AtomState& before, AtomState& after, const FieldSample& fs) {
          if (spin) {
            spin->advance(after);
            after.spin = spin->spin();
            if (!spin->flips().empty()) {
              after.mark_lost(LossCause::majorana);
              return false;
            }
          }
          if (after.stage == Stage::guide) {
            if (model.guide_coordinate(after.position) <= 0.0) {
              switched = true;
              return false;
            }
          } else {
            track_ring(r, before, after);
          }
          if (model.escaped(after)) {
            after.mark_lost(LossCause::over_barrier);
            return false;
          }
          if (inside_loss_disk(fs)) {
            after.mark_lost(LossCause::majorana);
            return false;
          }
          return true;
        };
        const bool ok = prop.run_until(s, t_stop, obs);
        if (switched) {
          enter_ring(r);
          prop.set_field(model.ring_field(), s);
          if (spin) spin->set_field(model.ring_field());
          continue;
        }
        if (!ok) break;
      }
      if (s.alive() && s.t >= r.background_time) s.mark_lost(LossCause::background_gas);
      if (!s.alive()) close_window(r);
    } catch (const Error& e) {
      r.failed = true;
      r.failure = std::string(to_string(e.category())) + ": " + e.what();
      close_window(r);
    }
  }

  void run_segment(double t_sync, Kernel kernel, int workers) {
    const long n = static_cast<long>(atoms.size());
    if (kernel == Kernel::serial) {
      for (long i = 0; i < n; ++i) advance(static_cast<std::size_t>(i), t_sync);
    } else {
      const int threads = ThreadCount(workers).value();
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
      for (long i = 0; i < n; ++i) advance(static_cast<std::size_t>(i), t_sync);
    }
    std::size_t failures = 0;
    for (const auto& r : atoms) failures += r.failed ? 1 : 0;
    if (2 * failures > atoms.size()) {
      const auto it = std::find_if(atoms.begin(), atoms.end(), [](const AtomRecord& r) { return r.failed; });
      fail(ErrorCategory::numeric, "more than half of the atoms failed (" + std::to_string(failures) + " of " +
                                       std::to_string(atoms.size()) + "); first: " + it->failure);
    }
  }

  void apply_shaping(const ShapingPulse& p) {
    std::vector<std::size_t> idx;
    std::vector<double> phi;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const AtomRecord& r = atoms[i];
      if (r.failed || !r.state.alive() || r.state.stage != Stage::ring || r.release > p.t) continue;
      idx.push_back(i);
      phi.push_back(r.phi);
    }
    if (idx.size() < 2) return;
    const ShapingOutcome out = shape_velocity(phi, p.fraction, p.mode);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (out.survives[k]) continue;
      AtomRecord& r = atoms[idx[k]];
      r.state.mark_lost(LossCause::removed_by_shaping);
      close_window(r);
    }
  }

  void apply_reload_removal(double t) {
    const std::uint64_t seed = cfg.require_seed();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      AtomRecord& r = atoms[i];
      if (r.cloud != 0 || r.failed || !r.state.alive()) continue;
      auto rng = substream(seed, i, removal_stream);
      if (uniform(rng) < cfg.losses.reload_removal_fraction) {
        r.state.mark_lost(LossCause::reload_scatter);
        close_window(r);
      }
    }
    (void)t;
  }

  Snapshot snapshot(double t, std::string label) const {
    Snapshot snap;
    snap.t = t;
    snap.label = std::move(label);
    const PhysicalConstants& c = cfg.constants;
    const double g = cfg.gravity ? c.g_grav() : 0.0;
    for (const auto& r : atoms) {
      const AtomState& s = r.state;
      AtomSnapshot a;
      a.cause = s.cause;
      a.failed = r.failed;
      a.stage = s.stage;
      a.released = r.release <= t;
      const Vec3 e = s.stage == Stage::ring ? model.azimuthal_direction(s.position) : -model.placed_guide().axis;
      a.phi = s.stage == Stage::ring ? r.phi : 0.0;
      a.v_az = dot(s.velocity, e);
      const double v2 = a.v_az * a.v_az + 2.0 * g * model.gravity().height(s.position);
      a.v_equivalent = std::copysign(std::sqrt(std::max(v2, 0.0)), a.v_az);
      const Vec3 vt = s.velocity - e * a.v_az;
      const double b = norm(model.field(s.stage).field(s.position, s.t));
      a.e_trans = 0.5 * c.mass() * dot(vt, vt) + c.mu_m() * b;
      snap.atoms.push_back(a);
    }
    return snap;
  }
};

enum class SyncKind { reload_removal, shaping, snapshot };

struct SyncEvent {
  double t;
  SyncKind kind;
  std::size_t index;
};

ScenarioResult simulate(const ScenarioConfig& cfg, Kernel kernel, bool with_reference) {
  cfg.validate();
  ScenarioModel model(cfg);
  Simulation sim(model, cfg);

  std::vector<SyncEvent> events;
  if (cfg.multiload && cfg.losses.reload_removal_fraction > 0.0) {
    const auto& ml = *cfg.multiload;
    const double t = ml.reload_delay + model.fall_time() - ml.reload.ramp_down - ml.reload.plateau;
    if (t <= cfg.t_end) events.push_back({t, SyncKind::reload_removal, 0});
  }
  for (std::size_t i = 0; i < cfg.shaping.size(); ++i) events.push_back({cfg.shaping[i].t, SyncKind::shaping, i});
  for (std::size_t i = 0; i < cfg.snapshots.size(); ++i) events.push_back({cfg.snapshots[i], SyncKind::snapshot, i});
  std::stable_sort(events.begin(), events.end(), [](const SyncEvent& a, const SyncEvent& b) {
    return a.t < b.t || (a.t == b.t && a.kind < b.kind);
  });

  ScenarioResult result;
  for (const auto& e : events) {
    sim.run_segment(e.t, kernel, cfg.workers);
    switch (e.kind) {
      case SyncKind::reload_removal: sim.apply_reload_removal(e.t); break;
      case SyncKind::shaping: sim.apply_shaping(cfg.shaping[e.index]); break;
      case SyncKind::snapshot: result.snapshots.push_back(sim.snapshot(e.t, "t=" + std::to_string(e.t))); break;
    }
  }
  sim.run_segment(cfg.t_end, kernel, cfg.workers);
  for (auto& r : sim.atoms) {
    if (r.in_window) r.passes.push_back(r.state.t);
    r.in_window = false;
  }
  result.snapshots.push_back(sim.snapshot(cfg.t_end, "final"));

  result.config = cfg;
  result.hash = scenario_hash(cfg);
  result.atoms = std::move(sim.atoms);
  for (const auto& r : result.atoms) result.failures += r.failed ? 1 : 0;
  if (with_reference) {
    result.reference = reference_orbit(cfg);
    result.probe_reference =
        cfg.probe.auto_reference ? result.reference.first_pass - 0.5 * cfg.probe.duration : cfg.probe.reference;
  } else {
    result.probe_reference = cfg.probe.reference;
  }
  return result;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, Kernel kernel) { return simulate(cfg, kernel, true); }

ReferenceOrbit reference_orbit(const ScenarioConfig& cfg) {
  ScenarioConfig ref = cfg;
  ref.cloud.atoms = 1;
  ref.cloud.sigma_long = 0.0;
  ref.cloud.sigma_trans = 0.0;
  ref.cloud.T_long = 0.0;
  ref.cloud.T_trans = 0.0;
  ref.losses.tau_background = 0.0;
  ref.losses.majorana = MajoranaModel::off;
  ref.losses.reload_removal_fraction = 0.0;
  ref.shaping.clear();
  ref.snapshots.clear();
  ref.multiload.reset();
  ref.workers = 1;
  const double drop = cfg.cloud.placement == CloudPlacement::ring ? 0.0 : std::max(cfg.cloud.height, 0.0);
  const double v_guess = std::max(0.3, std::sqrt(2.0 * cfg.constants.g_grav() * drop) + std::abs(cfg.cloud.mean_speed));
  ref.t_end = std::max(cfg.t_end, fall_time(ref) + cfg.transfer_time + 3.5 * two_pi * cfg.ring.radius / v_guess);
  const ScenarioResult r = simulate(ref, Kernel::serial, false);
  const AtomRecord& a = r.atoms.front();
  if (a.failed) fail(ErrorCategory::numeric, "reference atom failed: " + a.failure);
  require(a.state.alive(), ErrorCategory::numeric,
          "reference atom lost (" + std::string(to_string(a.state.cause)) + ") before completing its orbits");
  require(a.crossings.size() >= 2, ErrorCategory::statistics,
          "reference atom crossed the probe azimuth fewer than twice");

  ReferenceOrbit o;
  o.entry_time = a.ring_entry;
  o.entry_speed = a.entry_speed;
  const double span = a.crossings.back() - a.crossings.front();
  o.period = span / static_cast<double>(a.crossings.size() - 1);
  o.mean_speed = (a.crossing_path.back() - a.crossing_path.front()) / span;
  o.circumference = two_pi * loop_pair_zero_radius(cfg.ring.radius, cfg.ring.separation);
  o.first_pass = a.crossings.front() - o.period;
  return o;
}

namespace {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double sigma = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  m.n = x.size();
  if (x.empty()) return m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  if (x.size() > 1) {
    double s2 = 0.0;
    for (double v : x) s2 += (v - m.mean) * (v - m.mean);
    m.sigma = std::sqrt(s2 / static_cast<double>(x.size() - 1));
  }
  return m;
}

nlohmann::json moments_json(const Moments& m) { return {{"n", m.n}, {"mean", m.mean}, {"sigma", m.sigma}}; }

}  // namespace

void write_summary_json(std::ostream& os, const ScenarioResult& result) {
  using nlohmann::json;
  const ScenarioConfig& cfg = result.config;
  json j;
  j["scenario_hash"] = result.hash;
  j["seed"] = cfg.seed.value_or(0);
  j["atoms"] = result.atoms.size();
  j["failures"] = result.failures;

  json counts = json::object();
  for (LossCause c : {LossCause::none, LossCause::majorana, LossCause::over_barrier, LossCause::background_gas,
                      LossCause::removed_by_shaping, LossCause::reload_scatter}) {
    std::size_t n = 0;
    for (const auto& a : result.atoms) n += (!a.failed && a.state.cause == c) ? 1 : 0;
    counts[std::string(to_string(c))] = n;
  }
  j["counts"] = counts;

  const int points = 101;
  json st = json::array(), sf = json::array();
  const double n_total = static_cast<double>(std::max<std::size_t>(result.atoms.size(), 1));
  for (int k = 0; k < points; ++k) {
    const double t = cfg.t_end * k / (points - 1);
    std::size_t alive = 0;
    for (const auto& a : result.atoms) {
      if (a.failed) continue;
      if (a.state.alive() || a.state.t > t) ++alive;
    }
    st.push_back(t);
    sf.push_back(static_cast<double>(alive) / n_total);
  }
  j["survival"] = {{"t_s", st}, {"fraction", sf}};

  json snaps = json::array();
  for (const auto& s : result.snapshots) {
    std::vector<double> phi, vaz, veq, et;
    std::size_t ring = 0;
    for (const auto& a : s.atoms) {
      if (a.failed || a.cause != LossCause::none || !a.released) continue;
      vaz.push_back(a.v_az);
      veq.push_back(a.v_equivalent);
      et.push_back(a.e_trans);
      if (a.stage == Stage::ring) {
        ++ring;
        phi.push_back(a.phi);
      }
    }
    snaps.push_back({{"t_s", s.t},
                     {"label", s.label},
                     {"alive", vaz.size()},
                     {"in_ring", ring},
                     {"azimuth_rad", moments_json(moments(phi))},
                     {"v_az_m_s", moments_json(moments(vaz))},
                     {"v_equivalent_m_s", moments_json(moments(veq))},
                     {"e_trans_J", moments_json(moments(et))}});
  }
  j["snapshots"] = snaps;

  if (!result.snapshots.empty()) {
    std::vector<double> et;
    for (const auto& a : result.snapshots.back().atoms) {
      if (!a.failed && a.cause == LossCause::none && a.released) et.push_back(a.e_trans / cfg.constants.kB());
    }
    const int bins = 40;
    const double hi = et.empty() ? 1.0 : std::max(*std::max_element(et.begin(), et.end()), 1e-12);
    std::vector<std::size_t> hist(bins, 0);
    for (double e : et) hist[std::min(bins - 1, static_cast<int>(e / hi * bins))]++;
    json edges = json::array();
    for (int b = 0; b <= bins; ++b) edges.push_back(hi * b / bins);
    j["e_trans_histogram"] = {{"unit", "K"}, {"edges", edges}, {"counts", hist}};
  }

  const ReferenceOrbit& o = result.reference;
  j["reference_orbit"] = {{"entry_time_s", o.entry_time}, {"entry_speed_m_s", o.entry_speed},
                          {"period_s", o.period},         {"mean_speed_m_s", o.mean_speed},
                          {"circumference_m", o.circumference}, {"first_pass_s", o.first_pass}};
  j["probe_reference_s"] = result.probe_reference;
  os << j.dump(2) << '\n';
}

}  // namespace ringsim
