#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ringsim/core/constants.hpp"
#include "ringsim/dynamics/atom.hpp"
#include "ringsim/dynamics/propagator.hpp"
#include "ringsim/dynamics/schedule.hpp"
#include "ringsim/ensemble/cloud.hpp"
#include "ringsim/ensemble/probe.hpp"
#include "ringsim/ensemble/shaping.hpp"
#include "ringsim/magnetics/geometry.hpp"

namespace ringsim {

enum class MajoranaModel { off, loss_disk, spin_oracle };


struct LossConfig {
  double tau_background = 0.8;          // s; 0 disables background-gas loss
  MajoranaModel majorana = MajoranaModel::off;
  double loss_radius = 0.6e-6;          // m, loss-disk radius
  bool junction = true;
  double reload_removal_fraction = 0.0; // first-cloud atoms removed when the reload starts

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct ShapingPulse {
  double t = 0.0;            // s
  double fraction = 0.4;     // of the FWHM, centered on the cloud
  ShapeMode mode = ShapeMode::keep;

  friend bool operator==(const ShapingPulse&, const ShapingPulse&) = default;
};

struct MultiLoadConfig {
  double reload_delay = 0.0;         // s, second release after the first
  double guide_ramp_on = 5e-3;       // s
  ReloadOptions reload;

  friend bool operator==(const MultiLoadConfig&, const MultiLoadConfig&) = default;
};

struct ScenarioConfig {
  PhysicalConstants constants = PhysicalConstants::rubidium87();
  GuideGeometry guide = default_guide();
  RingGeometry ring = default_ring();
  double overlap_offset = 500e-6;    // m, radial offset of the guide wires in the overlap
  double escape_factor = 0.75;       // escape beyond this many wire spacings from the zero line
  double transfer_time = 16e-3;      // s
  bool gravity = true;
  CloudSpec cloud;
  ProbeConfig probe;
  LossConfig losses;
  std::vector<ShapingPulse> shaping;
  std::optional<MultiLoadConfig> multiload;
  std::vector<double> snapshots;     // s
  IntegratorConfig integrator = default_integrator();
  double t_end = 0.6;                // s
  std::optional<std::uint64_t> seed;
  int workers = 0;

  static GuideGeometry default_guide();
  static RingGeometry default_ring();
  static IntegratorConfig default_integrator();

  void validate() const;
  std::uint64_t require_seed() const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Field models and placement derived from a configuration; shared read-only
/// by all atoms.
///
/// The ring lies in the plane spanned by ring.reference and
/// ring.in_plane_second(); atoms enter at azimuth 0 moving along
/// in_plane_second(), which points down. The straight guide ends at the
/// tangent point where its zero line meets the zero circle of the overlap
/// wires (radius R + overlap_offset). Configured guide origin and axes are
/// replaced by this placement.
class ScenarioModel {
 public:
  explicit ScenarioModel(const ScenarioConfig& cfg);
  ~ScenarioModel();
  ScenarioModel(const ScenarioModel&) = delete;
  ScenarioModel& operator=(const ScenarioModel&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  const RampSchedule& schedule() const;
  const FieldSource& guide_field() const;
  const FieldSource& ring_field() const;
  const FieldSource& field(Stage s) const { return s == Stage::guide ? guide_field() : ring_field(); }
  const GuideGeometry& placed_guide() const { return guide_; }
  const RingGeometry& ring() const { return ring_; }
  const GravityFrame& gravity() const { return gravity_; }
  const Vec3& tangent_point() const { return tangent_; }
  double ring_zero_radius() const { return ring_zero_; }
  double overlap_zero_radius() const { return overlap_zero_; }
  double fall_time() const { return fall_time_; }
  double release_time(int cloud_index) const;

  double azimuth(const Vec3& p) const { return ring_.azimuth(p); }
  Vec3 azimuthal_direction(const Vec3& p) const;
  /// Coordinate along the guide axis above the tangent point.
  double guide_coordinate(const Vec3& p) const { return dot(p - tangent_, guide_.axis); }
  /// Distance from the nearest trap-zero line of the atom's stage.
  double transverse_offset(const AtomState& s) const;
  bool escaped(const AtomState& s) const;

  /// Initial states of cloud 0 (first load) or 1 (second load).
  std::vector<AtomState> sample(int cloud_index) const;

 private:
  struct Impl;
  ScenarioConfig cfg_;
  GuideGeometry guide_;
  RingGeometry ring_;
  GravityFrame gravity_;
  Vec3 tangent_;
  double ring_zero_ = 0.0;
  double overlap_zero_ = 0.0;
  double fall_time_ = 0.0;
  std::unique_ptr<Impl> impl_;
};

/// Everything recorded for one atom.
struct AtomRecord {
  AtomState state;
  int cloud = 0;
  double release = 0.0;             // s
  double background_time = 0.0;     // s, scheduled background-gas loss (+inf if none)
  double ring_entry = -1.0;         // s, < 0 if never in the ring stage
  double phi = 0.0;                 // unwrapped azimuth (ring stage)
  double ring_path = 0.0;           // m travelled while in the ring stage
  double ring_time = 0.0;           // s spent in the ring stage
  bool in_window = false;
  double entry_speed = 0.0;         // m/s at ring entry
  std::vector<double> passes;       // probe-window intervals [in0, out0, in1, out1, ...]
  std::vector<double> crossings;    // s, ring-stage crossings of the probe azimuth
  std::vector<double> crossing_path;  // ring_path at each crossing
  bool failed = false;
  std::string failure;
};

struct AtomSnapshot {
  LossCause cause = LossCause::none;
  bool failed = false;
  Stage stage = Stage::guide;
  bool released = false;
  double phi = 0.0;         // unwrapped azimuth
  double v_az = 0.0;        // m/s
  double v_equivalent = 0.0;  // azimuthal speed referred to the tangent-point height
  double e_trans = 0.0;     // J
};

struct Snapshot {
  double t = 0.0;
  std::string label;
  std::vector<AtomSnapshot> atoms;
};

struct ReferenceOrbit {
  double entry_time = 0.0;      // s
  double entry_speed = 0.0;     // m/s
  double period = 0.0;          // s, mean spacing of probe-azimuth crossings after transfer
  double mean_speed = 0.0;      // m/s, path length / time over the measured orbits
  double circumference = 0.0;   // m, 2 pi times the trap-zero radius
  double first_pass = 0.0;      // s, first ring-stage crossing of the probe azimuth
};

struct ScenarioResult {
  ScenarioConfig config;
  std::string hash;
  std::vector<AtomRecord> atoms;
  std::vector<Snapshot> snapshots;
  ReferenceOrbit reference;
  double probe_reference = 0.0;   // absolute time of probe delay 0
  std::size_t failures = 0;
};

enum class Kernel { serial, parallel };

/// Runs every atom through the schedule. The parallel kernel distributes atoms
/// over OpenMP threads; both kernels give identical results.
ScenarioResult run_scenario(const ScenarioConfig& cfg, Kernel kernel = Kernel::parallel);

/// Single zero-temperature atom through the first load, used to time probes and reloads.
ReferenceOrbit reference_orbit(const ScenarioConfig& cfg);

/// Adds a second release `reload_delay` after the first with a reload-mode
/// transfer at its arrival; throws a schedule error if ramps would overlap.
ScenarioConfig schedule_multi_load(const ScenarioConfig& cfg, double reload_delay);

/// Full schedule of guide and ring currents for the configuration.
RampSchedule scenario_schedule(const ScenarioConfig& cfg);

/// Free-fall time from the release height to the tangent point.
double fall_time(const ScenarioConfig& cfg);

/// JSON summary: loss counts, survival curve, snapshot moments, transverse
/// energy histogram, reference orbit.
void write_summary_json(std::ostream& os, const ScenarioResult& result);

}  // namespace ringsim
