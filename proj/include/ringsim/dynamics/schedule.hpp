#pragma once

#include <span>
#include <string>
#include <vector>

#include "ringsim/magnetics/field.hpp"
#include "ringsim/magnetics/geometry.hpp"

namespace ringsim {

struct Currents {
  double guide = 0.0;
  double ring = 0.0;
};

struct Breakpoint {
  double t = 0.0;
  double guide = 0.0;
  double ring = 0.0;

  friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

enum class EventKind { transfer_start, transfer_end, ring_dip, release, second_load_arrival, probe, shaping };

std::string_view to_string(EventKind k);

struct ScheduleEvent {
  double t = 0.0;
  EventKind kind = EventKind::transfer_start;

  friend bool operator==(const ScheduleEvent&, const ScheduleEvent&) = default;
};

/// Piecewise-linear guide and ring currents; constant before the first and
/// after the last breakpoint.
class RampSchedule {
 public:
  RampSchedule() = default;
  explicit RampSchedule(std::vector<Breakpoint> points, std::vector<ScheduleEvent> events = {});

  static RampSchedule constant(double guide, double ring);

  Currents at(double t) const;
  const std::vector<Breakpoint>& breakpoints() const { return points_; }
  const std::vector<ScheduleEvent>& events() const { return events_; }
  double start() const { return points_.front().t; }
  double end() const { return points_.back().t; }

  RampSchedule shifted(double dt) const;
  /// Concatenation; `later` must start strictly after this schedule ends.
  RampSchedule then(const RampSchedule& later) const;
  void add_event(ScheduleEvent e);

  /// Breakpoints strictly increasing, currents non-negative and finite.
  void validate() const;

  friend bool operator==(const RampSchedule&, const RampSchedule&) = default;

 private:
  std::vector<Breakpoint> points_{{0.0, 0.0, 0.0}};
  std::vector<ScheduleEvent> events_;
};

enum class TransferMode { load, reload };

struct ReloadOptions {
  double dip_current = 2.0;      // A
  double ramp_down = 5e-3;       // s, ring I -> dip_current
  double plateau = 2e-3;         // s at dip_current before the cross-ramp

  friend bool operator==(const ReloadOptions&, const ReloadOptions&) = default;
};

/// Guide-to-ring current schedule starting at t = 0. Load: linear cross-ramp
/// guide I -> 0, ring 0 -> I. Reload: ring first ramps down to the dip
/// current and holds, then the same cross-ramp (ring dip -> I).
RampSchedule build_transfer_ramp(const GuideGeometry& guide, const RingGeometry& ring, double t_transfer,
                                 TransferMode mode, const ReloadOptions& reload = {});

/// Sum of unit-current sources scaled by the scheduled guide/ring currents,
/// with an optional junction modifier applied to the total.
class ScheduledField final : public FieldSource {
 public:
  enum class Channel { guide, ring };
  struct Term {
    const FieldSource* unit_source;  // evaluated at unit current; not owned
    Channel channel;
  };

  ScheduledField(RampSchedule schedule, std::vector<Term> terms, const JunctionModifier* junction = nullptr);
  FieldSample sample(const Vec3& p, double t) const override;
  Vec3 field(const Vec3& p, double t) const override;
  const RampSchedule& schedule() const { return schedule_; }

 private:
  RampSchedule schedule_;
  std::vector<Term> terms_;
  const JunctionModifier* junction_;
};

struct ZeroTrackPoint {
  double t = 0.0;
  Vec3 position;
  double offset = 0.0;  // displacement along the scan direction from `start`
};

/// Follows the transverse field zero of a time-dependent source by Newton
/// iteration seeded from the previous time. Throws a numeric error if the
/// zero is lost.
std::vector<ZeroTrackPoint> track_trap_zero(const FieldSource& source, const Vec3& start, const Vec3& e_scan,
                                            const Vec3& e_sep, std::span<const double> times);

/// Throws unless offsets move monotonically from `from` to `to` (within tol)
/// without jumps larger than `max_jump`.
void check_transfer_track(const std::vector<ZeroTrackPoint>& track, double from, double to, double tol,
                          double max_jump);

}  // namespace ringsim
