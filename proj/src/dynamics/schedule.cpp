#include "ringsim/dynamics/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ringsim/core/error.hpp"

namespace ringsim {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::transfer_start: return "transfer_start";
    case EventKind::transfer_end: return "transfer_end";
    case EventKind::ring_dip: return "ring_dip";
    case EventKind::release: return "release";
    case EventKind::second_load_arrival: return "second_load_arrival";
    case EventKind::probe: return "probe";
    case EventKind::shaping: return "shaping";
  }
  return "unknown";
}

RampSchedule::RampSchedule(std::vector<Breakpoint> points, std::vector<ScheduleEvent> events)
    : points_(std::move(points)), events_(std::move(events)) {
  require(!points_.empty(), ErrorCategory::schedule, "schedule needs at least one breakpoint");
  validate();
  std::stable_sort(events_.begin(), events_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
}

RampSchedule RampSchedule::constant(double guide, double ring) {
  return RampSchedule({{0.0, guide, ring}});
}

Currents RampSchedule::at(double t) const {
  if (t <= points_.front().t) return {points_.front().guide, points_.front().ring};
  if (t >= points_.back().t) return {points_.back().guide, points_.back().ring};
  const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](double v, const Breakpoint& b) { return v < b.t; });
  const Breakpoint& hi = *it;
  const Breakpoint& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return {lo.guide + w * (hi.guide - lo.guide), lo.ring + w * (hi.ring - lo.ring)};
}

RampSchedule RampSchedule::shifted(double dt) const {
  RampSchedule out = *this;
  for (auto& p : out.points_) p.t += dt;
  for (auto& e : out.events_) e.t += dt;
  return out;
}

RampSchedule RampSchedule::then(const RampSchedule& later) const {
  require(later.start() > end(), ErrorCategory::schedule,
          "overlapping ramps: next segment starts at " + std::to_string(later.start()) +
              " s, before the previous one ends at " + std::to_string(end()) + " s");
  RampSchedule out = *this;
  out.points_.insert(out.points_.end(), later.points_.begin(), later.points_.end());
  out.events_.insert(out.events_.end(), later.events_.begin(), later.events_.end());
  std::stable_sort(out.events_.begin(), out.events_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  out.validate();
  return out;
}

void RampSchedule::add_event(ScheduleEvent e) {
  events_.push_back(e);
  std::stable_sort(events_.begin(), events_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
}

void RampSchedule::validate() const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    require(std::isfinite(p.t) && std::isfinite(p.guide) && std::isfinite(p.ring), ErrorCategory::schedule,
            "schedule breakpoints must be finite");
    require(p.guide >= 0.0 && p.ring >= 0.0, ErrorCategory::schedule, "schedule currents must be non-negative");
    if (i > 0) {
      require(p.t > points_[i - 1].t, ErrorCategory::schedule,
              "schedule breakpoints must be strictly increasing in time (breakpoint " + std::to_string(i) + ")");
    }
  }
}

RampSchedule build_transfer_ramp(const GuideGeometry& guide, const RingGeometry& ring, double t_transfer,
                                 TransferMode mode, const ReloadOptions& reload) {
  require(t_transfer > 0.0 && std::isfinite(t_transfer), ErrorCategory::invalid_input,
          "transfer time must be positive");
  const double ig = guide.current;
  const double ir = ring.current;
  if (mode == TransferMode::load) {
    return RampSchedule({{0.0, ig, 0.0}, {t_transfer, 0.0, ir}},
                        {{0.0, EventKind::transfer_start}, {t_transfer, EventKind::transfer_end}});
  }
  require(reload.ramp_down > 0.0 && reload.plateau > 0.0, ErrorCategory::invalid_input,
          "reload ramp-down and plateau durations must be positive");
  require(reload.dip_current >= 0.0 && reload.dip_current <= ir, ErrorCategory::invalid_input,
          "reload dip current must lie in [0, ring current]");
  const double t1 = reload.ramp_down;
  const double t2 = t1 + reload.plateau;
  const double t3 = t2 + t_transfer;
  return RampSchedule({{0.0, ig, ir}, {t1, ig, reload.dip_current}, {t2, ig, reload.dip_current}, {t3, 0.0, ir}},
                      {{0.0, EventKind::ring_dip}, {t2, EventKind::transfer_start}, {t3, EventKind::transfer_end}});
}

ScheduledField::ScheduledField(RampSchedule schedule, std::vector<Term> terms, const JunctionModifier* junction)
    : schedule_(std::move(schedule)), terms_(std::move(terms)), junction_(junction) {}

FieldSample ScheduledField::sample(const Vec3& p, double t) const {
  const Currents c = schedule_.at(t);
  FieldSample total;
  for (const auto& term : terms_) {
    const double i = term.channel == Channel::guide ? c.guide : c.ring;
    if (i == 0.0) continue;
    const FieldSample s = term.unit_source->sample(p, t);
    total.B += s.B * i;
    total.J += s.J * i;
  }
  if (junction_) junction_->apply(p, total);
  return total;
}

Vec3 ScheduledField::field(const Vec3& p, double t) const {
  const Currents c = schedule_.at(t);
  Vec3 B;
  for (const auto& term : terms_) {
    const double i = term.channel == Channel::guide ? c.guide : c.ring;
    if (i == 0.0) continue;
    B += term.unit_source->field(p, t) * i;
  }
  return junction_ ? junction_->apply(p, B) : B;
}

std::vector<ZeroTrackPoint> track_trap_zero(const FieldSource& source, const Vec3& start, const Vec3& e_scan,
                                            const Vec3& e_sep, std::span<const double> times) {
  std::vector<ZeroTrackPoint> out;
  Vec3 z = start;
  for (double t : times) {
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const FieldSample s = source.sample(z, t);
      const Vec3 Ja = s.J * e_scan;
      const Vec3 Jb = s.J * e_sep;
      const double a11 = dot(e_scan, Ja), a12 = dot(e_scan, Jb);
      const double a21 = dot(e_sep, Ja), a22 = dot(e_sep, Jb);
      const double r1 = dot(e_scan, s.B), r2 = dot(e_sep, s.B);
      const double det = a11 * a22 - a12 * a21;
      if (det == 0.0 || !std::isfinite(det)) break;
      double dx = (a22 * r1 - a12 * r2) / det;
      double dy = (a11 * r2 - a21 * r1) / det;
      // damp long Newton jumps so the iterate stays in the current basin
      const double step = std::hypot(dx, dy);
      const double cap = 50e-6;
      if (step > cap) {
        dx *= cap / step;
        dy *= cap / step;
      }
      z -= e_scan * dx + e_sep * dy;
      if (step < 1e-14) {
        converged = true;
        break;
      }
    }
    const FieldSample s = source.sample(z, t);
    const double gscale = std::sqrt(0.5 * (norm2(s.J * e_scan) + norm2(s.J * e_sep)));
    require(converged || norm(s.B) < 1e-12 * gscale, ErrorCategory::numeric,
            "trap zero lost at t = " + std::to_string(t) + " s");
    out.push_back({t, z, dot(z - start, e_scan)});
  }
  return out;
}

void check_transfer_track(const std::vector<ZeroTrackPoint>& track, double from, double to, double tol,
                          double max_jump) {
  require(!track.empty(), ErrorCategory::invalid_input, "empty zero track");
  require(std::abs(track.front().offset - from) <= tol, ErrorCategory::numeric,
          "trap zero does not start between the guide wires");
  require(std::abs(track.back().offset - to) <= tol, ErrorCategory::numeric,
          "trap zero does not end between the ring wires");
  const double sign = to >= from ? 1.0 : -1.0;
  for (std::size_t i = 1; i < track.size(); ++i) {
    const double step = (track[i].offset - track[i - 1].offset) * sign;
    require(step >= -1e-12, ErrorCategory::numeric,
            "trap zero moves backwards at t = " + std::to_string(track[i].t) + " s");
    require(std::abs(step) <= max_jump, ErrorCategory::numeric,
            "trap zero jumps at t = " + std::to_string(track[i].t) + " s");
  }
}

}  // namespace ringsim
