#include "ringsim/magnetics/geometry.hpp"

#include <cmath>

#include "ringsim/core/constants.hpp"
#include "ringsim/core/error.hpp"

namespace ringsim {

namespace {

bool is_unit(const Vec3& v) { return std::abs(norm(v) - 1.0) < 1e-9; }

}  // namespace

double GuideGeometry::separation_at(double s) const {
  if (!taper) return separation;
  return separation + (taper->far_separation - separation) * (s / taper->length);
}

void GuideGeometry::validate() const {
  require(separation > 0.0 && std::isfinite(separation), ErrorCategory::invalid_input,
          "guide separation must be positive");
  require(std::isfinite(current), ErrorCategory::invalid_input, "guide current must be finite");
  require(is_unit(axis) && is_unit(separation_axis), ErrorCategory::invalid_input,
          "guide axes must be unit vectors");
  require(std::abs(dot(axis, separation_axis)) < 1e-9, ErrorCategory::invalid_input,
          "guide axis and separation axis must be orthogonal");
  if (taper) {
    require(taper->length > 0.0 && taper->far_separation > 0.0, ErrorCategory::invalid_input,
            "taper length and far separation must be positive");
  }
}

double RingGeometry::azimuth(const Vec3& p) const {
  const Vec3 rel = p - center;
  return std::atan2(dot(rel, in_plane_second()), dot(rel, reference));
}

void RingGeometry::validate() const {
  require(radius > 0.0 && separation > 0.0, ErrorCategory::invalid_input,
          "ring radius and separation must be positive");
  require(radius > separation, ErrorCategory::invalid_input, "ring radius must exceed separation");
  require(std::isfinite(current), ErrorCategory::invalid_input, "ring current must be finite");
  require(is_unit(axis) && is_unit(reference) && std::abs(dot(axis, reference)) < 1e-9,
          ErrorCategory::invalid_input, "ring axis and reference must be orthonormal");
  if (junction) {
    require(junction->ripple >= 0.0 && junction->ripple < 1.0, ErrorCategory::invalid_input,
            "junction ripple must lie in [0, 1)");
    require(junction->extent > 0.0, ErrorCategory::invalid_input,
            "junction extent must be positive");
  }
}

void validate(const WireElement& e) {
  require(std::isfinite(e.current), ErrorCategory::invalid_input, "element current must be finite");
  if (const auto* l = std::get_if<InfiniteLine>(&e.shape)) {
    require(is_unit(l->direction), ErrorCategory::invalid_input, "line direction must be unit");
  } else if (const auto* s = std::get_if<Segment>(&e.shape)) {
    require(norm(s->b - s->a) > 0.0, ErrorCategory::invalid_input, "degenerate segment");
  } else if (const auto* a = std::get_if<Arc>(&e.shape)) {
    require(is_unit(a->normal) && is_unit(a->start_dir) && std::abs(dot(a->normal, a->start_dir)) < 1e-9,
            ErrorCategory::invalid_input, "arc normal/start direction must be orthonormal");
    require(a->radius > 0.0, ErrorCategory::invalid_input, "arc radius must be positive");
    require(a->span > 0.0 && a->span <= 2.0 * codata::pi + 1e-12, ErrorCategory::invalid_input,
            "arc span must lie in (0, 2 pi]");
  }
}

std::vector<WireElement> guide_elements(const GuideGeometry& guide) {
  guide.validate();
  const double half = 0.5 * guide.separation;
  const double slope = guide.taper
                           ? 0.5 * (guide.taper->far_separation - guide.separation) / guide.taper->length
                           : 0.0;
  std::vector<WireElement> out;
  for (double sign : {+1.0, -1.0}) {
    InfiniteLine line;
    line.point = guide.origin + guide.separation_axis * (sign * half);
    line.direction = normalized(guide.axis + guide.separation_axis * (sign * slope));
    out.push_back({line, guide.current});
  }
  return out;
}

std::vector<WireElement> ring_elements(const RingGeometry& ring, const RingFeedOptions& feeds) {
  ring.validate();
  require(feeds.gap_angle >= 0.0 && feeds.gap_angle < codata::pi, ErrorCategory::invalid_input,
          "feed gap angle must lie in [0, pi)");
  const Vec3 e1 = ring.reference;
  const Vec3 e2 = ring.in_plane_second();
  const double phi_j = ring.junction ? ring.junction->azimuth : codata::pi;
  const double start = phi_j + 0.5 * feeds.gap_angle;
  const double span = 2.0 * codata::pi - feeds.gap_angle;
  std::vector<WireElement> out;
  for (double sign : {+1.0, -1.0}) {
    Arc arc;
    arc.center = ring.center + ring.axis * (sign * 0.5 * ring.separation);
    arc.normal = ring.axis;
    arc.start_dir = e1 * std::cos(start) + e2 * std::sin(start);
    arc.radius = ring.radius;
    arc.span = span;
    out.push_back({arc, ring.current});
    if (feeds.gap_angle > 0.0 && feeds.feed_length > 0.0) {
      const Vec3 end_dir = e1 * std::cos(start + span) + e2 * std::sin(start + span);
      const Vec3 p_start = arc.center + arc.start_dir * ring.radius;
      const Vec3 p_end = arc.center + end_dir * ring.radius;
      // current enters radially at the arc start and leaves at the arc end
      out.push_back({Segment{p_start + arc.start_dir * feeds.feed_length, p_start}, ring.current});
      out.push_back({Segment{p_end, p_end + end_dir * feeds.feed_length}, ring.current});
    }
  }
  return out;
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle, const Vec3& translation) {
  const Vec3 k = normalized(axis);
  RigidTransform tf;
  tf.rotation = Mat3::from_columns(rotate({1, 0, 0}, k, angle), rotate({0, 1, 0}, k, angle),
                                   rotate({0, 0, 1}, k, angle));
  tf.translation = translation;
  return tf;
}

WireElement transformed(const WireElement& e, const RigidTransform& tf) {
  WireElement out = e;
  std::visit(
      [&](auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, InfiniteLine>) {
          s.point = tf.apply_point(s.point);
          s.direction = tf.apply_direction(s.direction);
        } else if constexpr (std::is_same_v<S, Segment>) {
          s.a = tf.apply_point(s.a);
          s.b = tf.apply_point(s.b);
        } else {
          s.center = tf.apply_point(s.center);
          s.normal = tf.apply_direction(s.normal);
          s.start_dir = tf.apply_direction(s.start_dir);
        }
      },
      out.shape);
  return out;
}

GravityFrame transformed(const GravityFrame& g, const RigidTransform& tf) {
  GravityFrame out = g;
  out.up = tf.apply_direction(g.up);
  out.origin = tf.apply_point(g.origin);
  return out;
}

}  // namespace ringsim
