#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "ringsim/core/vec3.hpp"

namespace ringsim {

/// Linear change of the wire spacing along the guide axis.
struct Taper {
  double far_separation = 4e-3;  // spacing at axial coordinate `length` (m)
  double length = 0.04;          // axial distance over which spacing changes (m)

  friend bool operator==(const Taper&, const Taper&) = default;
};

/// Two-wire guide: parallel (or linearly tapered) filaments carrying equal
/// co-directed currents.
struct GuideGeometry {
  double separation = 840e-6;          // spacing at `origin` (m)
  double current = 8.0;                // per wire (A)
  Vec3 origin{0, 0, 0};                // point on the center axis
  Vec3 axis{0, 0, 1};                  // wire (current) direction
  Vec3 separation_axis{0, 1, 0};       // wire-to-wire direction
  std::optional<Taper> taper;

  /// Spacing at axial coordinate s measured from `origin` along `axis`.
  double separation_at(double s) const;
  /// Third axis of the guide-local frame; `separation_axis` x `axis`.
  Vec3 bisector_axis() const { return cross(separation_axis, axis); }
  void validate() const;

  friend bool operator==(const GuideGeometry&, const GuideGeometry&) = default;
};

struct JunctionModel {
  double ripple = 0.2;        // fractional potential ripple
  double extent = 250e-6;     // full azimuthal width along the ring (m)
  double azimuth = 3.14159265358979323846;  // rad, measured like RingGeometry::azimuth

  friend bool operator==(const JunctionModel&, const JunctionModel&) = default;
};

/// Storage ring formed by two coaxial circular wires of equal radius, displaced
/// by +-separation/2 along the ring axis.
struct RingGeometry {
  double radius = 0.01;
  double separation = 840e-6;
  double current = 8.0;
  Vec3 center{0, 0, 0};
  Vec3 axis{0, 1, 0};          // ring normal
  Vec3 reference{1, 0, 0};     // in-plane direction of azimuth 0
  std::optional<JunctionModel> junction;

  /// Azimuth of p in [-pi, pi], increasing from `reference` toward axis x reference.
  double azimuth(const Vec3& p) const;
  Vec3 in_plane_second() const { return cross(axis, reference); }
  void validate() const;

  friend bool operator==(const RingGeometry&, const RingGeometry&) = default;
};

struct InfiniteLine {
  Vec3 point;
  Vec3 direction;  // unit
};

struct Segment {
  Vec3 a;
  Vec3 b;
};

/// Circular arc; positive current runs counter-clockwise about `normal`
/// starting at `start_dir`.
struct Arc {
  Vec3 center;
  Vec3 normal;      // unit
  Vec3 start_dir;   // unit, perpendicular to normal
  double radius = 0.0;
  double span = 0.0;  // rad in (0, 2 pi]
};

struct WireElement {
  std::variant<InfiniteLine, Segment, Arc> shape;
  double current = 0.0;
};

void validate(const WireElement& e);

/// The two filaments of a guide, as (possibly tilted) infinite lines.
std::vector<WireElement> guide_elements(const GuideGeometry& guide);

struct RingFeedOptions {
  double gap_angle = 0.0;      // rad removed from each loop at the junction
  double feed_length = 0.0;    // length of radial feed segments (m); 0 disables
};

/// Ring wires as two arcs (full loops when gap_angle == 0), optionally with
/// radial feed segments at the gap edges.
std::vector<WireElement> ring_elements(const RingGeometry& ring, const RingFeedOptions& feeds = {});

/// Height above `origin` along `up`; disabled frames have zero height everywhere.
struct GravityFrame {
  Vec3 up{0, 0, 1};
  Vec3 origin{0, 0, 0};
  bool enabled = true;

  double height(const Vec3& p) const { return enabled ? dot(p - origin, up) : 0.0; }

  friend bool operator==(const GravityFrame&, const GravityFrame&) = default;
};

/// Rigid motion x -> R x + t.
struct RigidTransform {
  Mat3 rotation = Mat3::identity();
  Vec3 translation;

  Vec3 apply_point(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_direction(const Vec3& d) const { return rotation * d; }

  static RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& translation);
};

WireElement transformed(const WireElement& e, const RigidTransform& tf);
GravityFrame transformed(const GravityFrame& g, const RigidTransform& tf);

}  // namespace ringsim
