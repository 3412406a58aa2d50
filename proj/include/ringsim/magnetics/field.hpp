#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ringsim/core/vec3.hpp"
#include "ringsim/magnetics/geometry.hpp"

namespace ringsim {

/// Field value and Jacobian J(i,j) = dB_i/dx_j at one point.
struct FieldSample {
  Vec3 B;
  Mat3 J;
};

/// Anything that can be asked for B and its Jacobian at (position, time).
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual FieldSample sample(const Vec3& p, double t) const = 0;
  virtual Vec3 field(const Vec3& p, double t) const { return sample(p, t).B; }
};

/// Lowest-order two-wire field, B = B'(y x_hat + x y_hat) in guide-local axes
/// (y along the separation axis, x along the bisector).
Vec3 field_quadrupole(const Vec3& p, const GuideGeometry& guide);
/// B' = 4 mu0 I / (pi d^2) at axial coordinate s.
double quadrupole_gradient(const GuideGeometry& guide, double s = 0.0);

/// Azimuthal ripple attached to a ring: |B| -> (1 + eps w(phi - phi_j)) |B|
/// with w a unit-height raised cosine of full width extent/R.
class JunctionModifier {
 public:
  JunctionModifier(const RingGeometry& ring, const JunctionModel& model);

  double factor(const Vec3& p) const;
  Vec3 factor_gradient(const Vec3& p) const;
  /// Applies the modifier in place; identity when ripple == 0.
  void apply(const Vec3& p, FieldSample& s) const;
  Vec3 apply(const Vec3& p, const Vec3& B) const;

 private:
  double bump(double dphi) const;
  double bump_slope(double dphi) const;

  RingGeometry ring_;
  JunctionModel model_;
  double width_;  // rad
};

struct ExactFieldOptions {
  int arc_segments = 4096;
  bool richardson = true;
};

/// Superposition of per-element Biot-Savart fields (closed forms for lines
/// and segments, chord subdivision with Richardson extrapolation for arcs).
Vec3 field_exact(const Vec3& p, std::span<const WireElement> elements,
                 const JunctionModifier* junction = nullptr, const ExactFieldOptions& opts = {});

/// Chord-count difference |B(n) - B(n/2)| of the arc integrator at p; the
/// Richardson correction is one third of this.
double arc_richardson_estimate(const Vec3& p, std::span<const WireElement> elements,
                               const ExactFieldOptions& opts = {});

Vec3 infinite_line_field(const Vec3& p, const InfiniteLine& line, double current);
FieldSample infinite_line_sample(const Vec3& p, const InfiniteLine& line, double current);
Vec3 segment_field(const Vec3& p, const Segment& seg, double current);

/// Closed-form circular loop (complete elliptic integrals) with exact Jacobian.
struct CircularLoop {
  Vec3 center;
  Vec3 axis;  // unit; positive current is counter-clockwise about it
  double radius = 0.0;
};

FieldSample loop_sample(const Vec3& p, const CircularLoop& loop, double current);

/// Field components (B_rho, B_z) per unit mu0 I of a loop of radius a at
/// meridian coordinates (rho, z).
void loop_field_meridian(double rho, double z, double a, double& b_rho, double& b_z);

/// Radius of the field-zero circle in the mid-plane of two coaxial loops of
/// radius a separated axially by d (equal co-directed currents).
double loop_pair_zero_radius(double a, double d);

/// Two infinite (possibly tilted) filaments, analytic Jacobian.
class GuideField final : public FieldSource {
 public:
  explicit GuideField(const GuideGeometry& guide);
  FieldSample sample(const Vec3& p, double t) const override;
  Vec3 field(const Vec3& p, double t) const override;
  /// Field for unit current in each wire.
  FieldSample sample_unit(const Vec3& p) const;
  const GuideGeometry& geometry() const { return guide_; }

 private:
  GuideGeometry guide_;
  InfiniteLine wires_[2];
};

class QuadrupoleField final : public FieldSource {
 public:
  explicit QuadrupoleField(const GuideGeometry& guide);
  FieldSample sample(const Vec3& p, double t) const override;

 private:
  GuideGeometry guide_;
};

/// Two coaxial loops (closed form) plus the optional junction ripple.
class RingField final : public FieldSource {
 public:
  explicit RingField(const RingGeometry& ring);
  FieldSample sample(const Vec3& p, double t) const override;
  /// Loops only, unit current, no junction.
  FieldSample sample_unit(const Vec3& p) const;
  const RingGeometry& geometry() const { return ring_; }
  const std::optional<JunctionModifier>& junction() const { return junction_; }
  /// Radius of the trap-zero circle (no junction, which leaves zeros unchanged).
  double zero_radius() const { return zero_radius_; }

 private:
  RingGeometry ring_;
  CircularLoop loops_[2];
  std::optional<JunctionModifier> junction_;
  double zero_radius_;
};

/// Arbitrary element list via field_exact; Jacobian by central differences.
class ElementField final : public FieldSource {
 public:
  ElementField(std::vector<WireElement> elements, std::optional<JunctionModifier> junction = {},
               ExactFieldOptions opts = {}, double fd_step = 1e-7);
  FieldSample sample(const Vec3& p, double t) const override;
  Vec3 field(const Vec3& p, double t) const override;

 private:
  std::vector<WireElement> elements_;
  std::optional<JunctionModifier> junction_;
  ExactFieldOptions opts_;
  double fd_step_;
};

/// Jacobian of an arbitrary source by central differences of B.
Mat3 finite_difference_jacobian(const FieldSource& src, const Vec3& p, double t, double h);

}  // namespace ringsim
