#pragma once

#include <span>
#include <vector>

#include "ringsim/core/constants.hpp"
#include "ringsim/dynamics/atom.hpp"
#include "ringsim/dynamics/propagator.hpp"
#include "ringsim/magnetics/field.hpp"

namespace ringsim {

/// gamma_eff = 2 mu_m / hbar; the classical spin precesses at gamma_eff |B|.
double gyromagnetic_rate(const PhysicalConstants& constants);

/// (rotation rate of the field direction seen by a moving atom) / (mu_m |B| / hbar).
/// Returns +infinity where |B| == 0.
double adiabaticity_ratio(const FieldSample& s, const Vec3& velocity, const PhysicalConstants& constants);
double adiabaticity_ratio(const AtomState& state, const FieldSource& field, const PhysicalConstants& constants);

struct SpinOptions {
  int substeps = 0;                 // fixed substeps per trajectory interval; 0 = adaptive
  double max_rotation = 0.1;        // rad per adaptive substep (Larmor angle and field-direction change)
  double coarse_limit = 0.5;        // rad; fixed substeps rotating further are an accuracy error
  double flip_persistence = 10.0;   // Larmor periods a reversed projection must last
  double adiabatic_cutoff = 0.0;    // below this ratio the spin is transported with the field direction
  int max_depth = 40;
};

struct FlipEvent {
  double t = 0.0;
  Vec3 position;
  bool to_untrapped = true;
};

/// Classical spin carried along a path given as (t, position, velocity) knots.
/// Positions between knots are cubic Hermite interpolants. Trapped means
/// S . B_hat < 0.
class SpinTracker {
 public:
  SpinTracker(const FieldSource& field, const PhysicalConstants& constants, const SpinOptions& opts);

  /// Starts at `s` (spin taken from s.spin, field evaluated at s).
  void reset(const AtomState& s);
  /// Advances the spin from the previous knot to `s`; returns flips confirmed on the way.
  void advance(const AtomState& s);

  const Vec3& spin() const { return spin_; }
  bool trapped() const { return trapped_; }
  const std::vector<FlipEvent>& flips() const { return flips_; }
  long substeps() const { return substeps_; }
  void set_field(const FieldSource& field) { field_ = &field; }

 private:
  struct Knot {
    double t;
    Vec3 p;
    Vec3 v;
  };
  Vec3 position_at(const Knot& a, const Knot& b, double t) const;
  void step_interval(const Knot& a, const Knot& b, double t0, const Vec3& B0, double t1, const Vec3& B1, int depth);
  void finish_substep(double t, const Vec3& p, const Vec3& B, double larmor_angle);

  const FieldSource* field_;
  double gamma_;
  double mu_over_hbar_;
  SpinOptions opts_;
  Vec3 spin_{0, 0, -1};
  Knot last_{};
  bool trapped_ = true;
  bool pending_ = false;
  double pending_t_ = 0.0;
  Vec3 pending_p_;
  double pending_phase_ = 0.0;
  std::vector<FlipEvent> flips_;
  long substeps_ = 0;
};

struct SpinHistory {
  std::vector<Vec3> spin;           // one per trajectory sample
  std::vector<FlipEvent> flips;
  long substeps = 0;
  double max_norm_error = 0.0;      // max | |S| - 1 | over the samples
};

/// Precesses s.spin of the first sample along a time-ordered trajectory.
SpinHistory precess_spin(std::span<const AtomState> trajectory, const FieldSource& field,
                         const PhysicalConstants& constants, const SpinOptions& opts = {});

/// Unit spin anti-aligned with the field at p, tilted by `tilt` rad with azimuthal phase `phase`.
Vec3 trapped_spin(const Vec3& B, double tilt = 0.0, double phase = 0.0);

}  // namespace ringsim
