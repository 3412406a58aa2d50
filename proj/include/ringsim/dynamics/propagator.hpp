#pragma once

#include <cmath>
#include <string>

#include "ringsim/core/constants.hpp"
#include "ringsim/core/error.hpp"
#include "ringsim/dynamics/atom.hpp"
#include "ringsim/magnetics/field.hpp"
#include "ringsim/magnetics/geometry.hpp"

namespace ringsim {

struct IntegratorConfig {
  double dt = 1e-6;                        // s
  long max_steps = 200'000'000;
  double energy_drift_tolerance = 1e-6;    // relative per 0.1 s, static fields
  int spin_substeps = 0;                   // spin steps per motion step; 0 = automatic
  double refine_eta = 0.1;                 // split steps while h |dB/dt| > eta |B|
  int max_refine = 24;                     // dyadic refinement depth
  double field_regularization = 1e-10;     // T, force surrogate sqrt(|B|^2 + Breg^2) below Breg
  int sample_stride = 1;                   // trajectory sampling, in dt steps

  void validate() const;

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

/// Velocity-Verlet (kick-drift-kick) in U = mu_m |B| + m g h with dyadic step
/// refinement near field zeros. Keeps the field sample at the current state.
class Propagator {
 public:
  Propagator(const FieldSource& field, const PhysicalConstants& constants, const GravityFrame& gravity,
             const IntegratorConfig& cfg);

  /// Switches the field model; the cached force is recomputed at `s`.
  void set_field(const FieldSource& field, const AtomState& s);
  void prime(const AtomState& s);

  const FieldSample& sample() const { return sample_; }
  const Vec3& acceleration() const { return accel_; }
  const FieldSource& field() const { return *field_; }
  const IntegratorConfig& config() const { return cfg_; }
  const PhysicalConstants& constants() const { return constants_; }
  const GravityFrame& gravity() const { return gravity_; }

  /// Kinetic + magnetic + gravitational energy of `s` using the cached sample.
  double energy(const AtomState& s) const;

  /// Advances by exactly h. `obs(before, after, sample_after)` runs after every
  /// sub-step and returns false to stop; advance then returns false.
  template <class Obs>
  bool advance(AtomState& s, double h, Obs&& obs) {
    const double t_end = s.t + h;
    const bool ok = advance_impl(s, h, 0, obs);
    if (ok) s.t = t_end;
    return ok;
  }

  /// Steps of cfg.dt (last one shortened) until s.t == t_end or obs stops.
  template <class Obs>
  bool run_until(AtomState& s, double t_end, Obs&& obs) {
    while (s.t < t_end) {
      const double remaining = t_end - s.t;
      const double h = remaining < 1.5 * cfg_.dt ? remaining : cfg_.dt;
      if (++steps_ > cfg_.max_steps) fail(ErrorCategory::numeric, "integration step count exceeded max_steps");
      if (!advance(s, h, obs)) return false;
    }
    return true;
  }

  long steps() const { return steps_; }

 private:
  template <class Obs>
  bool advance_impl(AtomState& s, double h, int depth, Obs& obs) {
    if (depth < cfg_.max_refine && needs_refinement(s, h)) {
      return advance_impl(s, 0.5 * h, depth + 1, obs) && advance_impl(s, 0.5 * h, depth + 1, obs);
    }
    const AtomState before = s;
    const FieldSample sample_before = sample_;
    const Vec3 accel_before = accel_;
    const Vec3 v_half = s.velocity + accel_ * (0.5 * h);
    s.position += v_half * h;
    s.t += h;
    update(s);
    s.velocity = v_half + accel_ * (0.5 * h);
    // The end point must pass the same test as the start, which keeps step
    // selection time-symmetric; one-sided refinement drains energy near zeros.
    if (depth < cfg_.max_refine && needs_refinement(s, h)) {
      s = before;
      sample_ = sample_before;
      accel_ = accel_before;
      return advance_impl(s, 0.5 * h, depth + 1, obs) && advance_impl(s, 0.5 * h, depth + 1, obs);
    }
    return obs(before, s, sample_);
  }

  bool needs_refinement(const AtomState& s, double h) const {
    const double b = norm(sample_.B);
    const double rate = norm(sample_.J * s.velocity);
    return h * rate > cfg_.refine_eta * b;
  }

  void update(const AtomState& s);

  const FieldSource* field_;
  PhysicalConstants constants_;
  GravityFrame gravity_;
  IntegratorConfig cfg_;
  FieldSample sample_;
  Vec3 accel_;
  long steps_ = 0;
};

}  // namespace ringsim
