#include "ringsim/dynamics/spin.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ringsim/core/error.hpp"

namespace ringsim {

double gyromagnetic_rate(const PhysicalConstants& constants) { return 2.0 * constants.mu_m() / constants.hbar(); }

double adiabaticity_ratio(const FieldSample& s, const Vec3& velocity, const PhysicalConstants& constants) {
  const double b2 = norm2(s.B);
  if (b2 == 0.0) return std::numeric_limits<double>::infinity();
  const Vec3 dB = s.J * velocity;
  const double rate = norm(cross(s.B, dB)) / b2;
  return rate / (constants.mu_m() * std::sqrt(b2) / constants.hbar());
}

double adiabaticity_ratio(const AtomState& state, const FieldSource& field, const PhysicalConstants& constants) {
  return adiabaticity_ratio(field.sample(state.position, state.t), state.velocity, constants);
}

Vec3 trapped_spin(const Vec3& B, double tilt, double phase) {
  const double b = norm(B);
  require(b > 0.0, ErrorCategory::singularity, "spin orientation undefined at a field zero");
  const Vec3 down = -B / b;
  const Vec3 e1 = any_perpendicular(down);
  const Vec3 e2 = cross(down, e1);
  return down * std::cos(tilt) + (e1 * std::cos(phase) + e2 * std::sin(phase)) * std::sin(tilt);
}

namespace {

// Smallest rotation carrying unit a onto unit b, applied to v.
Vec3 transport(const Vec3& v, const Vec3& a, const Vec3& b) {
  const Vec3 axis = cross(a, b);
  const double s = norm(axis);
  const double c = dot(a, b);
  if (s < 1e-300) return c > 0.0 ? v : rotate(v, any_perpendicular(a), codata::pi);
  return rotate(v, axis / s, std::atan2(s, c));
}

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

}  // namespace

SpinTracker::SpinTracker(const FieldSource& field, const PhysicalConstants& constants, const SpinOptions& opts)
    : field_(&field),
      gamma_(gyromagnetic_rate(constants)),
      mu_over_hbar_(constants.mu_m() / constants.hbar()),
      opts_(opts) {
  require(opts.substeps >= 0, ErrorCategory::invalid_input, "spin substeps must be >= 0");
  require(opts.max_rotation > 0.0 && opts.coarse_limit > 0.0, ErrorCategory::invalid_input,
          "spin rotation limits must be positive");
}

void SpinTracker::reset(const AtomState& s) {
  spin_ = s.spin;
  last_ = {s.t, s.position, s.velocity};
  const Vec3 B = field_->field(s.position, s.t);
  trapped_ = dot(spin_, B) <= 0.0;
  pending_ = false;
  pending_phase_ = 0.0;
  flips_.clear();
  substeps_ = 0;
}

Vec3 SpinTracker::position_at(const Knot& a, const Knot& b, double t) const {
  const double h = b.t - a.t;
  if (h <= 0.0) return b.p;
  const double u = (t - a.t) / h;
  const double u2 = u * u, u3 = u2 * u;
  return a.p * (2 * u3 - 3 * u2 + 1) + a.v * (h * (u3 - 2 * u2 + u)) + b.p * (-2 * u3 + 3 * u2) +
         b.v * (h * (u3 - u2));
}

void SpinTracker::advance(const AtomState& s) {
  const Knot next{s.t, s.position, s.velocity};
  const double h = next.t - last_.t;
  require(h >= 0.0, ErrorCategory::invalid_input, "trajectory samples must be time-ordered");
  if (h == 0.0) return;
  if (opts_.substeps > 0) {
    const int n = opts_.substeps;
    double ta = last_.t;
    for (int k = 1; k <= n; ++k) {
      const double tb = k == n ? next.t : last_.t + h * k / n;
      const double tm = 0.5 * (ta + tb);
      const Vec3 Bm = field_->field(position_at(last_, next, tm), tm);
      const double angle = gamma_ * norm(Bm) * (tb - ta);
      if (angle > opts_.coarse_limit) {
        fail(ErrorCategory::accuracy, "spin substep rotates " + std::to_string(angle) +
                                          " rad (limit " + std::to_string(opts_.coarse_limit) +
                                          "); use more spin substeps or a smaller dt");
      }
      const double bm = norm(Bm);
      if (bm > 0.0) spin_ = rotate(spin_, Bm / bm, angle);
      const Vec3 pb = position_at(last_, next, tb);
      const Vec3 Bb = field_->field(pb, tb);
      finish_substep(tb, pb, Bb, angle);
      ta = tb;
    }
  } else {
    const Vec3 B0 = field_->field(last_.p, last_.t);
    const Vec3 B1 = field_->field(next.p, next.t);
    step_interval(last_, next, last_.t, B0, next.t, B1, 0);
  }
  last_ = next;
}

void SpinTracker::step_interval(const Knot& a, const Knot& b, double t0, const Vec3& B0, double t1,
                                const Vec3& B1, int depth) {
  const double tm = 0.5 * (t0 + t1);
  const Vec3 Bm = field_->field(position_at(a, b, tm), tm);
  const double h = t1 - t0;
  const double b0 = norm(B0), b1 = norm(B1), bm = norm(Bm);
  const double turn = (b0 > 0.0 && b1 > 0.0) ? angle_between(B0, B1) : codata::pi;
  const double larmor = gamma_ * bm * h;
  const bool adiabatic =
      opts_.adiabatic_cutoff > 0.0 && bm > 0.0 && turn / h < opts_.adiabatic_cutoff * mu_over_hbar_ * bm;
  const bool fine = turn <= opts_.max_rotation && (adiabatic || larmor <= opts_.max_rotation);
  if (!fine && depth < opts_.max_depth) {
    step_interval(a, b, t0, B0, tm, Bm, depth + 1);
    step_interval(a, b, tm, Bm, t1, B1, depth + 1);
    return;
  }
  if (adiabatic) {
    spin_ = rotate(spin_, Bm / bm, larmor);
    spin_ = transport(spin_, B0 / b0, B1 / b1);
  } else if (bm > 0.0) {
    spin_ = rotate(spin_, Bm / bm, larmor);
  }
  finish_substep(t1, position_at(a, b, t1), B1, larmor);
}

void SpinTracker::finish_substep(double t, const Vec3& p, const Vec3& B, double larmor_angle) {
  ++substeps_;
  const double proj = dot(spin_, B);
  const bool looks_trapped = proj <= 0.0;
  if (looks_trapped == trapped_) {
    pending_ = false;
    return;
  }
  if (!pending_) {
    pending_ = true;
    pending_t_ = t;
    pending_p_ = p;
    pending_phase_ = 0.0;
    return;
  }
  pending_phase_ += larmor_angle;
  if (pending_phase_ > opts_.flip_persistence * 2.0 * codata::pi) {
    trapped_ = looks_trapped;
    pending_ = false;
    flips_.push_back({pending_t_, pending_p_, !trapped_});
  }
}

SpinHistory precess_spin(std::span<const AtomState> trajectory, const FieldSource& field,
                         const PhysicalConstants& constants, const SpinOptions& opts) {
  require(!trajectory.empty(), ErrorCategory::invalid_input, "empty trajectory");
  SpinHistory out;
  SpinTracker tracker(field, constants, opts);
  tracker.reset(trajectory.front());
  out.spin.reserve(trajectory.size());
  out.spin.push_back(tracker.spin());
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    tracker.advance(trajectory[i]);
    out.spin.push_back(tracker.spin());
  }
  for (const auto& s : out.spin) out.max_norm_error = std::max(out.max_norm_error, std::abs(norm(s) - 1.0));
  out.flips = tracker.flips();
  out.substeps = tracker.substeps();
  return out;
}

}  // namespace ringsim
