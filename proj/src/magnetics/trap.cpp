#include "ringsim/magnetics/trap.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "ringsim/core/error.hpp"

namespace ringsim {

double total_potential(const Vec3& p, const FieldSource& source, const PhysicalConstants& constants,
                       const GravityFrame& gravity, double t) {
  const Vec3 B = source.field(p, t);
  return constants.mu_m() * norm(B) + constants.mass() * constants.g_grav() * gravity.height(p);
}

double loss_radius(double gradient, double transverse_speed, const PhysicalConstants& constants, double kappa) {
  require(gradient > 0.0, ErrorCategory::invalid_input, "gradient must be positive");
  return std::sqrt(kappa * constants.hbar() * transverse_speed / (constants.mu_m() * gradient));
}

double linear_well_frequency(double gradient, double energy, const PhysicalConstants& constants) {
  require(energy > 0.0, ErrorCategory::invalid_input, "thermal energy must be positive");
  return constants.mu_m() * gradient / (4.0 * std::sqrt(2.0 * constants.mass() * energy));
}

namespace {

// Cross-section analysis shared by guide and ring: `zero_guess` lies near the
// field zero, `e_sep` points toward a wire, `escape` lists candidate barrier
// directions (the lowest barrier wins).
TrapCharacterization characterize_section(const FieldSource& src, const Vec3& zero_guess, const Vec3& e_sep,
                                          const Vec3& e_bis, std::initializer_list<Vec3> escape,
                                          double separation, double ideal_saddle,
                                          const PhysicalConstants& constants, const TrapOptions& opts) {
  // Newton iteration for B = 0 in the transverse plane.
  Vec3 z0 = zero_guess;
  for (int it = 0; it < 50; ++it) {
    const FieldSample s = src.sample(z0, 0.0);
    // 2x2 system in (e_bis, e_sep) using the transverse field components
    const Vec3 Je_b = s.J * e_bis;
    const Vec3 Je_s = s.J * e_sep;
    const double a11 = dot(e_bis, Je_b), a12 = dot(e_bis, Je_s);
    const double a21 = dot(e_sep, Je_b), a22 = dot(e_sep, Je_s);
    const double r1 = dot(e_bis, s.B), r2 = dot(e_sep, s.B);
    const double det = a11 * a22 - a12 * a21;
    if (det == 0.0 || !std::isfinite(det)) break;
    const double dx = (a22 * r1 - a12 * r2) / det;
    const double dy = (a11 * r2 - a21 * r1) / det;
    z0 -= e_bis * dx + e_sep * dy;
    if (std::hypot(dx, dy) < 1e-15 * separation) break;
  }
  const FieldSample at_zero = src.sample(z0, 0.0);
  const double scale = ideal_saddle;
  require(norm(at_zero.B) < 1e-9 * scale && std::abs(dot(z0 - zero_guess, e_sep)) < 0.5 * separation,
          ErrorCategory::geometry, "no field zero found between the wires");

  TrapCharacterization tc;
  tc.field_zero = z0;
  tc.mu_m = constants.mu_m();
  tc.ideal_saddle_field = ideal_saddle;

  // Transverse gradient from central differences of B: rms singular value of
  // the 2x2 transverse Jacobian (exactly B' for a quadrupole).
  {
    const double h = opts.fd_step;
    const Vec3 db_b = (src.field(z0 + e_bis * h, 0.0) - src.field(z0 - e_bis * h, 0.0)) / (2.0 * h);
    const Vec3 db_s = (src.field(z0 + e_sep * h, 0.0) - src.field(z0 - e_sep * h, 0.0)) / (2.0 * h);
    const double fro2 = norm2(db_b) + norm2(db_s);
    tc.gradient_center = std::sqrt(0.5 * fro2);
  }
  require(tc.gradient_center > 0.0, ErrorCategory::geometry, "zero gradient at the field zero");

  // Saddle: maximum of |B| along each escape ray, golden-section refined.
  double best_field = std::numeric_limits<double>::infinity();
  for (const Vec3& dir : escape) {
    auto f = [&](double s) { return norm(src.field(z0 + dir * s, 0.0)); };
    const int n = 400;
    const double span = 3.0 * separation;
    int imax = 1;
    double fmax = -1.0;
    for (int i = 1; i <= n; ++i) {
      const double v = f(span * i / n);
      if (v > fmax) {
        fmax = v;
        imax = i;
      }
    }
    require(imax < n, ErrorCategory::numeric,
            "saddle search did not bracket a maximum within " + std::to_string(span) + " m");
    double lo = span * (imax - 1) / n;
    double hi = span * (imax + 1) / n;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo);
    double d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    int it = 0;
    for (; it < 200 && hi - lo > 1e-13 * separation; ++it) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = f(d);
      }
    }
    require(it < 200, ErrorCategory::numeric, "saddle search did not converge");
    const double s_best = 0.5 * (lo + hi);
    const double b_best = f(s_best);
    if (b_best < best_field) {
      best_field = b_best;
      tc.saddle_point = z0 + dir * s_best;
    }
  }
  tc.saddle_field = best_field;
  tc.depth = constants.mu_m() * tc.saddle_field;
  tc.depth_kelvin = tc.depth / constants.kB();
  tc.effective_frequency = linear_well_frequency(tc.gradient_center, opts.thermal_energy, constants);
  const double v_thermal = std::sqrt(opts.thermal_energy / constants.mass());
  tc.loss_radius = loss_radius(tc.gradient_center, v_thermal, constants, opts.kappa);
  return tc;
}

}  // namespace

TrapCharacterization characterize_trap(const GuideGeometry& guide, const PhysicalConstants& constants,
                                       const TrapOptions& opts) {
  guide.validate();
  require(guide.current != 0.0, ErrorCategory::geometry, "zero guide current: no trap");
  const GuideField src(guide);
  const double d = guide.separation;
  const double ideal = codata::mu0 * std::abs(guide.current) / (codata::pi * d);
  const Vec3 bis = guide.bisector_axis();
  return characterize_section(src, guide.origin, guide.separation_axis, bis, {bis, -bis}, d, ideal,
                              constants, opts);
}

TrapCharacterization characterize_trap(const RingGeometry& ring, const PhysicalConstants& constants,
                                       const TrapOptions& opts) {
  ring.validate();
  require(ring.current != 0.0, ErrorCategory::geometry, "zero ring current: no trap");
  RingGeometry bare = ring;
  bare.junction.reset();
  const RingField src(bare);
  const double d = ring.separation;
  const double ideal = codata::mu0 * std::abs(ring.current) / (codata::pi * d);
  const Vec3 guess = ring.center + ring.reference * src.zero_radius();
  return characterize_section(src, guess, ring.axis, ring.reference, {ring.reference, -ring.reference}, d,
                              ideal, constants, opts);
}

}  // namespace ringsim
