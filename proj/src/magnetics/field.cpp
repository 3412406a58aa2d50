#include "ringsim/magnetics/field.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ringsim/core/constants.hpp"
#include "ringsim/core/dual.hpp"
#include "ringsim/core/error.hpp"

namespace ringsim {

namespace {

constexpr double kInvTwoPi = 1.0 / (2.0 * codata::pi);
constexpr double kInvFourPi = 1.0 / (4.0 * codata::pi);
constexpr double kEps = std::numeric_limits<double>::epsilon();

[[noreturn]] void singular(const Vec3& p) {
  fail(ErrorCategory::singularity, "field evaluated on a wire at (" + std::to_string(p.x) + ", " +
                                       std::to_string(p.y) + ", " + std::to_string(p.z) + ")");
}

double scale_of(const Vec3& p, const Vec3& q) { return std::max({norm(p), norm(q), 1e-3}); }

// Complete elliptic integrals K(k), E(k) from the complementary modulus k'
// by the arithmetic-geometric mean.
template <class T>
void elliptic_KE(const T& kprime, T& K, T& E) {
  using std::sqrt;
  T a(1.0);
  T b = kprime;
  T c2 = 1.0 - kprime * kprime;  // c_0^2 = k^2
  T sum = 0.5 * c2;
  double weight = 0.5;
  for (int n = 1; n < 40; ++n) {
    const T c = 0.5 * (a - b);
    const T a_next = 0.5 * (a + b);
    b = sqrt(a * b);
    a = a_next;
    weight *= 2.0;
    sum += weight * (c * c);
    if (std::abs(value_of(c)) < 1e-17 * std::abs(value_of(a))) break;
  }
  K = codata::pi / (2.0 * a);
  E = K * (1.0 - sum);
}

template <class T>
void loop_meridian(const T& rho, const T& z, double a, T& b_rho, T& b_z) {
  using std::sqrt;
  const T r2 = rho * rho + z * z;
  const T alpha2 = a * a + r2 - 2.0 * a * rho;
  const T beta2 = a * a + r2 + 2.0 * a * rho;
  const T beta = sqrt(beta2);
  const T kprime = sqrt(alpha2) / beta;
  T K, E;
  elliptic_KE(kprime, K, E);
  const T pre = 1.0 / (2.0 * codata::pi * alpha2 * beta);
  b_z = pre * ((a * a - r2) * E + alpha2 * K);
  b_rho = pre * z / rho * ((a * a + r2) * E - alpha2 * K);
}

}  // namespace

Vec3 field_quadrupole(const Vec3& p, const GuideGeometry& guide) {
  require(is_finite(p), ErrorCategory::invalid_input, "non-finite position");
  const Vec3 rel = p - guide.origin;
  const double s = dot(rel, guide.axis);
  const double gradient = quadrupole_gradient(guide, s);
  const Vec3 ey = guide.separation_axis;
  const Vec3 ex = guide.bisector_axis();
  const double x = dot(rel, ex);
  const double y = dot(rel, ey);
  return (ex * y + ey * x) * gradient;
}

double quadrupole_gradient(const GuideGeometry& guide, double s) {
  const double d = guide.separation_at(s);
  require(d > 0.0, ErrorCategory::invalid_input, "guide spacing is non-positive at this axial position");
  return 4.0 * codata::mu0 * guide.current / (codata::pi * d * d);
}

JunctionModifier::JunctionModifier(const RingGeometry& ring, const JunctionModel& model)
    : ring_(ring), model_(model), width_(model.extent / ring.radius) {}

double JunctionModifier::bump(double dphi) const {
  dphi = std::remainder(dphi, 2.0 * codata::pi);
  if (std::abs(dphi) >= 0.5 * width_) return 0.0;
  return 0.5 * (1.0 + std::cos(2.0 * codata::pi * dphi / width_));
}

double JunctionModifier::bump_slope(double dphi) const {
  dphi = std::remainder(dphi, 2.0 * codata::pi);
  if (std::abs(dphi) >= 0.5 * width_) return 0.0;
  return -(codata::pi / width_) * std::sin(2.0 * codata::pi * dphi / width_);
}

double JunctionModifier::factor(const Vec3& p) const {
  return 1.0 + model_.ripple * bump(ring_.azimuth(p) - model_.azimuth);
}

Vec3 JunctionModifier::factor_gradient(const Vec3& p) const {
  const Vec3 rel = p - ring_.center;
  const Vec3 e1 = ring_.reference;
  const Vec3 e2 = ring_.in_plane_second();
  const double u = dot(rel, e1);
  const double v = dot(rel, e2);
  const double rho2 = u * u + v * v;
  if (rho2 == 0.0) return {};
  const Vec3 grad_phi = (e2 * u - e1 * v) / rho2;
  return grad_phi * (model_.ripple * bump_slope(std::atan2(v, u) - model_.azimuth));
}

void JunctionModifier::apply(const Vec3& p, FieldSample& s) const {
  if (model_.ripple == 0.0) return;
  const double f = factor(p);
  if (f == 1.0) return;
  const Vec3 g = factor_gradient(p);
  s.J = s.J * f + Mat3::outer(s.B, g);
  s.B = s.B * f;
}

Vec3 JunctionModifier::apply(const Vec3& p, const Vec3& B) const {
  if (model_.ripple == 0.0) return B;
  return B * factor(p);
}

Vec3 infinite_line_field(const Vec3& p, const InfiniteLine& line, double current) {
  const Vec3 rel = p - line.point;
  const Vec3 rperp = rel - line.direction * dot(rel, line.direction);
  const double r2 = norm2(rperp);
  const double tol = 10.0 * kEps * scale_of(p, line.point);
  if (r2 <= tol * tol) singular(p);
  return cross(line.direction, rperp) * (codata::mu0 * current * kInvTwoPi / r2);
}

FieldSample infinite_line_sample(const Vec3& p, const InfiniteLine& line, double current) {
  const Vec3& u = line.direction;
  const Vec3 rel = p - line.point;
  const Vec3 rperp = rel - u * dot(rel, u);
  const double r2 = norm2(rperp);
  const double tol = 10.0 * kEps * scale_of(p, line.point);
  if (r2 <= tol * tol) singular(p);
  const double k = codata::mu0 * current * kInvTwoPi;
  const Vec3 w = cross(u, rperp);
  FieldSample s;
  s.B = w * (k / r2);
  // d(u x r_perp)/dp = [u]_x ; d(r_perp^2)/dp = 2 r_perp^T
  Mat3 ux;
  ux(0, 1) = -u.z; ux(0, 2) = u.y;
  ux(1, 0) = u.z;  ux(1, 2) = -u.x;
  ux(2, 0) = -u.y; ux(2, 1) = u.x;
  s.J = ux * (k / r2) + Mat3::outer(w, rperp) * (-2.0 * k / (r2 * r2));
  return s;
}

Vec3 segment_field(const Vec3& p, const Segment& seg, double current) {
  const Vec3 ab = seg.b - seg.a;
  const double len = norm(ab);
  const Vec3 u = ab / len;
  const Vec3 da = p - seg.a;
  const Vec3 db = p - seg.b;
  const Vec3 rperp = da - u * dot(da, u);
  const double r2 = norm2(rperp);
  const double tol = 10.0 * kEps * scale_of(p, seg.a);
  if (r2 <= tol * tol) {
    // collinear but outside the segment contributes nothing
    const double s = dot(da, u);
    if (s >= 0.0 && s <= len) singular(p);
    return {};
  }
  const double na = norm(da);
  const double nb = norm(db);
  const double f = dot(da, u) / na - dot(db, u) / nb;
  return cross(u, rperp) * (codata::mu0 * current * kInvFourPi * f / r2);
}

namespace {

Vec3 arc_chord_field(const Vec3& p, const Arc& arc, double current, int n) {
  const Vec3 t = cross(arc.normal, arc.start_dir);
  Vec3 prev = arc.center + arc.start_dir * arc.radius;
  Vec3 sum;
  for (int k = 1; k <= n; ++k) {
    const double th = arc.span * static_cast<double>(k) / n;
    const Vec3 next = arc.center + (arc.start_dir * std::cos(th) + t * std::sin(th)) * arc.radius;
    sum += segment_field(p, Segment{prev, next}, current);
    prev = next;
  }
  return sum;
}

Vec3 element_field(const Vec3& p, const WireElement& e, const ExactFieldOptions& opts) {
  if (e.current == 0.0) return {};
  if (const auto* l = std::get_if<InfiniteLine>(&e.shape)) return infinite_line_field(p, *l, e.current);
  if (const auto* s = std::get_if<Segment>(&e.shape)) return segment_field(p, *s, e.current);
  const auto& arc = std::get<Arc>(e.shape);
  const Vec3 fine = arc_chord_field(p, arc, e.current, opts.arc_segments);
  if (!opts.richardson) return fine;
  const Vec3 coarse = arc_chord_field(p, arc, e.current, opts.arc_segments / 2);
  return fine + (fine - coarse) / 3.0;
}

}  // namespace

Vec3 field_exact(const Vec3& p, std::span<const WireElement> elements, const JunctionModifier* junction,
                 const ExactFieldOptions& opts) {
  require(is_finite(p), ErrorCategory::invalid_input, "non-finite position");
  Vec3 B;
  for (const auto& e : elements) B += element_field(p, e, opts);
  if (junction) B = junction->apply(p, B);
  return B;
}

double arc_richardson_estimate(const Vec3& p, std::span<const WireElement> elements,
                               const ExactFieldOptions& opts) {
  Vec3 diff;
  for (const auto& e : elements) {
    if (const auto* arc = std::get_if<Arc>(&e.shape)) {
      diff += arc_chord_field(p, *arc, e.current, opts.arc_segments) -
              arc_chord_field(p, *arc, e.current, opts.arc_segments / 2);
    }
  }
  return norm(diff);
}

void loop_field_meridian(double rho, double z, double a, double& b_rho, double& b_z) {
  if (rho < 1e-9 * a) {
    b_z = 0.5 * a * a / std::pow(a * a + z * z, 1.5);
    b_rho = 0.0;
    return;
  }
  loop_meridian(rho, z, a, b_rho, b_z);
}

FieldSample loop_sample(const Vec3& p, const CircularLoop& loop, double current) {
  const Vec3 rel = p - loop.center;
  const double z = dot(rel, loop.axis);
  const Vec3 rho_vec = rel - loop.axis * z;
  const double rho = norm(rho_vec);
  const double k = codata::mu0 * current;
  FieldSample s;
  if (rho < 1e-9 * loop.radius) {
    const double a = loop.radius;
    const double q = a * a + z * z;
    const double bz = 0.5 * a * a / std::pow(q, 1.5);
    const double dbz_dz = -1.5 * a * a * z / std::pow(q, 2.5);
    s.B = loop.axis * (k * bz);
    s.J = Mat3::outer(loop.axis, loop.axis) * (k * dbz_dz) +
          (Mat3::identity() + Mat3::outer(loop.axis, loop.axis) * -1.0) * (-0.5 * k * dbz_dz);
    return s;
  }
  {
    const double tol = 10.0 * kEps * scale_of(p, loop.center);
    if (std::hypot(rho - loop.radius, z) <= tol) singular(p);
  }
  using D = Dual<2>;
  D brho, bz;
  loop_meridian(D::variable(rho, 0), D::variable(z, 1), loop.radius, brho, bz);
  const Vec3 e_rho = rho_vec / rho;
  const Vec3 e_phi = cross(loop.axis, e_rho);
  const Vec3& n = loop.axis;
  s.B = (e_rho * brho.v + n * bz.v) * k;
  s.J = Mat3::outer(e_rho, e_rho) * brho.d[0] + Mat3::outer(e_rho, n) * brho.d[1] +
        Mat3::outer(n, e_rho) * bz.d[0] + Mat3::outer(n, n) * bz.d[1] +
        Mat3::outer(e_phi, e_phi) * (brho.v / rho);
  s.J *= k;
  return s;
}

double loop_pair_zero_radius(double a, double d) {
  require(a > d && d > 0.0, ErrorCategory::invalid_input, "loop pair needs radius > separation > 0");
  auto axial = [&](double rho) {
    double br, bz;
    loop_field_meridian(rho, 0.5 * d, a, br, bz);
    return bz;
  };
  double lo = a - 0.45 * d;
  double hi = a + 0.45 * d;
  double flo = axial(lo);
  double fhi = axial(hi);
  require(flo * fhi < 0.0, ErrorCategory::geometry, "no field zero between the ring wires");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * a; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = axial(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

GuideField::GuideField(const GuideGeometry& guide) : guide_(guide) {
  const auto elements = guide_elements(guide);
  wires_[0] = std::get<InfiniteLine>(elements[0].shape);
  wires_[1] = std::get<InfiniteLine>(elements[1].shape);
}

FieldSample GuideField::sample_unit(const Vec3& p) const {
  FieldSample a = infinite_line_sample(p, wires_[0], 1.0);
  const FieldSample b = infinite_line_sample(p, wires_[1], 1.0);
  a.B += b.B;
  a.J += b.J;
  return a;
}

FieldSample GuideField::sample(const Vec3& p, double) const {
  FieldSample s = sample_unit(p);
  s.B *= guide_.current;
  s.J *= guide_.current;
  return s;
}

Vec3 GuideField::field(const Vec3& p, double) const {
  return infinite_line_field(p, wires_[0], guide_.current) + infinite_line_field(p, wires_[1], guide_.current);
}

QuadrupoleField::QuadrupoleField(const GuideGeometry& guide) : guide_(guide) { guide.validate(); }

FieldSample QuadrupoleField::sample(const Vec3& p, double) const {
  FieldSample s;
  s.B = field_quadrupole(p, guide_);
  const Vec3 ex = guide_.bisector_axis();
  const Vec3 ey = guide_.separation_axis;
  // taper makes the gradient depend on s; its derivative is dropped (local model)
  const double g = quadrupole_gradient(guide_, dot(p - guide_.origin, guide_.axis));
  s.J = (Mat3::outer(ex, ey) + Mat3::outer(ey, ex)) * g;
  return s;
}

RingField::RingField(const RingGeometry& ring) : ring_(ring) {
  ring.validate();
  for (int i = 0; i < 2; ++i) {
    const double sign = i == 0 ? 1.0 : -1.0;
    loops_[i] = CircularLoop{ring.center + ring.axis * (sign * 0.5 * ring.separation), ring.axis, ring.radius};
  }
  if (ring.junction && ring.junction->ripple > 0.0) junction_.emplace(ring, *ring.junction);
  zero_radius_ = loop_pair_zero_radius(ring.radius, ring.separation);
}

FieldSample RingField::sample_unit(const Vec3& p) const {
  FieldSample a = loop_sample(p, loops_[0], 1.0);
  const FieldSample b = loop_sample(p, loops_[1], 1.0);
  a.B += b.B;
  a.J += b.J;
  return a;
}

FieldSample RingField::sample(const Vec3& p, double) const {
  FieldSample s = sample_unit(p);
  s.B *= ring_.current;
  s.J *= ring_.current;
  if (junction_) junction_->apply(p, s);
  return s;
}

ElementField::ElementField(std::vector<WireElement> elements, std::optional<JunctionModifier> junction,
                           ExactFieldOptions opts, double fd_step)
    : elements_(std::move(elements)), junction_(std::move(junction)), opts_(opts), fd_step_(fd_step) {
  for (const auto& e : elements_) validate(e);
}

Vec3 ElementField::field(const Vec3& p, double) const {
  return field_exact(p, elements_, junction_ ? &*junction_ : nullptr, opts_);
}

FieldSample ElementField::sample(const Vec3& p, double t) const {
  return {field(p, t), finite_difference_jacobian(*this, p, t, fd_step_)};
}

Mat3 finite_difference_jacobian(const FieldSource& src, const Vec3& p, double t, double h) {
  Mat3 J;
  for (int j = 0; j < 3; ++j) {
    Vec3 dp;
    dp[j] = h;
    const Vec3 d = (src.field(p + dp, t) - src.field(p - dp, t)) / (2.0 * h);
    for (int i = 0; i < 3; ++i) J(i, j) = d[i];
  }
  return J;
}

}  // namespace ringsim
