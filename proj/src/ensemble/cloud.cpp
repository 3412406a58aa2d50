#include "ringsim/ensemble/cloud.hpp"

#include <cmath>

#include "ringsim/core/error.hpp"
#include "ringsim/core/rng.hpp"
#include "ringsim/dynamics/spin.hpp"

namespace ringsim {

void CloudSpec::validate() const {
  require(atoms >= 1, ErrorCategory::invalid_input, "cloud must contain at least one atom");
  require(sigma_long >= 0.0 && sigma_trans >= 0.0, ErrorCategory::invalid_input, "cloud sigmas must be >= 0");
  require(T_long >= 0.0 && T_trans >= 0.0, ErrorCategory::invalid_input, "cloud temperatures must be >= 0");
  require(std::isfinite(height) && std::isfinite(azimuth) && std::isfinite(mean_speed), ErrorCategory::invalid_input,
          "cloud parameters must be finite");
}

namespace {

struct Draw {
  double s_long, s_t1, s_t2;
  double v_long, v_t1, v_t2;
};

Draw draw(const CloudSpec& spec, const PhysicalConstants& c, std::mt19937_64& rng) {
  const double svl = std::sqrt(c.kB() * spec.T_long / c.mass());
  const double svt = std::sqrt(c.kB() * spec.T_trans / c.mass());
  Draw d;
  d.s_long = spec.sigma_long * normal(rng);
  d.s_t1 = spec.sigma_trans * normal(rng);
  d.s_t2 = spec.sigma_trans * normal(rng);
  d.v_long = spec.mean_speed + svl * normal(rng);
  d.v_t1 = svt * normal(rng);
  d.v_t2 = svt * normal(rng);
  return d;
}

void orient_spin(AtomState& s, const FieldSource* field) {
  if (!field) return;
  const Vec3 B = field->field(s.position, s.t);
  if (norm(B) > 0.0) s.spin = trapped_spin(B);
}

}  // namespace

std::vector<AtomState> sample_cloud(const CloudSpec& spec, const CloudFrame& frame, const PhysicalConstants& constants,
                                    std::uint64_t seed, std::uint64_t stream, const FieldSource* field, double t0) {
  spec.validate();
  std::vector<AtomState> out(spec.atoms);
  for (std::size_t i = 0; i < spec.atoms; ++i) {
    auto rng = substream(seed, i, stream);
    const Draw d = draw(spec, constants, rng);
    AtomState& s = out[i];
    s.t = t0;
    s.stage = Stage::guide;
    s.position = frame.center + frame.e_long * d.s_long + frame.e_t1 * d.s_t1 + frame.e_t2 * d.s_t2;
    s.velocity = frame.e_long * d.v_long + frame.e_t1 * d.v_t1 + frame.e_t2 * d.v_t2;
    orient_spin(s, field);
  }
  return out;
}

std::vector<AtomState> sample_ring_cloud(const CloudSpec& spec, const RingGeometry& ring, double radius,
                                         const PhysicalConstants& constants, std::uint64_t seed, std::uint64_t stream,
                                         const FieldSource* field, double t0, const GravityFrame* gravity) {
  spec.validate();
  require(radius > 0.0, ErrorCategory::invalid_input, "ring cloud radius must be positive");
  const Vec3 e1 = ring.reference;
  const Vec3 e2 = ring.in_plane_second();
  std::vector<AtomState> out(spec.atoms);
  for (std::size_t i = 0; i < spec.atoms; ++i) {
    auto rng = substream(seed, i, stream);
    const Draw d = draw(spec, constants, rng);
    const double phi = spec.azimuth + d.s_long / radius;
    const Vec3 e_rho = e1 * std::cos(phi) + e2 * std::sin(phi);
    const Vec3 e_phi = e2 * std::cos(phi) - e1 * std::sin(phi);
    AtomState& s = out[i];
    s.t = t0;
    s.stage = Stage::ring;
    s.position = ring.center + e_rho * (radius + d.s_t1) + ring.axis * d.s_t2;
    double v_long = d.v_long;
    if (gravity && gravity->enabled) {
      const double v2 = v_long * v_long - 2.0 * constants.g_grav() * gravity->height(s.position);
      require(v2 > 0.0, ErrorCategory::invalid_input, "ring cloud atom cannot reach its starting height");
      v_long = std::copysign(std::sqrt(v2), v_long);
    }
    s.velocity = e_phi * v_long + e_rho * d.v_t1 + ring.axis * d.v_t2;
    orient_spin(s, field);
  }
  return out;
}

}  // namespace ringsim
