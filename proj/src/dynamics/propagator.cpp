#include "ringsim/dynamics/propagator.hpp"

#include <cstdio>

namespace ringsim {

std::string_view to_string(LossCause c) {
  switch (c) {
    case LossCause::none: return "alive";
    case LossCause::majorana: return "majorana";
    case LossCause::over_barrier: return "over_barrier";
    case LossCause::background_gas: return "background_gas";
    case LossCause::removed_by_shaping: return "removed_by_shaping";
    case LossCause::reload_scatter: return "reload_scatter";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  require(dt > 0.0 && std::isfinite(dt), ErrorCategory::invalid_input, "integrator dt must be positive");
  require(max_steps > 0, ErrorCategory::invalid_input, "max_steps must be positive");
  require(spin_substeps >= 0, ErrorCategory::invalid_input, "spin substep ratio must be >= 1 or 0 (auto)");
  require(refine_eta > 0.0, ErrorCategory::invalid_input, "refine_eta must be positive");
  require(max_refine >= 0 && max_refine <= 52, ErrorCategory::invalid_input, "max_refine must lie in [0, 52]");
  require(field_regularization > 0.0, ErrorCategory::invalid_input, "field regularization must be positive");
  require(sample_stride >= 1, ErrorCategory::invalid_input, "sample stride must be >= 1");
}

Propagator::Propagator(const FieldSource& field, const PhysicalConstants& constants, const GravityFrame& gravity,
                       const IntegratorConfig& cfg)
    : field_(&field), constants_(constants), gravity_(gravity), cfg_(cfg) {
  cfg_.validate();
}

void Propagator::set_field(const FieldSource& field, const AtomState& s) {
  field_ = &field;
  update(s);
}

void Propagator::prime(const AtomState& s) { update(s); }

void Propagator::update(const AtomState& s) {
  sample_ = field_->sample(s.position, s.t);
  const double b2 = norm2(sample_.B);
  const double breg = cfg_.field_regularization;
  const double denom = b2 < breg * breg ? std::sqrt(b2 + breg * breg) : std::sqrt(b2);
  const Vec3 grad_b = transpose_mul(sample_.J, sample_.B) / denom;
  accel_ = grad_b * (-constants_.mu_m() / constants_.mass());
  if (gravity_.enabled) accel_ -= gravity_.up * constants_.g_grav();
  if (!is_finite(accel_)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "non-finite force at (%.9g, %.9g, %.9g) m, t = %.9g s", s.position.x,
                  s.position.y, s.position.z, s.t);
    fail(ErrorCategory::numeric, buf);
  }
}

double Propagator::energy(const AtomState& s) const {
  return 0.5 * constants_.mass() * norm2(s.velocity) + constants_.mu_m() * norm(sample_.B) +
         constants_.mass() * constants_.g_grav() * gravity_.height(s.position);
}

}  // namespace ringsim
